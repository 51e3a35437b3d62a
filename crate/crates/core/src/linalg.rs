//! Dense complex linear algebra used throughout the crate.
//!
//! Everything is built on `nalgebra::DMatrix<Complex64>`. The routines here
//! are deliberately small: Hermitian eigen-decompositions, SVD based rank and
//! kernel computations, a Bartels–Stewart Lyapunov solver on top of the
//! complex Schur form, and the Newton iteration for the matrix sign function.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::LinalgError;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

/// Builds a complex matrix from real row-major data.
pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> CMat {
    assert_eq!(data.len(), rows * cols, "real_matrix: data length");
    CMat::from_fn(rows, cols, |i, j| r(data[i * cols + j]))
}

pub fn diag_real(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| if i == j { r(values[i]) } else { ZERO })
}

/// Hermitian part `(A + A*) / 2`.
pub fn herm(a: &CMat) -> CMat {
    (a + a.adjoint()) * r(0.5)
}

pub fn skew(a: &CMat) -> CMat {
    (a - a.adjoint()) * r(0.5)
}

pub fn fro(a: &CMat) -> f64 {
    a.norm()
}

/// Spectral norm (largest singular value). Zero for empty matrices.
pub fn norm2(a: &CMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max)
}

pub fn hermitian_defect(a: &CMat) -> f64 {
    (a - a.adjoint()).norm()
}

/// Eigen-decomposition of the Hermitian part of `a`, eigenvalues ascending.
pub fn herm_eig(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    // Scaling keeps the QL sweep away from subnormals, where it produces NaN.
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return (vec![0.0; n], eye(n));
    }
    let h = herm(a) / r(scale);
    let eig = h.clone().symmetric_eigen();
    let (vals, vecs) = if eig.eigenvalues.iter().all(|v| v.is_finite()) {
        (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), eig.eigenvectors)
    } else {
        match schur(&h) {
            Ok((u, t)) => ((0..n).map(|i| t[(i, i)].re).collect(), u),
            Err(_) => (vec![f64::NAN; n], eye(n)),
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let values = order.iter().map(|&i| vals[i] * scale).collect();
    let vectors = CMat::from_fn(n, n, |row, col| vecs[(row, order[col])]);
    (values, vectors)
}

pub fn herm_eigvals(a: &CMat) -> Vec<f64> {
    herm_eig(a).0
}

pub fn min_eig(a: &CMat) -> f64 {
    herm_eigvals(a).first().copied().unwrap_or(0.0)
}

pub fn max_eig(a: &CMat) -> f64 {
    herm_eigvals(a).last().copied().unwrap_or(0.0)
}

/// Singular values sorted descending.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().cloned().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Default relative threshold for rank decisions.
pub const RANK_RTOL: f64 = 1e-10;

/// Numerical rank with threshold `rtol * sigma_max`.
pub fn rank(a: &CMat, rtol: f64) -> usize {
    let s = singular_values(a);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rtol * smax).count()
}

/// 2-norm condition number; infinite for singular or empty input.
pub fn cond(a: &CMat) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 && s.len() == a.nrows().min(a.ncols()) => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Orthonormal basis of `ker(a)` (columns), together with the numerical rank.
///
/// The matrix is padded to a square one so that the SVD returns the complete
/// right singular basis.
pub fn null_space(a: &CMat, rtol: f64) -> (CMat, usize) {
    let cols = a.ncols();
    if cols == 0 {
        return (zeros(0, 0), 0);
    }
    if a.nrows() == 0 {
        return (eye(cols), 0);
    }
    let rows = a.nrows().max(cols);
    let mut padded = zeros(rows, cols);
    padded.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let rank = if smax == 0.0 { 0 } else { order.iter().filter(|&&i| sv[i] > rtol * smax).count() };
    let kernel_idx = &order[rank..];
    let basis = CMat::from_fn(cols, kernel_idx.len(), |row, col| v_t[(kernel_idx[col], row)].conj());
    (canonical_phase(basis), rank)
}

/// Fixes the arbitrary phase of each column so the entry of largest modulus
/// is real and positive. Makes kernel bases reproducible across runs.
pub fn canonical_phase(mut basis: CMat) -> CMat {
    for mut col in basis.column_iter_mut() {
        let mut best = ZERO;
        for v in col.iter() {
            if v.norm() > best.norm() + 1e-12 {
                best = *v;
            }
        }
        if best.norm() > 0.0 {
            let phase = best.conj() / best.norm();
            col *= phase;
        }
    }
    basis
}

/// Moore–Penrose pseudo-inverse with the default rank threshold.
pub fn pinv(a: &CMat) -> CMat {
    if a.nrows() == 0 || a.ncols() == 0 {
        return zeros(a.ncols(), a.nrows());
    }
    let smax = singular_values(a).first().copied().unwrap_or(0.0);
    let eps = (RANK_RTOL * smax).max(f64::MIN_POSITIVE);
    a.clone().svd(true, true).pseudo_inverse(eps).expect("SVD with both factors")
}

/// Solves `a x = b` by LU; fails when a pivot underflows relative to the
/// matrix scale.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat, LinalgError> {
    let n = a.nrows();
    if n != a.ncols() || b.nrows() != n {
        return Err(LinalgError::Shape(format!(
            "solve: {}x{} with rhs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if n == 0 {
        return Ok(zeros(0, b.ncols()));
    }
    let lu = a.clone().lu();
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let u = lu.u();
    let min_pivot = (0..n).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-14 * scale.max(f64::MIN_POSITIVE)) {
        return Err(LinalgError::Singular);
    }
    lu.solve(b).ok_or(LinalgError::Singular)
}

pub fn inverse(a: &CMat) -> Result<CMat, LinalgError> {
    solve(a, &eye(a.nrows()))
}

/// Lower Cholesky factor `L` with `a = L L*`.
pub fn cholesky(a: &CMat) -> Result<CMat, LinalgError> {
    // The complex factorization takes complex square roots of the pivots, so
    // positivity has to be checked on the factor's diagonal.
    let l = a.clone().cholesky().map(|ch| ch.unpack()).ok_or(LinalgError::NotPositiveDefinite)?;
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let ok = l.diagonal().iter().all(|d| d.re > 0.0 && d.im.abs() <= 1e-12 * d.re && d.re * d.re > 1e-15 * scale);
    if ok {
        Ok(l)
    } else {
        Err(LinalgError::NotPositiveDefinite)
    }
}

/// Deterministic unitary `Q` from the QR factorization of a fixed
/// pseudo-random matrix.
fn scrambler(n: usize, round: u64) -> CMat {
    let mut state = 0x9e37_79b9_7f4a_7c15u64 ^ round.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let g = CMat::from_fn(n, n, |_, _| c(next(), next()));
    g.qr().q()
}

/// Complex Schur form `a = U T U*`.
///
/// The unshifted-deflation QR sweep in nalgebra stalls on some spectra that
/// are symmetric about the imaginary axis; a few seeded unitary similarity
/// transforms give it a different Hessenberg form to work on.
pub fn schur(a: &CMat) -> Result<(CMat, CMat), LinalgError> {
    let n = a.nrows();
    if n == 0 {
        return Ok((zeros(0, 0), zeros(0, 0)));
    }
    let max_iter = 200 * n.max(10);
    if let Some(s) = a.clone().try_schur(f64::EPSILON, max_iter) {
        return Ok(s.unpack());
    }
    for round in 0..4 {
        let q = scrambler(n, round);
        let b = q.adjoint() * a * &q;
        if let Some(s) = b.try_schur(f64::EPSILON, max_iter) {
            let (u, t) = s.unpack();
            return Ok((q * u, t));
        }
    }
    Err(LinalgError::NoConvergence)
}

/// Complex eigenvalues via the Schur form; NaN-filled if the QR sweep fails.
pub fn eigvals(a: &CMat) -> Vec<Complex64> {
    match schur(a) {
        Ok((_, t)) => (0..a.nrows()).map(|i| t[(i, i)]).collect(),
        Err(_) => vec![c(f64::NAN, f64::NAN); a.nrows()],
    }
}

/// Largest real part of the spectrum; `-inf` for empty matrices, NaN if the
/// eigenvalues could not be computed.
pub fn spectral_abscissa(a: &CMat) -> f64 {
    let eigs = eigvals(a);
    if eigs.iter().any(|z| z.re.is_nan()) {
        return f64::NAN;
    }
    eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Solves the continuous Lyapunov equation `a* X + X a + q = 0`.
///
/// Bartels–Stewart: reduce `a = U T U*` to complex Schur form, then solve the
/// triangular system `T* Y + Y T = -U* q U` column by column.
pub fn lyapunov(a: &CMat, q: &CMat) -> Result<CMat, LinalgError> {
    let n = a.nrows();
    if n == 0 {
        return Ok(zeros(0, 0));
    }
    let (u, t) = schur(a)?;
    let qt = u.adjoint() * q * &u;
    let th = t.adjoint();
    let scale = t.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let mut y = zeros(n, n);
    for j in 0..n {
        // (T* + t_jj I) y_j = -q_j - sum_{k<j} y_k t_kj ; T* is lower triangular.
        let mut rhs: CVec = -qt.column(j).clone_owned();
        for k in 0..j {
            let tkj = t[(k, j)];
            if tkj != ZERO {
                rhs -= y.column(k) * tkj;
            }
        }
        let shift = t[(j, j)];
        let mut col = CVec::zeros(n);
        for i in 0..n {
            let mut acc = rhs[i];
            for l in 0..i {
                acc -= th[(i, l)] * col[l];
            }
            let diag = th[(i, i)] + shift;
            if diag.norm() <= 1e-14 * scale {
                return Err(LinalgError::Singular);
            }
            col[i] = acc / diag;
        }
        y.set_column(j, &col);
    }
    Ok(herm(&(&u * y * u.adjoint())))
}

/// Matrix sign function by the scaled Newton iteration.
///
/// Fails when an eigenvalue sits (numerically) on the imaginary axis, which
/// shows up as a singular iterate or a stalled iteration.
pub fn matrix_sign(a: &CMat, max_iter: usize) -> Result<CMat, LinalgError> {
    let n = a.nrows();
    let mut z = a.clone();
    let mut prev = f64::INFINITY;
    for _ in 0..max_iter {
        let zinv = inverse(&z)?;
        // Spectral-norm scaling: mu = sqrt(|Z^-1| / |Z|).
        let mu = {
            let na = norm2(&z);
            let ni = norm2(&zinv);
            if na > 0.0 && ni > 0.0 {
                (ni / na).sqrt()
            } else {
                1.0
            }
        };
        let next = (&z * r(mu) + zinv * r(1.0 / mu)) * r(0.5);
        let delta = (&next - &z).norm();
        let size = next.norm().max(1.0);
        z = next;
        // Converged, or stagnated at round-off level once quadratic convergence stops.
        let stalled = delta <= 1e-8 * size && delta > 0.5 * prev;
        prev = delta;
        if delta <= 1e-13 * size * (n as f64).sqrt() || stalled {
            // One more unscaled step polishes the converged iterate.
            let zinv = inverse(&z)?;
            return Ok((&z + zinv) * r(0.5));
        }
        if !z.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(LinalgError::NoConvergence);
        }
    }
    Err(LinalgError::NoConvergence)
}

/// Inverse square root of a Hermitian positive definite matrix.
pub fn herm_inv_sqrt(a: &CMat) -> Result<CMat, LinalgError> {
    let (vals, vecs) = herm_eig(a);
    if vals.iter().any(|&v| v <= 0.0) {
        return Err(LinalgError::NotPositiveDefinite);
    }
    let d = diag_real(&vals.iter().map(|v| 1.0 / v.sqrt()).collect::<Vec<_>>());
    Ok(&vecs * d * vecs.adjoint())
}

pub fn herm_sqrt(a: &CMat) -> Result<CMat, LinalgError> {
    let (vals, vecs) = herm_eig(a);
    if vals.iter().any(|&v| v < -1e-14 * vals.iter().cloned().fold(1.0, f64::max)) {
        return Err(LinalgError::NotPositiveDefinite);
    }
    let d = diag_real(&vals.iter().map(|v| v.max(0.0).sqrt()).collect::<Vec<_>>());
    Ok(&vecs * d * vecs.adjoint())
}

/// Block-diagonal assembly.
pub fn block_diag(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), (b.nrows(), b.ncols())).copy_from(b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}

/// `[[a, b], [c, d]]` with conforming shapes.
pub fn block2(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> CMat {
    let (m, n) = (a.nrows() + c.nrows(), a.ncols() + b.ncols());
    let mut out = zeros(m, n);
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out.view_mut((a.nrows(), 0), c.shape()).copy_from(c);
    out.view_mut((a.nrows(), a.ncols()), d.shape()).copy_from(d);
    out
}

pub fn vstack(a: &CMat, b: &CMat) -> CMat {
    let cols = a.ncols().max(b.ncols());
    let mut out = zeros(a.nrows() + b.nrows(), cols);
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

pub fn hstack(a: &CMat, b: &CMat) -> CMat {
    let rows = a.nrows().max(b.nrows());
    let mut out = zeros(rows, a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

/// Real part of `x* m y`.
pub fn inner_re(x: &CVec, m: &CMat, y: &CVec) -> f64 {
    (x.adjoint() * m * y)[(0, 0)].re
}

pub fn is_finite(a: &CMat) -> bool {
    a.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMat {
        CMat::from_row_slice(
            3,
            3,
            &[
                c(-1.0, 0.2),
                c(0.5, 0.0),
                c(0.0, 1.0),
                c(0.0, 0.0),
                c(-2.0, 0.0),
                c(0.3, -0.4),
                c(0.1, 0.0),
                c(0.0, 0.0),
                c(-0.5, 1.0),
            ],
        )
    }

    #[test]
    fn lyapunov_residual_is_small() {
        let a = sample();
        let q = eye(3);
        let x = lyapunov(&a, &q).unwrap();
        let res = a.adjoint() * &x + &x * &a + &q;
        assert!(res.norm() < 1e-12, "residual {}", res.norm());
        assert!(min_eig(&x) > 0.0);
    }

    #[test]
    fn null_space_of_coordinate_row() {
        let w = real_matrix(1, 4, &[1.0, 0.0, 0.0, 0.0]);
        let (k, rank) = null_space(&w, RANK_RTOL);
        assert_eq!(rank, 1);
        assert_eq!(k.ncols(), 3);
        assert!((&w * &k).norm() < 1e-14);
        assert!((k.adjoint() * &k - eye(3)).norm() < 1e-12);
    }

    #[test]
    fn null_space_of_empty_rows_is_identity() {
        let w = zeros(0, 4);
        let (k, rank) = null_space(&w, RANK_RTOL);
        assert_eq!(rank, 0);
        assert_eq!(k, eye(4));
    }

    #[test]
    fn sign_of_split_spectrum() {
        let a = diag_real(&[-2.0, 3.0, -0.5]);
        let s = matrix_sign(&a, 100).unwrap();
        assert!((s - diag_real(&[-1.0, 1.0, -1.0])).norm() < 1e-12);
    }

    #[test]
    fn sign_fails_on_imaginary_axis() {
        let a = real_matrix(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(matrix_sign(&a, 60).is_err());
    }

    #[test]
    fn singular_solve_is_reported() {
        let a = real_matrix(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(solve(&a, &eye(2)), Err(LinalgError::Singular)));
    }

    #[test]
    fn pinv_of_row_is_min_norm_right_inverse() {
        let w = real_matrix(1, 2, &[1.0, 1.0]);
        let p = pinv(&w);
        assert!((&w * &p - eye(1)).norm() < 1e-14);
        assert!((p - real_matrix(2, 1, &[0.5, 0.5])).norm() < 1e-14);
    }
}
