//! LQ optimal control for `J(x0, u) = int ||u||^2 + ||y||^2 dt` in the
//! `M`-weighted state space.
//!
//! With `X = MP` the `M`-weighted Riccati equation is the standard one
//!
//! ```text
//! A*X + XA + C*C = (XB + C*D) R^-1 (B*X + D*C),   R = I + D*D,
//! ```
//!
//! and the optimal feedback is `u = K x` with `K = -R^-1 (B*X + D*C)`.
//! Two independent solvers are provided: Newton-Kleinman (main) and a
//! Hamiltonian stable-subspace split through the matrix sign function
//! (oracle).

use serde::Serialize;

use crate::error::RiccatiError;
use crate::linalg::{self, r, CMat, CVec};
use crate::passivity::PassivityCertificate;
use crate::system::DiscreteSystem;

/// Closed-loop eigenvalues closer than this to the imaginary axis are flagged.
pub const MARGINAL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    NewtonKleinman,
    HamiltonianSign,
    ExplicitImpedance,
    ExplicitScattering,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    /// `M`-self-adjoint cost operator: `J = x* M P x`.
    pub p: CMat,
    pub k_fb: CMat,
    /// Factor `E&F(x; u) = E x + F u`.
    pub e: CMat,
    pub f: CMat,
    pub residual_care: f64,
    pub residual_node: f64,
    pub contraction_margin: f64,
    pub closed_loop_abscissa: f64,
    pub marginally_stabilizing: bool,
    pub method: Method,
    pub iterations: usize,
}

/// Serializable summary (matrices omitted).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionReport {
    pub method: Method,
    pub residual_care: f64,
    pub residual_node: f64,
    pub contraction_margin: f64,
    pub contracts: bool,
    pub closed_loop_abscissa: f64,
    pub marginally_stabilizing: bool,
    pub iterations: usize,
    pub p_minus_identity: f64,
    /// Stability is only established for the discrete system.
    pub stability_scope: &'static str,
}

impl RiccatiSolution {
    pub fn report(&self) -> SolutionReport {
        SolutionReport {
            method: self.method,
            residual_care: self.residual_care,
            residual_node: self.residual_node,
            contraction_margin: self.contraction_margin,
            contracts: self.contraction_margin >= -1e-8,
            closed_loop_abscissa: self.closed_loop_abscissa,
            marginally_stabilizing: self.marginally_stabilizing,
            iterations: self.iterations,
            p_minus_identity: (&self.p - linalg::eye(self.p.nrows())).norm(),
            stability_scope: "discrete-level stability only",
        }
    }
}

fn check(sys: &DiscreteSystem) -> Result<(), RiccatiError> {
    sys.check_weight()?;
    Ok(())
}

fn weight_r(sys: &DiscreteSystem) -> CMat {
    linalg::eye(sys.inputs()) + sys.d.adjoint() * &sys.d
}

/// `K = -R^-1 (B*X + D*C)`.
fn gain_from(sys: &DiscreteSystem, x: &CMat) -> Result<CMat, RiccatiError> {
    let rhs = sys.b.adjoint() * x + sys.d.adjoint() * &sys.c;
    Ok(-linalg::solve(&weight_r(sys), &rhs)?)
}

/// Standard-form CARE defect in `X = MP`.
fn care_defect_x(sys: &DiscreteSystem, x: &CMat) -> Result<CMat, RiccatiError> {
    let s = x * &sys.b + sys.c.adjoint() * &sys.d;
    let rinv_s = linalg::solve(&weight_r(sys), &s.adjoint())?;
    Ok(sys.a.adjoint() * x + x * &sys.a + sys.c.adjoint() * &sys.c - s * rinv_s)
}

/// `||M^-1 defect(MP)||_F / (1 + ||P||)`.
pub fn care_residual(sys: &DiscreteSystem, p: &CMat) -> Result<f64, RiccatiError> {
    let x = linalg::herm(&(&sys.m * p));
    let defect = linalg::solve(&sys.m, &care_defect_x(sys, &x)?)?;
    Ok(defect.norm() / (1.0 + linalg::norm2(p)))
}

/// Hermitian matrix of the node Riccati defect
/// `2 Re<Ax + Bu, Px>_M + ||Cx + Du||^2 + ||u||^2 - ||Ex + Fu||^2`.
pub fn node_defect_form(sys: &DiscreteSystem, p: &CMat, e: &CMat, f: &CMat) -> CMat {
    let x = p.adjoint() * &sys.m;
    let xx = &x * &sys.a + sys.a.adjoint() * x.adjoint() + sys.c.adjoint() * &sys.c - e.adjoint() * e;
    let xu = &x * &sys.b + sys.c.adjoint() * &sys.d - e.adjoint() * f;
    let uu = sys.d.adjoint() * &sys.d + linalg::eye(sys.inputs()) - f.adjoint() * f;
    linalg::herm(&linalg::block2(&xx, &xu, &xu.adjoint(), &uu))
}

/// Block-wise relative defect of the node Riccati form: each of the
/// `xx`, `xu`, `uu` blocks is divided by the size of the terms entering it,
/// and the largest ratio is returned. Unlike a single data-norm scaling this
/// does not fade on fine grids, where `|MA|` grows but the boundary coupling
/// blocks do not.
pub fn node_riccati_residual(sys: &DiscreteSystem, p: &CMat, e: &CMat, f: &CMat) -> f64 {
    let form = node_defect_form(sys, p, e, f);
    let (m, k) = (sys.states(), sys.inputs());
    let np = linalg::norm2(p);
    let (nc, nd, ne, nf) = (linalg::norm2(&sys.c), linalg::norm2(&sys.d), linalg::norm2(e), linalg::norm2(f));
    let s_xx = 2.0 * np * linalg::norm2(&(&sys.m * &sys.a)) + nc * nc + ne * ne;
    let s_xu = np * linalg::norm2(&(&sys.m * &sys.b)) + nc * nd + ne * nf;
    let s_uu = 1.0 + nd * nd + nf * nf;
    let ratio = |block: CMat, scale: f64| {
        let n = linalg::norm2(&block);
        if n == 0.0 {
            0.0
        } else {
            n / scale.max(f64::MIN_POSITIVE)
        }
    };
    let xx = ratio(form.view((0, 0), (m, m)).clone_owned(), s_xx);
    let xu = ratio(form.view((0, m), (m, k)).clone_owned(), s_xu);
    let uu = ratio(form.view((m, m), (k, k)).clone_owned(), s_uu);
    xx.max(xu).max(uu)
}

/// Eigenvalues of the `M`-self-adjoint `P`, i.e. generalized eigenvalues of `(MP, M)`.
pub fn p_eigenvalues(sys: &DiscreteSystem, p: &CMat) -> Result<Vec<f64>, RiccatiError> {
    let l = linalg::cholesky(&sys.m)?;
    let linv = linalg::inverse(&l)?;
    let mp = linalg::herm(&(&sys.m * p));
    Ok(linalg::herm_eigvals(&(&linv * mp * linv.adjoint())))
}

/// `(margin >= -1e-8, margin)` with `margin = 1 - lambda_max(P)`.
pub fn contraction_check(sys: &DiscreteSystem, p: &CMat) -> Result<(bool, f64), RiccatiError> {
    let lmax = p_eigenvalues(sys, p)?.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let margin = 1.0 - lmax;
    Ok((margin >= -1e-8, margin))
}

/// `x0* M P x0`.
pub fn cost_quadratic(p: &CMat, x0: &CVec, m: &CMat) -> f64 {
    linalg::inner_re(x0, &(m * p), x0)
}

fn finish(
    sys: &DiscreteSystem,
    x: CMat,
    k_fb: CMat,
    e: CMat,
    f: CMat,
    method: Method,
    iterations: usize,
) -> Result<RiccatiSolution, RiccatiError> {
    let p = linalg::solve(&sys.m, &x)?;
    let abscissa = linalg::spectral_abscissa(&(&sys.a + &sys.b * &k_fb));
    let residual_care = care_residual(sys, &p)?;
    let residual_node = node_riccati_residual(sys, &p, &e, &f);
    let (_, margin) = contraction_check(sys, &p)?;
    Ok(RiccatiSolution {
        p,
        k_fb,
        e,
        f,
        residual_care,
        residual_node,
        contraction_margin: margin,
        closed_loop_abscissa: abscissa,
        marginally_stabilizing: abscissa > -MARGINAL,
        method,
        iterations,
    })
}

/// CARE factor: `E&F(x; u) = R^{1/2} (u - K x)`.
fn care_factor(sys: &DiscreteSystem, k_fb: &CMat) -> Result<(CMat, CMat), RiccatiError> {
    let rh = linalg::herm_sqrt(&weight_r(sys))?;
    Ok((-(&rh * k_fb), rh))
}

/// Initial gains must keep the spectrum clear of the axis: a round-off
/// abscissa like `-1e-17` on a lossless system is not stability.
fn stabilizes(sys: &DiscreteSystem, k: &CMat) -> bool {
    let ak = &sys.a + &sys.b * k;
    linalg::spectral_abscissa(&ak) < -MARGINAL * (1.0 + linalg::norm2(&ak))
}

/// Bass' stabilizing gain: `(A + bI) Z + Z (A + bI)* = 2 B B*`, `K = -B* Z^-1`.
fn bass_gain(sys: &DiscreteSystem) -> Option<CMat> {
    let beta = linalg::spectral_abscissa(&sys.a).max(0.0) + 1.0;
    let shifted = &sys.a + linalg::eye(sys.states()) * r(beta);
    let q = &sys.b * sys.b.adjoint() * r(2.0);
    let z = linalg::lyapunov(&(-shifted.adjoint()), &q).ok()?;
    let zinv = linalg::inverse(&z).ok()?;
    Some(-(sys.b.adjoint() * zinv))
}

/// Stabilizing solution by Newton-Kleinman iteration.
pub fn solve_care(sys: &DiscreteSystem) -> Result<RiccatiSolution, RiccatiError> {
    check(sys)?;
    let (p_in, m) = (sys.inputs(), sys.states());
    let rw = weight_r(sys);
    let mut candidates = vec![linalg::zeros(p_in, m)];
    let at_identity = sys.b.adjoint() * &sys.m + sys.d.adjoint() * &sys.c;
    if let Ok(k) = linalg::solve(&rw, &at_identity) {
        candidates.push(-k);
    }
    if sys.inputs() == sys.outputs() {
        if let Ok(k) = linalg::solve(&(linalg::eye(p_in) + &sys.d), &sys.c) {
            candidates.push(-k);
        }
    }
    candidates.extend(bass_gain(sys));
    let mut k = candidates
        .into_iter()
        .find(|k| linalg::is_finite(k) && stabilizes(sys, k))
        .ok_or_else(|| RiccatiError::NoStabilizingSolution("no stabilizing initial gain found".into()))?;

    let mut x = linalg::zeros(m, m);
    let mut iterations = 0;
    let mut last_step = f64::INFINITY;
    for it in 1..=100 {
        iterations = it;
        let ak = &sys.a + &sys.b * &k;
        let ck = &sys.c + &sys.d * &k;
        let q = ck.adjoint() * &ck + k.adjoint() * &k;
        let next = linalg::lyapunov(&ak, &q)
            .map_err(|_| RiccatiError::NoStabilizingSolution(format!("Lyapunov solve failed at iteration {it}")))?;
        let step = (&next - &x).norm();
        let size = next.norm().max(1.0);
        x = next;
        k = gain_from(sys, &x)?;
        if !linalg::is_finite(&x) {
            return Err(RiccatiError::NoStabilizingSolution("iteration diverged".into()));
        }
        let stalled = step <= 1e-9 * size && step > 0.5 * last_step;
        last_step = step;
        if step <= 1e-14 * size || stalled {
            break;
        }
    }
    let x = linalg::herm(&x);
    let k = gain_from(sys, &x)?;
    let abscissa = linalg::spectral_abscissa(&(&sys.a + &sys.b * &k));
    if !(abscissa < MARGINAL) {
        return Err(RiccatiError::NoStabilizingSolution(format!("closed-loop abscissa {abscissa:.3e}")));
    }
    let (e, f) = care_factor(sys, &k)?;
    finish(sys, x, k, e, f, Method::NewtonKleinman, iterations)
}

/// Stabilizing solution from the stable invariant subspace of the
/// Hamiltonian matrix, computed with the matrix sign function.
pub fn solve_care_hamiltonian(sys: &DiscreteSystem) -> Result<RiccatiSolution, RiccatiError> {
    check(sys)?;
    let m = sys.states();
    let rw = weight_r(sys);
    let rinv = linalg::inverse(&rw)?;
    let a_hat = &sys.a - &sys.b * &rinv * sys.d.adjoint() * &sys.c;
    let q_hat = sys.c.adjoint() * (linalg::eye(sys.outputs()) - &sys.d * &rinv * sys.d.adjoint()) * &sys.c;
    let g = &sys.b * &rinv * sys.b.adjoint();
    let ham = linalg::block2(&a_hat, &(-g), &(-q_hat), &(-a_hat.adjoint()));
    let w = linalg::matrix_sign(&ham, 100)
        .map_err(|e| RiccatiError::HamiltonianEigSplitFailure(format!("sign function: {e}")))?;
    let i = linalg::eye(m);
    let w11 = w.view((0, 0), (m, m)).clone_owned();
    let w12 = w.view((0, m), (m, m)).clone_owned();
    let w21 = w.view((m, 0), (m, m)).clone_owned();
    let w22 = w.view((m, m), (m, m)).clone_owned();
    let lhs = linalg::vstack(&w12, &(w22 + &i));
    let rhs = -linalg::vstack(&(w11 + &i), &w21);
    if linalg::rank(&lhs, 1e-12) < m {
        return Err(RiccatiError::HamiltonianEigSplitFailure("stable subspace is not a graph".into()));
    }
    let x = linalg::herm(&(linalg::pinv(&lhs) * rhs));
    let k = gain_from(sys, &x)?;
    let abscissa = linalg::spectral_abscissa(&(&sys.a + &sys.b * &k));
    if !(abscissa < MARGINAL) {
        return Err(RiccatiError::HamiltonianEigSplitFailure(format!("closed-loop abscissa {abscissa:.3e}")));
    }
    let (e, f) = care_factor(sys, &k)?;
    finish(sys, x, k, e, f, Method::HamiltonianSign, 0)
}

/// Which explicit solution to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Explicit {
    /// `u = -y`, `P = I`, `E&F = C&D + I`.
    Impedance,
    /// `u = 0`, `P = I`, `E&F = sqrt(2) u`.
    Scattering,
}

/// Explicit optimal solution of an energy preserving system; impedance takes
/// precedence when both flags hold.
pub fn explicit_solution(sys: &DiscreteSystem, cert: &PassivityCertificate) -> Result<RiccatiSolution, RiccatiError> {
    let kind = if cert.impedance_energy_preserving {
        Explicit::Impedance
    } else if cert.scattering_energy_preserving {
        Explicit::Scattering
    } else {
        return Err(RiccatiError::NotEnergyPreserving);
    };
    explicit_solution_of(sys, cert, kind)
}

pub fn explicit_solution_of(
    sys: &DiscreteSystem,
    cert: &PassivityCertificate,
    kind: Explicit,
) -> Result<RiccatiSolution, RiccatiError> {
    check(sys)?;
    let (p_in, m) = (sys.inputs(), sys.states());
    let (k, e, f, method) = match kind {
        Explicit::Impedance if cert.impedance_energy_preserving => {
            let k = -linalg::solve(&(linalg::eye(p_in) + &sys.d), &sys.c)?;
            let f = &sys.d + linalg::eye(p_in);
            (k, sys.c.clone(), f, Method::ExplicitImpedance)
        }
        Explicit::Scattering if cert.scattering_energy_preserving => (
            linalg::zeros(p_in, m),
            linalg::zeros(p_in, m),
            linalg::eye(p_in) * r(std::f64::consts::SQRT_2),
            Method::ExplicitScattering,
        ),
        _ => return Err(RiccatiError::NotEnergyPreserving),
    };
    let a_cl = &sys.a + &sys.b * &k;
    if let Some(z) = linalg::eigvals(&a_cl).into_iter().max_by(|a, b| a.re.total_cmp(&b.re)) {
        if !(z.re < 0.0) {
            return Err(RiccatiError::ClosedLoopNotStable { re: z.re, im: z.im });
        }
    }
    finish(sys, sys.m.clone(), k, e, f, method, 0)
}
