//! Structure-preserving spatial discretization.
//!
//! Port-Hamiltonian specs use the box scheme: the state lives on `N` cells,
//! the efforts on the `N + 1` nodes, tied together by
//!
//! ```text
//! h x_j' = P1 (e_{j+1} - e_j) + h P0 H_j x_j,     H_j x_j = (e_j + e_{j+1}) / 2,
//! Wb (e_N; e_0) = (u; 0).
//! ```
//!
//! The averaging annihilates only the alternating node vector, which the
//! boundary rows pin down, so the efforts are a linear function of `(x, u)`
//! and the boundary traces `v = (e_N; e_0) = Vx x + Vu u` satisfy the
//! boundary conditions exactly. Summation by parts gives
//!
//! ```text
//! 2 Re<Ax + Bu, x>_M = v* J v,    J = diag(P1, -P1),
//! ```
//!
//! i.e. the continuous boundary form evaluated on the discrete traces. Since
//! `(x, u) -> v` maps onto `ker Wb2`, every discrete KYP block is the
//! continuous one pulled back and the certificates carry identical flags.
//! An ODE has no `u`-`u` energy term, so `Vu* J Vu = 0` holds automatically;
//! for scattering-type inputs it forces a unitary feedthrough `D`.
//!
//! After assembly `MA` is replaced by `skew(MA) + 1/2 Vx* J Vx` and `MB` by
//! `Vx* J Vu`, which changes them only at round-off level but makes the
//! energy identity hold to machine precision.

use crate::error::DiscretizeError;
use crate::linalg::{self, r, CMat};
use crate::passivity::{classify, classify_discrete, PassivityCertificate};
use crate::phs_model::{validate_spec, PhsSpec};
use crate::system::{DiscreteSystem, SystemMeta};

pub const PHS_SCHEME: &str = "box";
pub const BEAM_SCHEME: &str = "fd-energy-clamped-free";

/// Linear reconstruction of the nodal efforts and boundary traces.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxAssembly {
    /// Nodal efforts `e = tx x + tu u`, `n(N+1)` rows.
    pub tx: CMat,
    pub tu: CMat,
    /// Boundary traces `v = (e_N; e_0) = vx x + vu u`.
    pub vx: CMat,
    pub vu: CMat,
    /// `diag(P1, -P1)`.
    pub j: CMat,
    /// Cell energy densities `H(a + (j + 1/2) h)`.
    pub h_cells: Vec<CMat>,
}

/// Solves the averaging + boundary-row system for the nodal efforts.
pub fn box_assembly(spec: &PhsSpec, cells: usize) -> Result<BoxAssembly, DiscretizeError> {
    let n = spec.n;
    let nodes = cells + 1;
    let h = (spec.b - spec.a) / cells as f64;
    let h_cells: Vec<CMat> = (0..cells).map(|j| linalg::herm(&spec.h.eval(spec.a + (j as f64 + 0.5) * h))).collect();
    let wb = spec.wb();
    let mut s = linalg::zeros(n * nodes, n * nodes);
    let half = linalg::eye(n) * r(0.5);
    for j in 0..cells {
        s.view_mut((j * n, j * n), (n, n)).copy_from(&half);
        s.view_mut((j * n, (j + 1) * n), (n, n)).copy_from(&half);
    }
    let bc = cells * n;
    s.view_mut((bc, cells * n), (n, n)).copy_from(&wb.columns(0, n));
    s.view_mut((bc, 0), (n, n)).copy_from(&wb.columns(n, n));

    let mut rhs_x = linalg::zeros(n * nodes, n * cells);
    rhs_x.view_mut((0, 0), (n * cells, n * cells)).copy_from(&linalg::block_diag(&h_cells));
    let mut rhs_u = linalg::zeros(n * nodes, spec.p);
    rhs_u.view_mut((bc, 0), (spec.p, spec.p)).copy_from(&linalg::eye(spec.p));

    let singular = |_| {
        DiscretizeError::StructureRestorationFailed(format!(
            "boundary rows do not fix the alternating node mode for N = {cells}"
        ))
    };
    let tx = linalg::solve(&s, &rhs_x).map_err(singular)?;
    let tu = linalg::solve(&s, &rhs_u).map_err(singular)?;
    let mut ext = linalg::zeros(2 * n, n * nodes);
    ext.view_mut((0, cells * n), (n, n)).copy_from(&linalg::eye(n));
    ext.view_mut((n, 0), (n, n)).copy_from(&linalg::eye(n));
    let vx = &ext * &tx;
    let vu = &ext * &tu;
    let j = linalg::block_diag(&[spec.p1.clone(), -&spec.p1]);
    Ok(BoxAssembly { tx, tu, vx, vu, j, h_cells })
}

fn flags_match(a: &PassivityCertificate, b: &PassivityCertificate) -> bool {
    a.flags() == b.flags()
}

/// Box-scheme discretization on `cells` cells.
pub fn discretize_phs(spec: &PhsSpec, cells: usize) -> Result<DiscreteSystem, DiscretizeError> {
    if cells < 2 {
        return Err(DiscretizeError::GridTooSmall { got: cells, min: 2 });
    }
    validate_spec(spec, (cells + 1).max(11))?.ensure()?;
    let target = classify(spec)?;

    let n = spec.n;
    let m = n * cells;
    let h = (spec.b - spec.a) / cells as f64;
    let asm = box_assembly(spec, cells)?;
    let hb = linalg::block_diag(&asm.h_cells);
    let mass = &hb * r(h);

    // Differences P1 (e_{j+1} - e_j) per cell.
    let mut diff = linalg::zeros(m, n * (cells + 1));
    for j in 0..cells {
        diff.view_mut((j * n, j * n), (n, n)).copy_from(&(-&spec.p1));
        diff.view_mut((j * n, (j + 1) * n), (n, n)).copy_from(&spec.p1);
    }
    let p0 = linalg::block_diag(&vec![spec.p0.clone(); cells]);
    let ma_raw = &hb * (&diff * &asm.tx + &p0 * &hb * r(h));
    let mb_raw = &hb * &diff * &asm.tu;

    let ma = linalg::skew(&ma_raw) + linalg::herm(&(asm.vx.adjoint() * &asm.j * &asm.vx)) * r(0.5);
    let mb = asm.vx.adjoint() * &asm.j * &asm.vu;
    let drift = (&ma - &ma_raw).norm() + (&mb - &mb_raw).norm();
    if drift > 1e-8 * (1.0 + ma_raw.norm() + mb_raw.norm()) {
        return Err(DiscretizeError::StructureRestorationFailed(format!(
            "energy correction of size {drift:.3e} is not at round-off level"
        )));
    }
    let a = linalg::solve(&mass, &ma)?;
    let b = linalg::solve(&mass, &mb)?;
    let c = &spec.wc * &asm.vx;
    let d = &spec.wc * &asm.vu;

    let sys = DiscreteSystem::new(a, b, c, d, mass)?.with_meta(SystemMeta {
        grid: cells,
        scheme: PHS_SCHEME.into(),
        provenance: spec.name.clone(),
    });
    let got = classify_discrete(&sys)?;
    if !flags_match(&got, &target) {
        return Err(DiscretizeError::StructureRestorationFailed(format!(
            "continuous flags {:?}, discrete flags {:?}",
            target.flags(),
            got.flags()
        )));
    }
    Ok(sys)
}

/// Projects a system with `D + D* = 0` onto the impedance energy preserving
/// class: `A <- A - 1/2 M^-1 (A*M + MA)`, `B <- M^-1 C*`.
pub fn restore_impedance_energy_preserving(sys: &DiscreteSystem) -> Result<DiscreteSystem, DiscretizeError> {
    sys.check_weight()?;
    if sys.inputs() != sys.outputs() {
        return Err(DiscretizeError::InvalidParameter("impedance class needs as many outputs as inputs".into()));
    }
    let ma = &sys.m * &sys.a;
    let sym = ma.adjoint() + &ma;
    let a = &sys.a - linalg::solve(&sys.m, &sym)? * r(0.5);
    let b = linalg::solve(&sys.m, &sys.c.adjoint())?;
    let d = linalg::skew(&sys.d);
    Ok(DiscreteSystem { a, b, d, ..sys.clone() })
}

/// Clamped-free Euler-Bernoulli beam `w_tt = -w_zzzz` on `[0, 1]` with
/// boundary input `u = w_zzz(1)` and output `y = eps u - w_t(1)`.
///
/// Nodes `z_j = j/N`; state `(w_1..w_N, v_1..v_N)`. Curvatures
/// `k_j = (w_{j+1} - 2 w_j + w_{j-1})/h^2` for `j < N` use the clamped ghost
/// `w_{-1} = w_1`; `k_N = 0` is the free end. The trapezoidal energy
/// `h sum' |k_j|^2 + h sum' |v_j|^2` defines `M`, and the scheme satisfies
/// `Re<Ax + Bu, x>_M = Re<y, u> - eps |u|^2` exactly.
///
/// With `closed_loop` the boundary feedback `u = -mu y` is applied, i.e.
/// `w_t(1) = sqrt(1 + eps^2) w_zzz(1)`; the input channel stays open for
/// perturbations.
pub fn discretize_beam(eps: f64, cells: usize, closed_loop: bool) -> Result<DiscreteSystem, DiscretizeError> {
    if cells < 4 {
        return Err(DiscretizeError::GridTooSmall { got: cells, min: 4 });
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(DiscretizeError::InvalidParameter(format!("eps = {eps} must be finite and >= 0")));
    }
    let nn = cells;
    let h = 1.0 / nn as f64;
    let curvature = beam_curvature(nn);
    let weights: Vec<f64> = (0..nn).map(|j| if j == 0 { 0.5 * h } else { h }).collect();
    let stiff = curvature.adjoint() * linalg::diag_real(&weights) * &curvature;
    let mut mv: Vec<f64> = vec![h; nn];
    mv[nn - 1] = 0.5 * h;
    let mass_v = linalg::diag_real(&mv);
    let mass = linalg::block_diag(&[stiff.clone(), mass_v]);

    let mut a = linalg::zeros(2 * nn, 2 * nn);
    a.view_mut((0, nn), (nn, nn)).copy_from(&linalg::eye(nn));
    for i in 0..nn {
        for k in 0..nn {
            a[(nn + i, k)] = -stiff[(i, k)] / mv[i];
        }
    }
    let mut b = linalg::zeros(2 * nn, 1);
    b[(2 * nn - 1, 0)] = r(-1.0 / mv[nn - 1]);
    let mut c = linalg::zeros(1, 2 * nn);
    c[(0, 2 * nn - 1)] = r(-1.0);
    let d = linalg::real_matrix(1, 1, &[eps]);

    if closed_loop {
        // Last velocity row: (h/2) v_N' = -k_{N-1}/h - alpha v_N.
        let alpha = 1.0 / (1.0 + eps * eps).sqrt();
        a[(2 * nn - 1, 2 * nn - 1)] = r(-alpha / mv[nn - 1]);
        c[(0, 2 * nn - 1)] = r(eps * alpha - 1.0);
    }

    let sys = DiscreteSystem::new(a, b, c, d, mass)?.with_meta(SystemMeta {
        grid: cells,
        scheme: BEAM_SCHEME.into(),
        provenance: format!("beam eps={eps} closed_loop={closed_loop}"),
    });
    sys.check_weight()?;
    Ok(sys)
}

/// `N x N` map from `(w_1..w_N)` to `(k_0..k_{N-1})`, lower triangular.
pub fn beam_curvature(cells: usize) -> CMat {
    let h2 = (1.0 / cells as f64).powi(2);
    let mut d2 = linalg::zeros(cells, cells);
    d2[(0, 0)] = r(2.0 / h2);
    for j in 1..cells {
        // k_j involves w_{j-1}, w_j, w_{j+1}; column index of w_i is i - 1.
        if j >= 2 {
            d2[(j, j - 2)] = r(1.0 / h2);
        }
        d2[(j, j - 1)] = r(-2.0 / h2);
        d2[(j, j)] = r(1.0 / h2);
    }
    d2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::linalg::{c, CVec};

    #[test]
    fn wave_n8_is_impedance_energy_preserving() {
        let sys = discretize_phs(&corpus::wave(), 8).unwrap();
        let cert = classify_discrete(&sys).unwrap();
        assert!(cert.impedance_passive && cert.impedance_energy_preserving);
        assert!(sys.d.norm() < 1e-14);
    }

    #[test]
    fn homogeneous_transport_is_dissipative() {
        let sys = discretize_phs(&corpus::transport_homogeneous(), 12).unwrap();
        for ev in linalg::eigvals(&sys.a) {
            assert!(ev.re <= 1e-10, "{ev}");
        }
    }

    #[test]
    fn two_cells_assemble() {
        for spec in corpus::specs() {
            let sys = discretize_phs(&spec, 2).unwrap();
            assert!(sys.check_weight().is_ok());
        }
    }

    #[test]
    fn one_cell_is_rejected() {
        assert_eq!(discretize_phs(&corpus::wave(), 1), Err(DiscretizeError::GridTooSmall { got: 1, min: 2 }));
    }

    #[test]
    fn transport_feedthrough_is_unitary() {
        for cells in [5, 6] {
            let sys = discretize_phs(&corpus::transport_scattering(), cells).unwrap();
            assert!((sys.d[(0, 0)].norm() - 1.0).abs() < 1e-12);
            assert!(linalg::spectral_abscissa(&sys.a) < -1.0);
        }
    }

    #[test]
    fn input_trace_is_isotropic() {
        for spec in corpus::specs() {
            let asm = box_assembly(&spec, 7).unwrap();
            assert!((asm.vu.adjoint() * &asm.j * &asm.vu).norm() < 1e-13, "{}", spec.name);
            // Boundary rows hold exactly.
            let wb = spec.wb();
            assert!((&wb * &asm.vx).norm() < 1e-12);
            let mut unit = linalg::zeros(spec.n, spec.p);
            unit.view_mut((0, 0), (spec.p, spec.p)).copy_from(&linalg::eye(spec.p));
            assert!((&wb * &asm.vu - unit).norm() < 1e-12);
        }
    }

    #[test]
    fn energy_identity_is_exact() {
        let spec = corpus::wave_variable_h();
        let sys = discretize_phs(&spec, 9).unwrap();
        let asm = box_assembly(&spec, 9).unwrap();
        let x = CVec::from_fn(sys.states(), |i, _| c((i as f64).sin(), (0.3 * i as f64).cos()));
        let u = CVec::from_element(1, c(0.7, -0.2));
        let rate = 2.0 * linalg::inner_re(&x, &sys.m, &(&sys.a * &x + &sys.b * &u));
        let v = &asm.vx * &x + &asm.vu * &u;
        let form = (v.adjoint() * &asm.j * &v)[(0, 0)].re;
        assert!((rate - form).abs() < 1e-11 * (1.0 + form.abs()), "{rate} vs {form}");
    }

    #[test]
    fn periodic_rows_fail_on_even_grids() {
        // e(b) = e(a) cannot fix the alternating node vector when N is even.
        let mut spec = corpus::transport_homogeneous();
        spec.wb2 = linalg::real_matrix(1, 2, &[1.0, -1.0]);
        assert!(box_assembly(&spec, 4).is_err());
        assert!(box_assembly(&spec, 5).is_ok());
    }

    #[test]
    fn restoration_recipe_gives_energy_preserving_system() {
        let a = linalg::real_matrix(2, 2, &[-1.0, 2.0, 0.5, 0.3]);
        let m = linalg::real_matrix(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let cmat = linalg::real_matrix(1, 2, &[1.0, -1.0]);
        let sys = DiscreteSystem::new(a, linalg::zeros(2, 1), cmat, linalg::zeros(1, 1), m).unwrap();
        let fixed = restore_impedance_energy_preserving(&sys).unwrap();
        assert!(classify_discrete(&fixed).unwrap().impedance_energy_preserving);
    }

    #[test]
    fn beam_open_loop_energy_preserving_at_zero_eps() {
        let sys = discretize_beam(0.0, 10, false).unwrap();
        let cert = classify_discrete(&sys).unwrap();
        assert!(cert.impedance_energy_preserving);
    }

    #[test]
    fn beam_strict_input_passivity_identity() {
        let eps = 0.75;
        let sys = discretize_beam(eps, 12, false).unwrap();
        // Re<Ax+Bu,x>_M - Re<y,u> + eps|u|^2 as a Hermitian form must vanish.
        let mut form = crate::passivity::impedance_block(&sys);
        let k = sys.states();
        form[(k, k)] += r(2.0 * eps);
        assert!(form.norm() < 1e-10 * (1.0 + sys.m.norm()), "{}", form.norm());
    }

    #[test]
    fn beam_closed_loop_is_stable() {
        let sys = discretize_beam(0.75, 20, true).unwrap();
        assert!(linalg::spectral_abscissa(&sys.a) < 0.0);
    }

    #[test]
    fn beam_closed_loop_row_matches_feedback() {
        for &eps in &[0.0, 0.25, 0.75, 2.0] {
            let open = discretize_beam(eps, 16, false).unwrap();
            let closed = discretize_beam(eps, 16, true).unwrap();
            let mu = 1.0 / ((1.0 + eps * eps).sqrt() - eps);
            // u = -mu y = -mu (C x + eps u)  =>  u = K x.
            let gain = &open.c * r(-mu / (1.0 + mu * eps));
            let a_cl = &open.a + &open.b * &gain;
            let c_cl = &open.c + &open.d * &gain;
            assert!((a_cl - &closed.a).norm() < 1e-12 * closed.a.norm());
            assert!((c_cl - &closed.c).norm() < 1e-12);
        }
    }

    #[test]
    fn beam_rejects_bad_parameters() {
        assert!(matches!(discretize_beam(-1.0, 8, false), Err(DiscretizeError::InvalidParameter(_))));
        assert!(matches!(discretize_beam(0.0, 3, false), Err(DiscretizeError::GridTooSmall { .. })));
    }

    #[test]
    fn curvature_of_quadratic_is_exact() {
        // w = z^2 has w'' = 2 everywhere and satisfies the clamped conditions.
        let cells = 8;
        let d2 = beam_curvature(cells);
        let w = CVec::from_fn(cells, |i, _| r(((i + 1) as f64 / cells as f64).powi(2)));
        let k = d2 * w;
        for j in 0..cells {
            assert!((k[j].re - 2.0).abs() < 1e-10, "{j}: {}", k[j]);
        }
    }
}
