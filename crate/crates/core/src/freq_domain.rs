//! Transfer functions, the Popov function `I + P(iw)* P(iw)` and the explicit
//! spectral factors of energy preserving systems.
//!
//! For impedance energy preserving systems `P(iw)* + P(iw) = 0`, so
//! `chi = P + I` factors the Popov function; for scattering energy preserving
//! ones `P(iw)` is unitary and `chi = sqrt(2) I`. Both factors are also the
//! transfer functions of `(A, B, E, F)` with `(E, F)` from the explicit
//! Riccati solution, which is evaluated as an independent second route.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::FreqError;
use crate::linalg::{self, c, r, CMat};
use crate::lq_riccati::{explicit_solution, Method};
use crate::par;
use crate::passivity::PassivityCertificate;
use crate::system::DiscreteSystem;

/// `P(s) = C (sI - A)^-1 B + D` by LU.
pub fn transfer(sys: &DiscreteSystem, s: Complex64) -> Result<CMat, FreqError> {
    sys.check_dims().map_err(|e| FreqError::DimensionMismatch(e.to_string()))?;
    Ok(&sys.c * resolvent_times(sys, s, &sys.b)? + &sys.d)
}

/// `(sI - A)^-1 rhs`, rejecting solves whose residual is not at round-off
/// level.
fn resolvent_times(sys: &DiscreteSystem, s: Complex64, rhs: &CMat) -> Result<CMat, FreqError> {
    let shifted = linalg::eye(sys.states()) * s - &sys.a;
    let singular = FreqError::ResolventSingular { re: s.re, im: s.im };
    let x = linalg::solve(&shifted, rhs).map_err(|_| singular.clone())?;
    let res = (&shifted * &x - rhs).norm();
    if !linalg::is_finite(&x) || res > 1e-12 * (shifted.norm() * x.norm() + rhs.norm()) {
        return Err(singular);
    }
    Ok(x)
}

/// `I + P(iw)* P(iw)`.
pub fn popov(sys: &DiscreteSystem, omega: f64) -> Result<CMat, FreqError> {
    let p = transfer(sys, c(0.0, omega))?;
    Ok(linalg::herm(&(linalg::eye(sys.inputs()) + p.adjoint() * &p)))
}

/// `P(iw) + P(iw)*`.
pub fn hermitian_part(sys: &DiscreteSystem, omega: f64) -> Result<CMat, FreqError> {
    let p = transfer(sys, c(0.0, omega))?;
    Ok(&p + p.adjoint())
}

/// 200 log-spaced frequencies on `[1e-2, 1e3]`.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-2, 1e3, 200)
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    /// `chi = P + I`.
    Impedance,
    /// `chi = sqrt(2) I`.
    Scattering,
}

/// A spectral factor candidate with its realization `(A, B, E, F)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFactor {
    pub kind: FactorKind,
    pub e: CMat,
    pub f: CMat,
    /// False for candidates evaluated outside the energy preserving class.
    pub factor_exact: bool,
}

impl SpectralFactor {
    /// Factor of an energy preserving system; impedance takes precedence.
    pub fn new(sys: &DiscreteSystem, cert: &PassivityCertificate) -> Result<Self, FreqError> {
        if !cert.impedance_energy_preserving && !cert.scattering_energy_preserving {
            return Err(FreqError::NotEnergyPreserving);
        }
        let sol = explicit_solution(sys, cert)?;
        let kind = match sol.method {
            Method::ExplicitScattering => FactorKind::Scattering,
            _ => FactorKind::Impedance,
        };
        Ok(SpectralFactor { kind, e: sol.e, f: sol.f, factor_exact: true })
    }

    /// The same formula applied without any passivity hypothesis.
    pub fn candidate(sys: &DiscreteSystem, kind: FactorKind) -> Result<Self, FreqError> {
        let p = sys.inputs();
        let (e, f) = match kind {
            FactorKind::Impedance if sys.outputs() == p => (sys.c.clone(), &sys.d + linalg::eye(p)),
            FactorKind::Impedance => {
                return Err(FreqError::DimensionMismatch("impedance factor needs as many outputs as inputs".into()))
            }
            FactorKind::Scattering => (linalg::zeros(p, sys.states()), linalg::eye(p) * r(std::f64::consts::SQRT_2)),
        };
        Ok(SpectralFactor { kind, e, f, factor_exact: false })
    }

    /// Closed-form evaluation.
    pub fn eval(&self, sys: &DiscreteSystem, s: Complex64) -> Result<CMat, FreqError> {
        let p = sys.inputs();
        Ok(match self.kind {
            FactorKind::Impedance => transfer(sys, s)? + linalg::eye(p),
            FactorKind::Scattering => linalg::eye(p) * r(std::f64::consts::SQRT_2),
        })
    }

    /// `E (sI - A)^-1 B + F`.
    pub fn eval_realization(&self, sys: &DiscreteSystem, s: Complex64) -> Result<CMat, FreqError> {
        Ok(&self.e * resolvent_times(sys, s, &sys.b)? + &self.f)
    }

    /// Evaluates both routes and insists they agree to `1e-12`.
    pub fn eval_checked(&self, sys: &DiscreteSystem, s: Complex64) -> Result<CMat, FreqError> {
        let chi = self.eval(sys, s)?;
        let gap = (&chi - self.eval_realization(sys, s)?).norm();
        if gap > 1e-12 * (1.0 + chi.norm()) {
            return Err(FreqError::FactorMismatch(gap));
        }
        Ok(chi)
    }
}

/// `chi(s)` for an energy preserving system, cross-checked against its
/// realization.
pub fn spectral_factor(sys: &DiscreteSystem, cert: &PassivityCertificate, s: Complex64) -> Result<CMat, FreqError> {
    SpectralFactor::new(sys, cert)?.eval_checked(sys, s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub omegas: Vec<f64>,
    pub p_values: Vec<CMat>,
    pub popov_values: Vec<CMat>,
    pub factor_values: Vec<CMat>,
    /// `|Popov - chi* chi|_2` per frequency.
    pub residuals: Vec<f64>,
    /// Grid points dropped because an eigenvalue of `A` is within `1e-8`.
    pub skipped: Vec<f64>,
    pub warnings: Vec<String>,
}

impl FrequencyResponse {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

fn near_eigenvalue(eigs: &[Complex64], omega: f64) -> Option<Complex64> {
    let s = c(0.0, omega);
    eigs.iter().copied().find(|z| (z - s).norm() <= 1e-8 * (1.0 + omega.abs()))
}

/// Evaluates `P`, the Popov function and `chi` on `grid` (in parallel).
pub fn frequency_response(sys: &DiscreteSystem, factor: &SpectralFactor, grid: &[f64]) -> FrequencyResponse {
    let eigs = linalg::eigvals(&sys.a);
    let points = par::map(grid, |&w| -> Result<Option<(CMat, CMat, CMat, f64)>, (f64, String)> {
        if let Some(z) = near_eigenvalue(&eigs, w) {
            return Err((w, format!("skipped w = {w:.6e}: eigenvalue {:.3e}{:+.3e}i of A on the axis", z.re, z.im)));
        }
        let s = c(0.0, w);
        let eval = || -> Result<_, FreqError> {
            let p = transfer(sys, s)?;
            let pop = linalg::herm(&(linalg::eye(sys.inputs()) + p.adjoint() * &p));
            let chi = factor.eval_checked(sys, s)?;
            let res = linalg::norm2(&(&pop - chi.adjoint() * &chi));
            Ok((p, pop, chi, res))
        };
        eval().map(Some).map_err(|e| (w, format!("skipped w = {w:.6e}: {e}")))
    });
    let mut out = FrequencyResponse {
        omegas: Vec::new(),
        p_values: Vec::new(),
        popov_values: Vec::new(),
        factor_values: Vec::new(),
        residuals: Vec::new(),
        skipped: Vec::new(),
        warnings: Vec::new(),
    };
    for (&w, point) in grid.iter().zip(points) {
        match point {
            Ok(Some((p, pop, chi, res))) => {
                out.omegas.push(w);
                out.p_values.push(p);
                out.popov_values.push(pop);
                out.factor_values.push(chi);
                out.residuals.push(res);
            }
            Ok(None) => {}
            Err((w, msg)) => {
                out.skipped.push(w);
                out.warnings.push(msg);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorizationResidual {
    pub kind: FactorKind,
    pub factor_exact: bool,
    pub max_residual: f64,
    pub evaluated: usize,
    pub skipped: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Max over `grid` of `|Popov(iw) - chi(iw)* chi(iw)|`. Systems outside the
/// energy preserving class get the impedance formula (scattering when not
/// square) as a candidate, with `factor_exact = false`.
pub fn factorization_residual(
    sys: &DiscreteSystem,
    cert: &PassivityCertificate,
    grid: &[f64],
) -> Result<FactorizationResidual, FreqError> {
    let factor = match SpectralFactor::new(sys, cert) {
        Ok(f) => f,
        Err(FreqError::NotEnergyPreserving) => {
            let kind = if sys.inputs() == sys.outputs() { FactorKind::Impedance } else { FactorKind::Scattering };
            SpectralFactor::candidate(sys, kind)?
        }
        Err(e) => return Err(e),
    };
    let resp = frequency_response(sys, &factor, grid);
    Ok(FactorizationResidual {
        kind: factor.kind,
        factor_exact: factor.factor_exact,
        max_residual: resp.max_residual(),
        evaluated: resp.omegas.len(),
        skipped: resp.skipped,
        warnings: resp.warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HinfSample {
    pub points: usize,
    pub sup_chi: f64,
    pub sup_chi_inv: f64,
    /// Both suprema below `bound`; necessary for membership, not sufficient.
    pub bounded: bool,
    pub bound: f64,
    pub scope: &'static str,
}

/// Samples `|chi(s)|` and `|chi(s)^-1|` on `s = sigma + iw` for the given
/// abscissas and frequencies (both signs of `w`).
pub fn hinf_sampling(
    sys: &DiscreteSystem,
    factor: &SpectralFactor,
    sigmas: &[f64],
    omegas: &[f64],
    bound: f64,
) -> HinfSample {
    let pts: Vec<Complex64> =
        sigmas.iter().flat_map(|&sg| omegas.iter().flat_map(move |&w| [c(sg, w), c(sg, -w)])).collect();
    let vals = par::map(&pts, |&s| {
        let chi = factor.eval(sys, s).ok()?;
        let inv = linalg::inverse(&chi).ok()?;
        Some((linalg::norm2(&chi), linalg::norm2(&inv)))
    });
    let (mut sup_chi, mut sup_inv) = (0.0f64, 0.0f64);
    for v in &vals {
        let (a, b) = v.unwrap_or((f64::INFINITY, f64::INFINITY));
        sup_chi = sup_chi.max(a);
        sup_inv = sup_inv.max(b);
    }
    HinfSample {
        points: pts.len(),
        sup_chi,
        sup_chi_inv: sup_inv,
        bounded: sup_chi < bound && sup_inv < bound,
        bound,
        scope: "sampled right half-plane; necessary condition only",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_matrix;
    use crate::passivity::classify_discrete;

    fn scalar() -> DiscreteSystem {
        let one = |v| real_matrix(1, 1, &[v]);
        DiscreteSystem::euclidean(one(-1.0), one(1.0), one(1.0), one(0.0)).unwrap()
    }

    #[test]
    fn scalar_transfer() {
        let sys = scalar();
        assert!((transfer(&sys, c(0.0, 0.0)).unwrap()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        let s = c(0.3, 2.0);
        let expect = c(1.0, 0.0) / (s + 1.0);
        assert!((transfer(&sys, s).unwrap()[(0, 0)] - expect).norm() < 1e-15);
        assert!(transfer(&sys, c(1e6, 0.0)).unwrap().norm() < 1e-5);
        assert!((popov(&sys, 0.0).unwrap()[(0, 0)].re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn resolvent_singular_at_eigenvalue() {
        let sys = scalar();
        assert!(matches!(transfer(&sys, c(-1.0, 0.0)), Err(FreqError::ResolventSingular { .. })));
    }

    #[test]
    fn zero_transfer_gives_identity_popov() {
        let sys = DiscreteSystem::euclidean(
            real_matrix(1, 1, &[-1.0]),
            linalg::zeros(1, 2),
            linalg::zeros(1, 1),
            linalg::zeros(1, 2),
        )
        .unwrap();
        assert!((popov(&sys, 3.0).unwrap() - linalg::eye(2)).norm() < 1e-15);
    }

    #[test]
    fn grid_shape() {
        let g = default_grid();
        assert_eq!(g.len(), 200);
        assert!((g[0] - 1e-2).abs() < 1e-15 && (g[199] - 1e3).abs() < 1e-9);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn not_energy_preserving_rejected() {
        let sys = scalar();
        let cert = classify_discrete(&sys).unwrap();
        assert!(!cert.impedance_energy_preserving);
        assert_eq!(spectral_factor(&sys, &cert, c(1.0, 0.0)), Err(FreqError::NotEnergyPreserving));
        let res = factorization_residual(&sys, &cert, &[1.0]).unwrap();
        assert!(!res.factor_exact);
    }

    #[test]
    fn axis_eigenvalues_are_skipped() {
        // Rotation with eigenvalues +-i.
        let sys = DiscreteSystem::euclidean(
            real_matrix(2, 2, &[0.0, 1.0, -1.0, 0.0]),
            real_matrix(2, 1, &[0.0, 1.0]),
            real_matrix(1, 2, &[0.0, 1.0]),
            linalg::zeros(1, 1),
        )
        .unwrap();
        let f = SpectralFactor::candidate(&sys, FactorKind::Impedance).unwrap();
        let resp = frequency_response(&sys, &f, &[0.5, 1.0, 2.0]);
        assert_eq!(resp.skipped, vec![1.0]);
        assert_eq!(resp.omegas, vec![0.5, 2.0]);
        assert_eq!(resp.warnings.len(), 1);
    }
}
