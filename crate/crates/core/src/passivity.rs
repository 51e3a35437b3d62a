//! Impedance/scattering passivity of boundary control systems (through
//! quadratic forms restricted to the kernel of the homogeneous boundary rows)
//! and of discrete systems (through KYP-type block matrices).

use serde::Serialize;

use crate::error::CertError;
use crate::linalg::{self, CMat, RANK_RTOL};
use crate::phs_model::{boundary_matrices, PhsSpec};
use crate::system::DiscreteSystem;

/// Orthonormal basis of `ker W` for a full-row-rank `W`.
pub fn kernel_basis(w: &CMat) -> Result<CMat, CertError> {
    let (basis, rank) = linalg::null_space(w, RANK_RTOL);
    if rank < w.nrows() {
        return Err(CertError::RankDeficient { rank, expected: w.nrows() });
    }
    Ok(basis)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassivityCertificate {
    pub impedance_passive: bool,
    pub impedance_energy_preserving: bool,
    pub scattering_passive: bool,
    pub scattering_energy_preserving: bool,
    /// `None` when `k != p`.
    pub witness_imp: Option<CMat>,
    pub witness_scat: CMat,
    pub min_eig_imp: Option<f64>,
    pub min_eig_scat: f64,
    pub norm_imp: Option<f64>,
    pub norm_scat: f64,
    pub tolerance: f64,
    /// Decisions whose margin lies within a factor 10 of the tolerance.
    pub indeterminate: Vec<String>,
}

impl PassivityCertificate {
    pub fn flags(&self) -> [bool; 4] {
        [
            self.impedance_passive,
            self.impedance_energy_preserving,
            self.scattering_passive,
            self.scattering_energy_preserving,
        ]
    }

    pub fn report(&self) -> CertificateReport {
        CertificateReport {
            impedance_passive: self.impedance_passive,
            impedance_energy_preserving: self.impedance_energy_preserving,
            scattering_passive: self.scattering_passive,
            scattering_energy_preserving: self.scattering_energy_preserving,
            witness_imp_eigenvalues: self.witness_imp.as_ref().map(linalg::herm_eigvals),
            witness_scat_eigenvalues: linalg::herm_eigvals(&self.witness_scat),
            min_eig_imp: self.min_eig_imp,
            min_eig_scat: self.min_eig_scat,
            norm_imp: self.norm_imp,
            norm_scat: self.norm_scat,
            tolerance: self.tolerance,
            indeterminate: self.indeterminate.clone(),
        }
    }
}

/// Serializable summary of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub impedance_passive: bool,
    pub impedance_energy_preserving: bool,
    pub scattering_passive: bool,
    pub scattering_energy_preserving: bool,
    pub witness_imp_eigenvalues: Option<Vec<f64>>,
    pub witness_scat_eigenvalues: Vec<f64>,
    pub min_eig_imp: Option<f64>,
    pub min_eig_scat: f64,
    pub norm_imp: Option<f64>,
    pub norm_scat: f64,
    pub tolerance: f64,
    pub indeterminate: Vec<String>,
}

struct Decision {
    passive: bool,
    preserving: bool,
    min_eig: f64,
    norm: f64,
}

/// `form` is passive when `form >= 0` and energy preserving when `form = 0`.
fn decide(form: &CMat, tol: f64, label: &str, indeterminate: &mut Vec<String>) -> Decision {
    let form = linalg::herm(form);
    let min_eig = if form.nrows() == 0 { 0.0 } else { linalg::min_eig(&form) };
    let norm = form.norm();
    if (-10.0 * tol..-0.1 * tol).contains(&min_eig) {
        indeterminate.push(format!("{label}_passive"));
    }
    if norm > 0.1 * tol && norm <= 10.0 * tol {
        indeterminate.push(format!("{label}_energy_preserving"));
    }
    Decision { passive: min_eig >= -tol, preserving: norm <= tol, min_eig, norm }
}

pub fn classify(spec: &PhsSpec) -> Result<PassivityCertificate, CertError> {
    classify_scaled(spec, 1.0)
}

/// [`classify`] with the default tolerance multiplied by `tol_scale`.
pub fn classify_scaled(spec: &PhsSpec, tol_scale: f64) -> Result<PassivityCertificate, CertError> {
    let bm = boundary_matrices(spec)?;
    let k = kernel_basis(&bm.wb2)?;
    let wb = bm.wb();
    let tol = tol_scale * 1e-10 * (1.0 + linalg::norm2(&wb).powi(2) + linalg::norm2(&bm.wc).powi(2));
    let xi_k = &bm.xi;
    let mut indeterminate = Vec::new();

    let scat = &bm.wb1.adjoint() * &bm.wb1 - &bm.wc.adjoint() * &bm.wc - xi_k;
    let witness_scat = linalg::herm(&(k.adjoint() * scat * &k));
    let s = decide(&witness_scat, tol, "scattering", &mut indeterminate);

    let (witness_imp, imp) = if spec.k == spec.p {
        let imp = &bm.wb1.adjoint() * &bm.wc + &bm.wc.adjoint() * &bm.wb1 - xi_k;
        let w = linalg::herm(&(k.adjoint() * imp * &k));
        let d = decide(&w, tol, "impedance", &mut indeterminate);
        (Some(w), Some(d))
    } else {
        (None, None)
    };

    Ok(PassivityCertificate {
        impedance_passive: imp.as_ref().is_some_and(|d| d.passive),
        impedance_energy_preserving: imp.as_ref().is_some_and(|d| d.preserving),
        scattering_passive: s.passive,
        scattering_energy_preserving: s.preserving,
        witness_imp,
        witness_scat,
        min_eig_imp: imp.as_ref().map(|d| d.min_eig),
        min_eig_scat: s.min_eig,
        norm_imp: imp.as_ref().map(|d| d.norm),
        norm_scat: s.norm,
        tolerance: tol,
        indeterminate,
    })
}

/// Impedance KYP block `[[A*M + MA, MB - C*], [B*M - C, -(D + D*)]]`.
pub fn impedance_block(sys: &DiscreteSystem) -> CMat {
    let ma = &sys.m * &sys.a;
    let mb = &sys.m * &sys.b;
    let tl = ma.adjoint() + &ma;
    let tr = &mb - sys.c.adjoint();
    let br = -(&sys.d + sys.d.adjoint());
    linalg::herm(&linalg::block2(&tl, &tr, &tr.adjoint(), &br))
}

/// Scattering KYP block `[[A*M + MA + C*C, MB + C*D], [B*M + D*C, D*D - I]]`.
pub fn scattering_block(sys: &DiscreteSystem) -> CMat {
    let ma = &sys.m * &sys.a;
    let mb = &sys.m * &sys.b;
    let tl = ma.adjoint() + &ma + sys.c.adjoint() * &sys.c;
    let tr = &mb + sys.c.adjoint() * &sys.d;
    let br = sys.d.adjoint() * &sys.d - linalg::eye(sys.inputs());
    linalg::herm(&linalg::block2(&tl, &tr, &tr.adjoint(), &br))
}

/// Relative tolerance for the discrete blocks.
pub fn discrete_tolerance(sys: &DiscreteSystem) -> f64 {
    let ma = linalg::norm2(&(&sys.m * &sys.a));
    let mb = linalg::norm2(&(&sys.m * &sys.b));
    let c = linalg::norm2(&sys.c);
    let d = linalg::norm2(&sys.d);
    1e-10 * (1.0 + ma + mb + c + d + c * c + d * d)
}

pub fn classify_discrete(sys: &DiscreteSystem) -> Result<PassivityCertificate, CertError> {
    classify_discrete_scaled(sys, 1.0)
}

pub fn classify_discrete_scaled(sys: &DiscreteSystem, tol_scale: f64) -> Result<PassivityCertificate, CertError> {
    sys.check_weight()?;
    let tol = tol_scale * discrete_tolerance(sys);
    let mut indeterminate = Vec::new();
    // The blocks are negative semidefinite for passive systems; decide on the negation.
    let witness_scat = -scattering_block(sys);
    let s = decide(&witness_scat, tol, "scattering", &mut indeterminate);
    let (witness_imp, imp) = if sys.inputs() == sys.outputs() {
        let w = -impedance_block(sys);
        let d = decide(&w, tol, "impedance", &mut indeterminate);
        (Some(w), Some(d))
    } else {
        (None, None)
    };
    Ok(PassivityCertificate {
        impedance_passive: imp.as_ref().is_some_and(|d| d.passive),
        impedance_energy_preserving: imp.as_ref().is_some_and(|d| d.preserving),
        scattering_passive: s.passive,
        scattering_energy_preserving: s.preserving,
        witness_imp,
        witness_scat,
        min_eig_imp: imp.as_ref().map(|d| d.min_eig),
        min_eig_scat: s.min_eig,
        norm_imp: imp.as_ref().map(|d| d.norm),
        norm_scat: s.norm,
        tolerance: tol,
        indeterminate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::linalg::{r, real_matrix};

    #[test]
    fn kernel_of_coordinate_row() {
        let w = real_matrix(1, 4, &[1.0, 0.0, 0.0, 0.0]);
        let k = kernel_basis(&w).unwrap();
        assert_eq!(k.shape(), (4, 3));
        assert!((&w * &k).norm() < 1e-12);
        assert!((k.adjoint() * &k - linalg::eye(3)).norm() < 1e-12);
        assert!(k.row(0).norm() < 1e-12);
    }

    #[test]
    fn kernel_of_empty_matrix_is_everything() {
        let k = kernel_basis(&linalg::zeros(0, 4)).unwrap();
        assert!((k - linalg::eye(4)).norm() < 1e-15);
    }

    #[test]
    fn kernel_of_diagonal_row() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let k = kernel_basis(&real_matrix(1, 2, &[h, h])).unwrap();
        assert_eq!(k.ncols(), 1);
        assert!((k[(0, 0)] + k[(1, 0)]).norm() < 1e-12);
        assert!((k[(0, 0)].norm() - h).abs() < 1e-12);
    }

    #[test]
    fn kernel_rank_deficient() {
        let w = real_matrix(2, 4, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0]);
        assert!(matches!(kernel_basis(&w), Err(CertError::RankDeficient { rank: 1, expected: 2 })));
    }

    #[test]
    fn wave_is_impedance_energy_preserving() {
        let cert = classify(&corpus::wave()).unwrap();
        assert!(cert.impedance_passive && cert.impedance_energy_preserving);
        assert!(cert.witness_imp.as_ref().unwrap().norm() < 1e-14);
        assert!(cert.indeterminate.is_empty());
    }

    #[test]
    fn zero_output_with_indefinite_boundary_form_is_not_passive() {
        let mut spec = corpus::wave();
        spec.wc = linalg::zeros(1, 4);
        let cert = classify(&spec).unwrap();
        assert!(!cert.impedance_passive);
    }

    #[test]
    fn transport_is_scattering_energy_preserving() {
        let cert = classify(&corpus::transport_scattering()).unwrap();
        assert!(cert.scattering_passive && cert.scattering_energy_preserving);
    }

    #[test]
    fn scaled_output_breaks_energy_preservation() {
        // Scattering: ||u||^2 - l^2 ||y||^2 >= ||u||^2 - ||y||^2, so passivity survives.
        let mut spec = corpus::transport_scattering();
        spec.wc *= r(0.5);
        let cert = classify(&spec).unwrap();
        assert!(cert.scattering_passive && !cert.scattering_energy_preserving);

        // Impedance: 2 Re<u, l e> - 2 Re<u, e> is sign-indefinite, so the wave
        // loses passivity altogether.
        let mut spec = corpus::wave();
        spec.wc *= r(0.5);
        let cert = classify(&spec).unwrap();
        assert!(!cert.impedance_energy_preserving);
        assert!(!cert.impedance_passive);
    }

    #[test]
    fn impedance_flags_need_square_ports() {
        let cert = classify(&corpus::transport_homogeneous()).unwrap();
        assert!(cert.witness_imp.is_some());
        let mut spec = corpus::transport_scattering();
        spec.k = 0;
        spec.wc = linalg::zeros(0, 2);
        let cert = classify(&spec).unwrap();
        assert!(cert.witness_imp.is_none());
        assert!(!cert.impedance_passive);
    }

    #[test]
    fn witnesses_are_hermitian() {
        for spec in corpus::specs() {
            let cert = classify(&spec).unwrap();
            assert!(linalg::hermitian_defect(&cert.witness_scat) < 1e-13);
            if let Some(w) = &cert.witness_imp {
                assert!(linalg::hermitian_defect(w) < 1e-13);
            }
        }
    }

    #[test]
    fn discrete_skew_system_is_energy_preserving() {
        let a = real_matrix(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let b = real_matrix(2, 1, &[1.0, 0.0]);
        let sys = DiscreteSystem::euclidean(a, b.clone(), b.adjoint(), linalg::zeros(1, 1)).unwrap();
        let cert = classify_discrete(&sys).unwrap();
        assert!(cert.impedance_energy_preserving);
    }

    #[test]
    fn discrete_scalar_is_passive_only() {
        let one = |v| real_matrix(1, 1, &[v]);
        let sys = DiscreteSystem::euclidean(one(-1.0), one(1.0), one(1.0), one(0.0)).unwrap();
        let block = impedance_block(&sys);
        assert!((block - real_matrix(2, 2, &[-2.0, 0.0, 0.0, 0.0])).norm() < 1e-15);
        let cert = classify_discrete(&sys).unwrap();
        assert!(cert.impedance_passive && !cert.impedance_energy_preserving);
    }

    #[test]
    fn discrete_identity_feedthrough_is_scattering_passive() {
        let sys =
            DiscreteSystem::euclidean(linalg::zeros(1, 1), linalg::zeros(1, 1), linalg::zeros(1, 1), linalg::eye(1))
                .unwrap();
        let cert = classify_discrete(&sys).unwrap();
        assert!(cert.scattering_passive);
    }
}
