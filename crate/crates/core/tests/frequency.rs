use passilq_core::corpus;
use passilq_core::discretize::{discretize_beam, discretize_phs};
use passilq_core::freq_domain::{
    default_grid, factorization_residual, hermitian_part, hinf_sampling, log_grid, popov, spectral_factor, transfer,
    FactorKind, SpectralFactor,
};
use passilq_core::linalg::{self, c, r};
use passilq_core::passivity::classify_discrete;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn factor_routes_agree_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for spec in [corpus::wave_variable_h(), corpus::transport_scattering(), corpus::counter_transport()] {
        let sys = discretize_phs(&spec, 10).unwrap();
        let cert = classify_discrete(&sys).unwrap();
        let f = SpectralFactor::new(&sys, &cert).unwrap();
        for _ in 0..20 {
            let s = c(rng.gen_range(0.01..5.0), rng.gen_range(-20.0..20.0));
            let a = f.eval(&sys, s).unwrap();
            let b = f.eval_realization(&sys, s).unwrap();
            assert!((&a - &b).norm() <= 1e-12 * (1.0 + a.norm()), "{}", spec.name);
            assert_eq!(spectral_factor(&sys, &cert, s).unwrap(), a);
        }
    }
}

#[test]
fn impedance_factor_on_wave() {
    let sys = discretize_phs(&corpus::wave(), 16).unwrap();
    let cert = classify_discrete(&sys).unwrap();
    let chi = spectral_factor(&sys, &cert, c(1.0, 0.0)).unwrap();
    let p = transfer(&sys, c(1.0, 0.0)).unwrap();
    assert!((chi - p - linalg::eye(1)).norm() < 1e-15);
    let res = factorization_residual(&sys, &cert, &[0.1, 1.0, 10.0]).unwrap();
    assert!(res.factor_exact && res.kind == FactorKind::Impedance);
    assert!(res.max_residual <= 1e-10);
    // Re(P + I) >= I on the right half-plane, so |chi^-1| <= 1.
    let f = SpectralFactor::new(&sys, &cert).unwrap();
    let h = hinf_sampling(&sys, &f, &[0.05, 0.5, 5.0], &log_grid(1e-2, 1e2, 30), 1e6);
    assert!(h.bounded && h.sup_chi_inv <= 1.0 + 1e-12, "{h:?}");
}

#[test]
fn scattering_factor_is_constant_and_transfer_all_pass() {
    let sys = discretize_phs(&corpus::counter_transport(), 12).unwrap();
    let cert = classify_discrete(&sys).unwrap();
    let chi = spectral_factor(&sys, &cert, c(0.3, 4.0)).unwrap();
    assert!((chi - linalg::eye(1) * r(2f64.sqrt())).norm() < 1e-15);
    for w in default_grid() {
        let p = transfer(&sys, c(0.0, w)).unwrap();
        assert!((p.adjoint() * &p - linalg::eye(1)).norm() <= 1e-10, "w = {w}");
        assert!((popov(&sys, w).unwrap() - linalg::eye(1) * r(2.0)).norm() <= 1e-10);
    }
    let res = factorization_residual(&sys, &cert, &default_grid()).unwrap();
    assert!(res.max_residual <= 1e-10);
}

#[test]
fn beam_is_positive_real() {
    let sys = discretize_beam(0.5, 16, false).unwrap();
    let mut checked = 0;
    for w in log_grid(1e-2, 1e3, 60) {
        if let Ok(h) = hermitian_part(&sys, w) {
            // Re P(iw) = eps exactly on the discrete beam.
            assert!(linalg::min_eig(&h) >= -1e-8);
            assert!((h[(0, 0)].re - 1.0).abs() <= 1e-6 * (1.0 + transfer(&sys, c(0.0, w)).unwrap().norm()));
            checked += 1;
        }
    }
    assert!(checked > 50);
}

#[test]
fn impedance_passive_beam_has_no_explicit_factor() {
    let sys = discretize_beam(0.5, 16, false).unwrap();
    let cert = classify_discrete(&sys).unwrap();
    assert!(cert.impedance_passive && !cert.impedance_energy_preserving);
    let res = factorization_residual(&sys, &cert, &[1.0]).unwrap();
    assert!(!res.factor_exact);
    assert!(res.max_residual > 1e-4, "{}", res.max_residual);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn popov_dominates_identity(seed in 0u64..1000, w in 1e-3f64..1e3) {
        let sys = corpus::random_impedance_passive(seed, 6);
        if let Ok(pop) = popov(&sys, w) {
            prop_assert!(linalg::hermitian_defect(&pop) <= 1e-12 * (1.0 + pop.norm()));
            prop_assert!(linalg::min_eig(&pop) >= 1.0 - 1e-10);
        }
    }
}
