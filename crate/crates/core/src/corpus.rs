//! Reference port-Hamiltonian specs and seeded random passive systems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, c, real_matrix, CMat};
use crate::phs_model::{HField, PhsSpec};
use crate::system::{DiscreteSystem, SystemMeta};

fn spec(name: &str, n: usize, p1: CMat, h: HField, wb1: CMat, wb2: CMat, wc: CMat) -> PhsSpec {
    PhsSpec {
        name: name.into(),
        n,
        p: wb1.nrows(),
        k: wc.nrows(),
        a: 0.0,
        b: 1.0,
        p1,
        p0: linalg::zeros(n, n),
        h,
        wb1,
        wb2,
        wc,
        coercivity: 1e-8,
    }
}

fn swap() -> CMat {
    real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

/// Wave equation in (strain, momentum) form. Input: second effort at `b`;
/// homogeneous: first effort at `a`; output: first effort at `b`.
/// Impedance energy preserving.
pub fn wave() -> PhsSpec {
    spec(
        "wave",
        2,
        swap(),
        HField::Constant(linalg::eye(2)),
        real_matrix(1, 4, &[0.0, 1.0, 0.0, 0.0]),
        real_matrix(1, 4, &[0.0, 0.0, 1.0, 0.0]),
        real_matrix(1, 4, &[1.0, 0.0, 0.0, 0.0]),
    )
}

/// [`wave`] with a spatially varying, non-diagonal energy density.
pub fn wave_variable_h() -> PhsSpec {
    let h = |s: f64| real_matrix(2, 2, &[1.0 + s, 0.2 * s, 0.2 * s, 2.0 - s]);
    PhsSpec {
        name: "wave_variable_h".into(),
        h: HField::Mesh { mesh: vec![0.0, 0.5, 1.0], values: vec![h(0.0), h(0.5), h(1.0)] },
        ..wave()
    }
}

/// [`wave`] with the boundary dissipation `e1(a) = r e2(a)`, `r = 1/2`.
/// Impedance passive, not energy preserving.
pub fn damped_wave() -> PhsSpec {
    PhsSpec { name: "damped_wave".into(), wb2: real_matrix(1, 4, &[0.0, 0.0, 1.0, -0.5]), ..wave() }
}

/// Transport `x_t = x_z`; input is the inflow `e(b)`, output the outflow `e(a)`.
/// Scattering energy preserving.
pub fn transport_scattering() -> PhsSpec {
    spec(
        "transport",
        1,
        linalg::eye(1),
        HField::Constant(linalg::eye(1)),
        real_matrix(1, 2, &[1.0, 0.0]),
        linalg::zeros(0, 2),
        real_matrix(1, 2, &[0.0, 1.0]),
    )
}

/// Transport with homogeneous inflow and no ports.
pub fn transport_homogeneous() -> PhsSpec {
    spec(
        "transport_homogeneous",
        1,
        linalg::eye(1),
        HField::Constant(linalg::eye(1)),
        linalg::zeros(0, 2),
        real_matrix(1, 2, &[1.0, 0.0]),
        linalg::zeros(0, 2),
    )
}

/// Two counter-propagating transports coupled by reflection at `a`.
/// Scattering energy preserving.
pub fn counter_transport() -> PhsSpec {
    spec(
        "counter_transport",
        2,
        linalg::diag_real(&[1.0, -1.0]),
        HField::Constant(linalg::diag_real(&[1.0, 2.0])),
        real_matrix(1, 4, &[1.0, 0.0, 0.0, 0.0]),
        real_matrix(1, 4, &[0.0, 0.0, -1.0, 1.0]),
        real_matrix(1, 4, &[0.0, 1.0, 0.0, 0.0]),
    )
}

/// Every reference spec.
pub fn specs() -> Vec<PhsSpec> {
    vec![wave(), wave_variable_h(), damped_wave(), transport_scattering(), transport_homogeneous(), counter_transport()]
}

/// Looks up a reference spec by its `name`.
pub fn by_name(name: &str) -> Option<PhsSpec> {
    specs().into_iter().find(|s| s.name == name)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let (re, im): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Random Hermitian positive semidefinite matrix of the given rank.
fn random_psd(rng: &mut ChaCha8Rng, size: usize, rank: usize) -> CMat {
    let g = gaussian_matrix(rng, size, rank);
    linalg::herm(&(&g * g.adjoint()))
}

/// Seeded random impedance passive system with `m <= max_states` states.
///
/// Built as `MA = S - R`, `MB = C*`, `D = Z + Q` with `S, Z` skew-Hermitian and
/// `R, Q` positive semidefinite of random (possibly zero) rank, so the
/// impedance KYP block is `-diag(2R, 2Q)`.
pub fn random_impedance_passive(seed: u64, max_states: usize) -> DiscreteSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=max_states.max(1));
    let p = rng.gen_range(1..=m.min(3));
    let g = gaussian_matrix(&mut rng, m, m);
    let weight = linalg::herm(&(&g * g.adjoint())) + linalg::eye(m) * c(0.5, 0.0);
    let s = linalg::skew(&gaussian_matrix(&mut rng, m, m));
    let rank_r = rng.gen_range(0..=m);
    let diss = random_psd(&mut rng, m, rank_r);
    let out = gaussian_matrix(&mut rng, p, m);
    let z = linalg::skew(&gaussian_matrix(&mut rng, p, p));
    let rank_q = rng.gen_range(0..=p);
    let q = random_psd(&mut rng, p, rank_q) * c(0.5, 0.0);

    let a = linalg::solve(&weight, &(s - diss)).expect("weight is positive definite");
    let b = linalg::solve(&weight, &out.adjoint()).expect("weight is positive definite");
    DiscreteSystem::new(a, b, out, z + q, weight).expect("consistent shapes").with_meta(SystemMeta {
        grid: 0,
        scheme: "random".into(),
        provenance: format!("seed={seed}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::passivity::classify_discrete;

    #[test]
    fn random_systems_are_impedance_passive() {
        for seed in 0..40 {
            let sys = random_impedance_passive(seed, 6);
            assert!(sys.states() <= 6);
            let cert = classify_discrete(&sys).unwrap();
            assert!(cert.impedance_passive, "seed {seed}: {:?}", cert.min_eig_imp);
        }
    }

    #[test]
    fn generator_is_deterministic() {
        assert_eq!(random_impedance_passive(7, 6), random_impedance_passive(7, 6));
        assert_ne!(random_impedance_passive(7, 6).a, random_impedance_passive(8, 6).a);
    }
}
