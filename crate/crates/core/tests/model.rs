use passilq_core::corpus;
use passilq_core::linalg::{self, c, CMat};
use passilq_core::phs_model::{boundary_matrices, diagonalize_p1h, flip_matrix, validate_spec, HField, PhsSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

#[test]
fn hundred_random_diagonalizations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..100 {
        let n = rng.gen_range(1..=4);
        let pos = rng.gen_range(0..=n);
        let q = random_matrix(&mut rng, n).qr().q();
        let signs: Vec<f64> =
            (0..n).map(|i| if i < pos { rng.gen_range(0.5..2.0) } else { -rng.gen_range(0.5..2.0) }).collect();
        let p1 = linalg::herm(&(&q * linalg::diag_real(&signs) * q.adjoint()));
        let g = random_matrix(&mut rng, n);
        let h = linalg::herm(&(&g * g.adjoint())) + linalg::eye(n) * c(0.3, 0.0);
        let spec = PhsSpec {
            name: format!("random{trial}"),
            n,
            p: 0,
            k: 0,
            a: 0.0,
            b: 1.0,
            p1,
            p0: linalg::zeros(n, n),
            h: HField::Constant(h),
            wb1: linalg::zeros(0, 2 * n),
            wb2: linalg::zeros(n, 2 * n),
            wc: linalg::zeros(0, 2 * n),
            coercivity: 1e-8,
        };
        let d = diagonalize_p1h(&spec, 0.5).unwrap();
        assert_eq!(d.lambda.len(), pos, "trial {trial}");
        assert_eq!(d.theta.len(), n - pos);
        assert!(d.reconstruction_error(&spec, 0.5) < 1e-10, "trial {trial}");
        assert!((&d.s * &d.s_inv - linalg::eye(n)).norm() < 1e-10);
        assert!(d.lambda.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn boundary_form_identity_on_corpus() {
    for spec in corpus::specs() {
        let bm = boundary_matrices(&spec).unwrap();
        let n = spec.n;
        let j = linalg::block_diag(&[spec.p1.clone(), -&spec.p1]);
        let lhs = bm.r0.adjoint() * flip_matrix(n) * &bm.r0;
        assert!((lhs - j).norm() < 1e-12, "{}", spec.name);
    }
}

#[test]
fn corpus_validates_and_round_trips() {
    for spec in corpus::specs() {
        let rep = validate_spec(&spec, 11).unwrap();
        assert!(rep.passed(), "{}: {:?}", spec.name, rep.first_error());
        assert_eq!(rep.sampled_only, !spec.h.is_constant());
        let back = PhsSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
    }
}
