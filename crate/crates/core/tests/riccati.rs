use passilq_core::corpus;
use passilq_core::discretize::discretize_phs;
use passilq_core::linalg::{self, c, r, CMat, CVec};
use passilq_core::lq_riccati::{
    care_residual, cost_quadratic, explicit_solution, node_riccati_residual, solve_care, solve_care_hamiltonian,
};
use passilq_core::passivity::classify_discrete;
use passilq_core::simulate::{cost_integral, simulate, InputSignal};

/// `a* X + X a + q = 0` through the Kronecker form, column-major `vec`.
fn lyapunov_kron(a: &CMat, q: &CMat) -> CMat {
    let n = a.nrows();
    let ah = a.adjoint();
    let mut big = linalg::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            for k in 0..n {
                // (A* X)_{ij} = sum_k A*_{ik} X_{kj}
                big[(row, j * n + k)] += ah[(i, k)];
                // (X A)_{ij} = sum_k X_{ik} A_{kj}
                big[(row, k * n + i)] += a[(k, j)];
            }
        }
    }
    let rhs = CMat::from_fn(n * n, 1, |idx, _| -q[(idx % n, idx / n)]);
    let v = linalg::solve(&big, &rhs).unwrap();
    CMat::from_fn(n, n, |i, j| v[(j * n + i, 0)])
}

#[test]
fn lyapunov_matches_kronecker_oracle() {
    for seed in 0..20 {
        let sys = corpus::random_impedance_passive(seed, 5);
        let a = &sys.a - linalg::eye(sys.states()) * r(0.5);
        let q = linalg::herm(&(sys.c.adjoint() * &sys.c)) + linalg::eye(sys.states());
        let x = linalg::lyapunov(&a, &q).unwrap();
        let y = lyapunov_kron(&a, &q);
        assert!((&x - &y).norm() <= 1e-9 * (1.0 + y.norm()), "seed {seed}");
    }
}

#[test]
fn newton_kleinman_agrees_with_hamiltonian_oracle() {
    for seed in 0..100 {
        let sys = corpus::random_impedance_passive(seed, 6);
        let nk = solve_care(&sys).unwrap();
        let ham = solve_care_hamiltonian(&sys).unwrap();
        let gap = (&nk.p - &ham.p).norm();
        assert!(gap <= 1e-8 * (1.0 + nk.p.norm()), "seed {seed}: {gap:e}");
        assert!(nk.residual_care <= 1e-9, "seed {seed}: {}", nk.residual_care);
        assert!(nk.residual_node <= 1e-9, "seed {seed}: {}", nk.residual_node);
        assert!(nk.closed_loop_abscissa < 0.0);
    }
}

#[test]
fn quadratic_cost_matches_simulated_optimal_loop() {
    let sys = corpus::random_impedance_passive(3, 4);
    let sol = solve_care(&sys).unwrap();
    let x0 = CVec::from_fn(sys.states(), |i, _| c(1.0 / (1.0 + i as f64), 0.2));
    let expected = cost_quadratic(&sol.p, &x0, &sys.m);
    let t_end = 40.0 / sol.closed_loop_abscissa.abs();
    let traj = simulate(&sys, &x0, &InputSignal::Feedback(sol.k_fb.clone()), t_end, 1e-3).unwrap();
    let got = cost_integral(&traj);
    assert!((got - expected).abs() <= 1e-4 * expected, "{got} vs {expected}");
}

#[test]
fn wave_identity_solution_and_perturbation() {
    let sys = discretize_phs(&corpus::wave_variable_h(), 16).unwrap();
    let cert = classify_discrete(&sys).unwrap();
    let sol = explicit_solution(&sys, &cert).unwrap();
    assert!(sol.residual_node <= 1e-12);
    assert!((solve_care(&sys).unwrap().p - linalg::eye(sys.states())).norm() <= 1e-8);
    let bumped = linalg::eye(sys.states()) * r(1.1);
    assert!(node_riccati_residual(&sys, &bumped, &sol.e, &sol.f) >= 1e-2);
    assert!(care_residual(&sys, &bumped).unwrap() > 1e-3);
}

#[test]
fn scattering_solution_on_counter_transport() {
    let sys = discretize_phs(&corpus::counter_transport(), 12).unwrap();
    let cert = classify_discrete(&sys).unwrap();
    assert!(cert.scattering_energy_preserving && !cert.impedance_passive);
    let sol = explicit_solution(&sys, &cert).unwrap();
    assert!(sol.residual_node <= 1e-12);
    let care = solve_care(&sys).unwrap();
    assert!((care.p - linalg::eye(sys.states())).norm() <= 1e-8);
}
