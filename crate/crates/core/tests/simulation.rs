use passilq_core::beam::{self, BeamParams};
use passilq_core::corpus;
use passilq_core::discretize::{discretize_beam, discretize_phs};
use passilq_core::linalg::{c, CVec};
use passilq_core::simulate::{
    balance_report, cost_integral, simulate, simulate_with, BalanceMode, InputSignal, SimOptions,
};
use passilq_core::DiscreteSystem;

fn chirp(inputs: usize) -> InputSignal {
    let times: Vec<f64> = (0..=400).map(|i| i as f64 * 0.05).collect();
    let values = times
        .iter()
        .map(|t| CVec::from_fn(inputs, |k, _| c((t * (1.0 + 0.3 * t + k as f64)).sin(), 0.1 * t.cos())))
        .collect();
    InputSignal::Prescribed { times, values }
}

fn smooth_state(sys: &DiscreteSystem) -> CVec {
    CVec::from_fn(sys.states(), |i, _| c((0.4 * i as f64).cos(), 0.1 * (i as f64).sin()))
}

#[test]
fn impedance_energy_preserving_balance_is_exact() {
    let sys = discretize_phs(&corpus::wave_variable_h(), 16).unwrap();
    let traj = simulate(&sys, &smooth_state(&sys), &chirp(1), 100.0, 1e-2).unwrap();
    assert_eq!(traj.steps(), 10_000);
    let rep = balance_report(&traj, BalanceMode::Impedance);
    assert!(rep.energy_preserving, "{rep:?}");
    assert!(rep.max_residual <= 1e-12 * rep.scale, "{rep:?}");
}

#[test]
fn scattering_zero_input_cost_is_energy_drop() {
    let sys = discretize_phs(&corpus::counter_transport(), 12).unwrap();
    let x0 = smooth_state(&sys);
    let traj = simulate(&sys, &x0, &InputSignal::Zero, 3.0, 1e-3).unwrap();
    let drop = traj.energy[0] - traj.energy.last().unwrap();
    assert!((cost_integral(&traj) - drop).abs() <= 1e-12 * traj.energy[0]);
    assert!(balance_report(&traj, BalanceMode::Scattering).energy_preserving);
}

#[test]
fn beam_strict_input_identity() {
    let eps = 0.5;
    let sys = discretize_beam(eps, 12, false).unwrap();
    let opts = SimOptions { mode: BalanceMode::StrictInput { eps }, ..SimOptions::default() };
    let traj = simulate_with(&sys, &smooth_state(&sys), &chirp(1), 5.0, 1e-3, &opts).unwrap();
    let rep = balance_report(&traj, BalanceMode::StrictInput { eps });
    assert!(rep.max_residual <= 1e-12 * rep.scale, "{rep:?}");
    // Impedance passive but not energy preserving.
    let imp = balance_report(&traj, BalanceMode::Impedance);
    assert!(imp.passive && !imp.energy_preserving);
}

#[test]
fn beam_optimal_loop_energy_decays() {
    let (rep, traj) = beam::verify_beam(&BeamParams::new(0.75, 20), Some(10.0), Some(5e-3)).unwrap();
    assert!(rep.energy_nonincreasing);
    assert!(traj.energy.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-13)));
    assert!(rep.balance_max_residual <= 1e-12 * rep.initial_energy);
}

#[test]
fn beam_long_horizon_cost() {
    let (rep, _) = beam::verify_beam(&BeamParams::new(0.75, 40), Some(60.0), None).unwrap();
    assert!(rep.cost_relative_error <= 2e-2, "{}", rep.cost_relative_error);
    assert!(rep.passed());
}

#[test]
fn beam_cost_gap_shrinks_as_horizon_doubles() {
    let params = BeamParams::new(0.75, 20);
    let gaps: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&t| beam::verify_beam(&params, Some(t), Some(1e-2)).unwrap().0.cost_relative_error)
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn beam_riccati_identity_for_several_eps() {
    for eps in [0.0, 0.25, 0.75, 2.0] {
        let (rep, _) = beam::verify_beam(&BeamParams::new(eps, 16), Some(0.1), Some(1e-2)).unwrap();
        assert!(rep.riccati_residual <= 1e-12, "{eps}: {}", rep.riccati_residual);
        assert!(rep.contraction_margin >= 0.0);
    }
}
