//! Implicit midpoint integration with exact discrete energy bookkeeping.
//!
//! One step with closed-loop matrix `Acl = A + BK` and external input `w`:
//!
//! ```text
//! (I - dt/2 Acl) x+ = (I + dt/2 Acl) x + dt B w_half,
//! u_half = K x_half + w_half,   y_half = C x_half + D u_half.
//! ```
//!
//! Since `x+ - x = dt (A x_half + B u_half)`, the energy increment is
//! `2 dt Re<A x_half + B u_half, x_half>_M`, so any supply-rate identity of the
//! semi-discrete system carries over to the steps with round-off error only.

use serde::Serialize;

use crate::error::SimError;
use crate::linalg::{self, r, CMat, CVec};
use crate::system::DiscreteSystem;

/// Input applied during a simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSignal {
    Zero,
    /// `u = K x`.
    Feedback(CMat),
    /// Samples at `times`, interpolated linearly to half-steps and held
    /// constant outside the sampled range.
    Prescribed {
        times: Vec<f64>,
        values: Vec<CVec>,
    },
}

/// Supply rate for the energy balance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BalanceMode {
    /// `d/dt |x|^2 = 2 Re<u, y>`.
    Impedance,
    /// `d/dt |x|^2 = |u|^2 - |y|^2`.
    Scattering,
    /// `d/dt |x|^2 = 2 Re<u, y> - 2 eps |u|^2`.
    StrictInput { eps: f64 },
}

impl BalanceMode {
    fn supply(&self, u_dot_y: f64, u_sq: f64, y_sq: f64) -> f64 {
        match *self {
            BalanceMode::Impedance => 2.0 * u_dot_y,
            BalanceMode::Scattering => u_sq - y_sq,
            BalanceMode::StrictInput { eps } => 2.0 * (u_dot_y - eps * u_sq),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    /// Keep every `stride`-th state (energies and costs are always kept).
    pub stride: usize,
    pub mode: BalanceMode,
    /// How often a singular step matrix may be answered by halving `dt`.
    pub max_halvings: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { stride: 1, mode: BalanceMode::Impedance, max_halvings: 8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    /// Number of times `dt` was halved because the step matrix was singular.
    pub dt_halvings: usize,
    /// Step boundaries `0, dt, ..., T`.
    pub times: Vec<f64>,
    pub stride: usize,
    /// States at `times[0], times[stride], ...` (and always the final one).
    pub states: Vec<CVec>,
    /// Half-step inputs and outputs, one per step.
    pub inputs: Vec<CVec>,
    pub outputs: Vec<CVec>,
    /// `|x|_M^2` at every step boundary.
    pub energy: Vec<f64>,
    /// Partial sums of `dt (|u|^2 + |y|^2)`, starting at 0.
    pub cost_running: Vec<f64>,
    /// Per-step `|x+|^2 - |x|^2`, evaluated as `2 Re<x+ - x, x_half>_M`.
    pub energy_increments: Vec<f64>,
    /// Per-step `Re<u, y>`, `|u|^2`, `|y|^2` at the half-step.
    pub u_dot_y: Vec<f64>,
    pub u_sq: Vec<f64>,
    pub y_sq: Vec<f64>,
    pub mode: BalanceMode,
    /// Per-step `|increment - dt * supply|` for `mode`.
    pub balance_residuals: Vec<f64>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.energy_increments.len()
    }

    pub fn final_state(&self) -> &CVec {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Signed per-step defects `increment - dt * supply`.
    pub fn defects(&self, mode: BalanceMode) -> Vec<f64> {
        (0..self.steps())
            .map(|i| self.energy_increments[i] - self.dt * mode.supply(self.u_dot_y[i], self.u_sq[i], self.y_sq[i]))
            .collect()
    }
}

/// `T = 20/|sigma|` for a stable `a`, else 10.
pub fn default_horizon(a: &CMat) -> f64 {
    let sigma = linalg::spectral_abscissa(a);
    if sigma < -1e-12 {
        20.0 / sigma.abs()
    } else {
        10.0
    }
}

/// `dt = min(1e-2, 0.1/|A|)`.
pub fn default_step(a: &CMat) -> f64 {
    let n = linalg::norm2(a);
    if n > 0.0 {
        (0.1 / n).min(1e-2)
    } else {
        1e-2
    }
}

fn interp(times: &[f64], values: &[CVec], t: f64) -> CVec {
    let last = times.len() - 1;
    if t <= times[0] {
        return values[0].clone();
    }
    if t >= times[last] {
        return values[last].clone();
    }
    let i = times.partition_point(|&s| s <= t) - 1;
    let w = (t - times[i]) / (times[i + 1] - times[i]);
    &values[i] * r(1.0 - w) + &values[i + 1] * r(w)
}

fn check_signal(sys: &DiscreteSystem, x0: &CVec, input: &InputSignal) -> Result<(), SimError> {
    sys.check_dims().map_err(|e| SimError::DimensionMismatch(e.to_string()))?;
    if x0.len() != sys.states() {
        return Err(SimError::DimensionMismatch(format!("x0 has {} entries, expected {}", x0.len(), sys.states())));
    }
    match input {
        InputSignal::Zero => Ok(()),
        InputSignal::Feedback(k) if k.shape() == (sys.inputs(), sys.states()) => Ok(()),
        InputSignal::Feedback(k) => Err(SimError::DimensionMismatch(format!("gain {:?}", k.shape()))),
        InputSignal::Prescribed { times, values } => {
            if times.is_empty() || times.len() != values.len() {
                return Err(SimError::InvalidParameter("prescribed input needs matching nonempty samples".into()));
            }
            if times.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(SimError::InvalidParameter("sample times must increase".into()));
            }
            if values.iter().any(|v| v.len() != sys.inputs()) {
                return Err(SimError::DimensionMismatch("prescribed sample length".into()));
            }
            Ok(())
        }
    }
}

pub fn simulate(
    sys: &DiscreteSystem,
    x0: &CVec,
    input: &InputSignal,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, SimError> {
    simulate_with(sys, x0, input, t_end, dt, &SimOptions::default())
}

pub fn simulate_with(
    sys: &DiscreteSystem,
    x0: &CVec,
    input: &InputSignal,
    t_end: f64,
    dt: f64,
    opts: &SimOptions,
) -> Result<Trajectory, SimError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SimError::InvalidParameter(format!("dt = {dt} must be positive")));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(SimError::InvalidParameter(format!("T = {t_end} must be finite and >= 0")));
    }
    check_signal(sys, x0, input)?;
    let (m, p) = (sys.states(), sys.inputs());
    let gain = match input {
        InputSignal::Feedback(k) => k.clone(),
        _ => linalg::zeros(p, m),
    };
    let a_cl = &sys.a + &sys.b * &gain;
    // Energies in the coordinates z = L* x, M = L L*; increments are taken by
    // polarization so no two large quadratic forms are subtracted.
    let lh = sys.check_weight().map_err(|e| SimError::InvalidParameter(e.to_string()))?.adjoint();

    let mut dt = dt;
    let mut halvings = 0;
    let (phi, psi) = loop {
        let lhs = linalg::eye(m) - &a_cl * r(0.5 * dt);
        let rhs = linalg::hstack(&(linalg::eye(m) + &a_cl * r(0.5 * dt)), &(&sys.b * r(dt)));
        match linalg::solve(&lhs, &rhs) {
            Ok(sol) => break (sol.columns(0, m).into_owned(), sol.columns(m, p).into_owned()),
            Err(_) if halvings < opts.max_halvings => {
                dt *= 0.5;
                halvings += 1;
            }
            Err(_) => return Err(SimError::StepSolveSingular { dt }),
        }
    };

    let steps = (t_end / dt).ceil() as usize;
    let stride = opts.stride.max(1);
    let y_of = |xh: &CVec, uh: &CVec| &sys.c * xh + &sys.d * uh;

    let mut traj = Trajectory {
        dt,
        dt_halvings: halvings,
        times: (0..=steps).map(|i| i as f64 * dt).collect(),
        stride,
        states: vec![x0.clone()],
        inputs: Vec::with_capacity(steps),
        outputs: Vec::with_capacity(steps),
        energy: Vec::with_capacity(steps + 1),
        cost_running: Vec::with_capacity(steps + 1),
        energy_increments: Vec::with_capacity(steps),
        u_dot_y: Vec::with_capacity(steps),
        u_sq: Vec::with_capacity(steps),
        y_sq: Vec::with_capacity(steps),
        mode: opts.mode,
        balance_residuals: Vec::with_capacity(steps),
    };
    let mut x = x0.clone();
    let energy = (&lh * &x).norm_squared();
    let mut cost = 0.0;
    traj.energy.push(energy);
    traj.cost_running.push(cost);

    for i in 0..steps {
        let w = match input {
            InputSignal::Prescribed { times, values } => interp(times, values, (i as f64 + 0.5) * dt),
            _ => CVec::zeros(p),
        };
        let next = &phi * &x + &psi * &w;
        let xh = (&x + &next) * r(0.5);
        let uh = &gain * &xh + &w;
        let yh = y_of(&xh, &uh);
        let next_energy = (&lh * &next).norm_squared();
        let u_dot_y = uh.dotc(&yh).re;
        let (u_sq, y_sq) = (uh.norm_squared(), yh.norm_squared());
        let increment = 2.0 * (&lh * (&next - &x)).dotc(&(&lh * &xh)).re;
        traj.balance_residuals.push((increment - dt * opts.mode.supply(u_dot_y, u_sq, y_sq)).abs());
        traj.energy_increments.push(increment);
        traj.u_dot_y.push(u_dot_y);
        traj.u_sq.push(u_sq);
        traj.y_sq.push(y_sq);
        cost += dt * (u_sq + y_sq);
        traj.cost_running.push(cost);
        traj.energy.push(next_energy);
        traj.inputs.push(uh);
        traj.outputs.push(yh);
        x = next;
        if (i + 1) % stride == 0 || i + 1 == steps {
            traj.states.push(x.clone());
        }
    }
    Ok(traj)
}

/// `J(0, T)` by midpoint quadrature of `|u|^2 + |y|^2`.
pub fn cost_integral(traj: &Trajectory) -> f64 {
    traj.cost_running.last().copied().unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub mode: BalanceMode,
    pub steps: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    /// Largest energy along the trajectory plus the total supplied magnitude.
    pub scale: f64,
    pub tolerance: f64,
    /// Every step satisfies `increment <= dt * supply + tolerance`.
    pub passive: bool,
    /// Every step satisfies the balance with equality up to `tolerance`.
    pub energy_preserving: bool,
}

pub fn balance_report(traj: &Trajectory, mode: BalanceMode) -> BalanceReport {
    let defects = traj.defects(mode);
    let supplied: f64 =
        (0..traj.steps()).map(|i| traj.dt * mode.supply(traj.u_dot_y[i], traj.u_sq[i], traj.y_sq[i]).abs()).sum();
    let scale = traj.energy.iter().cloned().fold(0.0, f64::max) + supplied;
    let tolerance = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let max_residual = defects.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let mean_residual =
        if defects.is_empty() { 0.0 } else { defects.iter().map(|d| d.abs()).sum::<f64>() / defects.len() as f64 };
    BalanceReport {
        mode,
        steps: defects.len(),
        max_residual,
        mean_residual,
        scale,
        tolerance,
        passive: defects.iter().all(|&d| d <= tolerance),
        energy_preserving: max_residual <= tolerance,
    }
}
