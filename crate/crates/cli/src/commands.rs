use std::fmt::Write as _;
use std::path::Path;

use passilq_core::beam::{self, BeamParams};
use passilq_core::discretize::discretize_phs;
use passilq_core::freq_domain::{self, FactorKind, SpectralFactor};
use passilq_core::linalg::{self, c, r, CMat, CVec};
use passilq_core::lq_riccati::{self, RiccatiSolution};
use passilq_core::passivity::{self, PassivityCertificate};
use passilq_core::phs_model::validate_spec;
use passilq_core::simulate::{self, BalanceMode, InputSignal, SimOptions, Trajectory};
use passilq_core::{corpus, json, DiscreteSystem, PhsSpec};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{CommandName, FeedbackKind, LqMethod, RunConfig, SupplyKind};
use crate::error::CliError;

const DEFAULT_CELLS: usize = 16;
const MAX_STEPS: usize = 10_000_000;

pub const FLAGS: [&str; 4] =
    ["impedance_passive", "impedance_energy_preserving", "scattering_passive", "scattering_energy_preserving"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= threshold`.
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, passed: value <= threshold }
    }

    fn flag(name: &str, holds: bool) -> Self {
        let v = if holds { 1.0 } else { 0.0 };
        Check { name: name.into(), value: v, threshold: 1.0, passed: holds }
    }
}

pub struct Outcome {
    pub result: Value,
    pub checks: Vec<Check>,
    pub text: String,
    pub csv: Option<String>,
    /// Primary artifact on stdout when no output directory is given.
    pub artifact: Option<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

enum Input {
    Spec(PhsSpec),
    System(DiscreteSystem),
}

fn load(cfg: &RunConfig) -> Result<Input, CliError> {
    let source = cfg.input.as_deref().ok_or_else(|| CliError::Invalid("no input given".into()))?;
    if source == "random" {
        return Ok(Input::System(corpus::random_impedance_passive(cfg.seed, 6)));
    }
    if let Some(name) = source.strip_prefix("corpus:") {
        return corpus::by_name(name).map(Input::Spec).ok_or_else(|| {
            let names: Vec<String> = corpus::specs().into_iter().map(|s| s.name).collect();
            CliError::Invalid(format!("unknown corpus spec {name:?}; available: {}", names.join(", ")))
        });
    }
    let path = Path::new(source);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::schema(path, &e))?;
    let located = |e: CliError| match e {
        CliError::Schema(msg) => CliError::Schema(format!("{}: {msg}", path.display())),
        other => other,
    };
    if doc.get("A").is_some() {
        DiscreteSystem::from_json(&text).map(Input::System).map_err(|e| located(e.into()))
    } else {
        PhsSpec::from_json(&text).map(Input::Spec).map_err(|e| located(e.into()))
    }
}

fn load_system(cfg: &RunConfig) -> Result<DiscreteSystem, CliError> {
    match load(cfg)? {
        Input::System(sys) => Ok(sys),
        Input::Spec(spec) => Ok(discretize_phs(&spec, cfg.cells.unwrap_or(DEFAULT_CELLS))?),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn e(x: f64) -> String {
    format!("{x:.3e}")
}

pub fn execute(cfg: &RunConfig, tol_scale: f64) -> Result<Outcome, CliError> {
    match cfg.command {
        CommandName::Certify => certify(cfg, tol_scale),
        CommandName::Discretize => discretize(cfg, tol_scale),
        CommandName::Lq => lq(cfg, tol_scale),
        CommandName::Popov => popov(cfg, tol_scale),
        CommandName::Simulate => simulate_cmd(cfg, tol_scale),
        CommandName::Beam => beam_cmd(cfg, tol_scale),
    }
}

fn certificate_table(title: &str, cert: &PassivityCertificate) -> String {
    let mut out = format!("{title}\n");
    let rows = [
        (FLAGS[0], cert.impedance_passive, "min eig", cert.min_eig_imp),
        (FLAGS[1], cert.impedance_energy_preserving, "|W|_F", cert.norm_imp),
        (FLAGS[2], cert.scattering_passive, "min eig", Some(cert.min_eig_scat)),
        (FLAGS[3], cert.scattering_energy_preserving, "|W|_F", Some(cert.norm_scat)),
    ];
    for (name, flag, label, margin) in rows {
        let margin = margin.map_or("n/a (k != p)".to_string(), |m| format!("{label} {m:>10.3e}"));
        let _ = writeln!(out, "  {name:<30} {flag:<6} {margin}");
    }
    let _ = writeln!(out, "  tolerance {:.3e}", cert.tolerance);
    if cert.indeterminate.is_empty() {
        out.push_str("  indeterminate: none\n");
    } else {
        let _ = writeln!(out, "  indeterminate: {}", cert.indeterminate.join(", "));
    }
    out
}

fn expected_flags(cfg: &RunConfig, cert: &PassivityCertificate) -> Result<Vec<Check>, CliError> {
    let flags = cert.flags();
    cfg.expect
        .iter()
        .map(|want| match FLAGS.iter().position(|f| f == want) {
            Some(i) => Ok(Check::flag(&format!("expect {want}"), flags[i])),
            None => Err(CliError::Invalid(format!("unknown flag {want:?}; expected one of {}", FLAGS.join(", ")))),
        })
        .collect()
}

fn certify(cfg: &RunConfig, tol_scale: f64) -> Result<Outcome, CliError> {
    let (cert, subject, validation) = match load(cfg)? {
        Input::Spec(spec) => {
            let report = validate_spec(&spec, 33)?;
            if !report.passed() {
                let text = report
                    .checks
                    .iter()
                    .map(|c| format!("  {:<40} {}\n", c.name, if c.passed { "ok" } else { &c.detail }))
                    .collect::<String>();
                return Ok(Outcome {
                    result: json!({ "subject": spec.name, "validation": to_value(&report) }),
                    checks: vec![Check::flag("spec validation", false)],
                    text: format!("validation of {} failed\n{text}", spec.name),
                    csv: None,
                    artifact: None,
                });
            }
            let cert = passivity::classify_scaled(&spec, tol_scale)?;
            (cert, format!("{} (continuous)", spec.name), Some(report))
        }
        Input::System(sys) => {
            let cert = passivity::classify_discrete_scaled(&sys, tol_scale)?;
            (cert, format!("system with {} states (discrete)", sys.states()), None)
        }
    };
    let checks = expected_flags(cfg, &cert)?;
    Ok(Outcome {
        result: json!({
            "subject": subject,
            "certificate": to_value(&cert.report()),
            "validation": validation.map(|v| to_value(&v)),
        }),
        text: certificate_table(&format!("certificate: {subject}"), &cert),
        checks,
        csv: None,
        artifact: None,
    })
}

fn discretize(cfg: &RunConfig, tol_scale: f64) -> Result<Outcome, CliError> {
    let Input::Spec(spec) = load(cfg)? else {
        return Err(CliError::Invalid("discretize needs a spec, not a discrete system".into()));
    };
    let cells = cfg.cells.unwrap_or(DEFAULT_CELLS);
    let sys = discretize_phs(&spec, cells)?;
    let cont = passivity::classify_scaled(&spec, tol_scale)?;
    let disc = passivity::classify_discrete_scaled(&sys, tol_scale)?;
    let mut checks = vec![Check::flag("flags preserved", cont.flags() == disc.flags())];
    checks.extend(expected_flags(cfg, &disc)?);
    let text = format!(
        "{} on {cells} cells: {} states, {} inputs, {} outputs (scheme {})\n{}{}",
        spec.name,
        sys.states(),
        sys.inputs(),
        sys.outputs(),
        sys.meta.scheme,
        certificate_table("continuous certificate", &cont),
        certificate_table("discrete certificate", &disc),
    );
    Ok(Outcome {
        result: json!({
            "spec": spec.name,
            "cells": cells,
            "states": sys.states(),
            "inputs": sys.inputs(),
            "outputs": sys.outputs(),
            "scheme": sys.meta.scheme,
            "continuous": to_value(&cont.report()),
            "discrete": to_value(&disc.report()),
        }),
        checks,
        text,
        csv: None,
        artifact: Some(sys.to_json()),
    })
}

fn solution_value(sol: &RiccatiSolution) -> Value {
    json!({
        "report": to_value(&sol.report()),
        "P": to_value(&json::encode(&sol.p)),
        "K": to_value(&json::encode(&sol.k_fb)),
        "E": to_value(&json::encode(&sol.e)),
        "F": to_value(&json::encode(&sol.f)),
    })
}

fn lq(cfg: &RunConfig, tol_scale: f64) -> Result<Outcome, CliError> {
    let sys = load_system(cfg)?;
    let cert = passivity::classify_discrete_scaled(&sys, tol_scale)?;
    let mut solutions: Vec<(String, Result<RiccatiSolution, String>)> = Vec::new();
    if matches!(cfg.method, LqMethod::Care | LqMethod::Both) {
        solutions.push(("care".into(), lq_riccati::solve_care(&sys).map_err(|e| e.to_string())));
    }
    if matches!(cfg.method, LqMethod::Explicit | LqMethod::Both) {
        solutions.push(("explicit".into(), lq_riccati::explicit_solution(&sys, &cert).map_err(|e| e.to_string())));
    }

    let mut checks = Vec::new();
    let mut entries = Vec::new();
    let mut text = format!(
        "{:<10} {:<20} {:>10} {:>10} {:>12} {:>11}\n",
        "route", "method", "care_res", "node_res", "lambda_max", "abscissa"
    );
    let passive = cert.impedance_passive || cert.scattering_passive;
    for (route, sol) in &solutions {
        match sol {
            Ok(sol) => {
                checks.push(Check::at_most(&format!("{route}: CARE residual"), sol.residual_care, 1e-8 * tol_scale));
                checks.push(Check::at_most(&format!("{route}: closed-loop abscissa"), sol.closed_loop_abscissa, 0.0));
                if route == "explicit" {
                    checks.push(Check::at_most(
                        &format!("{route}: node residual"),
                        sol.residual_node,
                        1e-12 * tol_scale,
                    ));
                }
                let lmax = lq_riccati::p_eigenvalues(&sys, &sol.p)?.into_iter().fold(f64::MIN, f64::max);
                if passive {
                    checks.push(Check::at_most(&format!("{route}: lambda_max(P)"), lmax, 1.0 + 1e-8 * tol_scale));
                }
                let _ = writeln!(
                    text,
                    "{route:<10} {:<20} {:>10} {:>10} {:>12.9} {:>11}",
                    to_value(&sol.method).as_str().unwrap_or(""),
                    e(sol.residual_care),
                    e(sol.residual_node),
                    lmax,
                    e(sol.closed_loop_abscissa)
                );
                let mut v = solution_value(sol);
                v["route"] = json!(route);
                v["lambda_max"] = json!(lmax);
                entries.push(v);
            }
            Err(msg) => {
                checks.push(Check::flag(&format!("{route}: solved"), false));
                let _ = writeln!(text, "{route:<10} failed: {msg}");
                entries.push(json!({ "route": route, "error": msg }));
            }
        }
    }
    if let [(_, Ok(a)), (_, Ok(b))] = solutions.as_slice() {
        let diff = (&a.p - &b.p).norm() / (1.0 + a.p.norm());
        checks.push(Check::at_most("routes agree on P", diff, 1e-8 * tol_scale));
        let _ = writeln!(text, "relative |P_care - P_explicit|_F = {}", e(diff));
    }
    Ok(Outcome {
        result: json!({
            "states": sys.states(),
            "certificate": to_value(&cert.report()),
            "solutions": entries,
        }),
        checks,
        text,
        csv: None,
        artifact: None,
    })
}

fn popov(cfg: &RunConfig, tol_scale: f64) -> Result<Outcome, CliError> {
    let sys = load_system(cfg)?;
    let cert = passivity::classify_discrete_scaled(&sys, tol_scale)?;
    let factor = match SpectralFactor::new(&sys, &cert) {
        Ok(f) => f,
        Err(passilq_core::FreqError::NotEnergyPreserving) => {
            let kind = if sys.inputs() == sys.outputs() { FactorKind::Impedance } else { FactorKind::Scattering };
            SpectralFactor::candidate(&sys, kind)?
        }
        Err(err) => return Err(err.into()),
    };
    let grid_cfg = cfg.omega.unwrap_or_default();
    let grid = freq_domain::log_grid(grid_cfg.min, grid_cfg.max, grid_cfg.points);
    let resp = freq_domain::frequency_response(&sys, &factor, &grid);

    let mut csv = String::from("omega,p_norm,popov_norm,residual\n");
    let mut popov_max = 0.0f64;
    for i in 0..resp.omegas.len() {
        let pn = linalg::norm2(&resp.popov_values[i]);
        popov_max = popov_max.max(pn);
        let _ = writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            resp.omegas[i],
            linalg::norm2(&resp.p_values[i]),
            pn,
            resp.residuals[i]
        );
    }
    let max_res = resp.max_residual();
    let mut checks = Vec::new();
    if factor.factor_exact {
        checks.push(Check::at_most("factorization residual", max_res, 1e-10 * tol_scale * popov_max.max(1.0)));
    }
    checks.extend(expected_flags(cfg, &cert)?);
    let scope = if factor.factor_exact {
        "energy preserving: factor is exact"
    } else {
        "not energy preserving: candidate factor, residual is informational"
    };
    let text = format!(
        "{:?} factor on {} of {} frequencies ({}): max residual {}\n{}",
        factor.kind,
        resp.omegas.len(),
        grid.len(),
        scope,
        e(max_res),
        resp.warnings.iter().map(|w| format!("warning: {w}\n")).collect::<String>()
    );
    Ok(Outcome {
        result: json!({
            "factor": to_value(&factor.kind),
            "factor_exact": factor.factor_exact,
            "grid": to_value(&grid_cfg),
            "evaluated": resp.omegas.len(),
            "max_residual": max_res,
            "skipped": resp.skipped,
            "warnings": resp.warnings,
        }),
        checks,
        text,
        csv: Some(csv),
        artifact: None,
    })
}

/// Smooth deterministic state of unit energy.
fn unit_state(sys: &DiscreteSystem) -> CVec {
    let x = CVec::from_fn(sys.states(), |i, _| c((1.0 + i as f64).sqrt().sin() + 0.5, 0.3 * (0.7 * i as f64).cos()));
    let energy = sys.energy(&x);
    x / r(energy.sqrt())
}

fn load_gain(path: &str, sys: &DiscreteSystem) -> Result<CMat, CliError> {
    let path = Path::new(path);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let rows: json::Rows = serde_json::from_str(&text).map_err(|e| CliError::schema(path, &e))?;
    let k = json::decode(&rows, Some(sys.states()), "K")
        .map_err(|m| CliError::Schema(format!("{}: {m}", path.display())))?;
    if k.nrows() != sys.inputs() {
        return Err(CliError::Schema(format!(
            "{}: gain has {} rows, system has {} inputs",
            path.display(),
            k.nrows(),
            sys.inputs()
        )));
    }
    Ok(k)
}

/// `t, energy, running_cost, balance_residual, y_norm`; row 0 is the initial
/// state, later rows are step ends with half-step outputs.
fn trajectory_csv(traj: &Trajectory, mode: BalanceMode, y0: f64) -> String {
    let defects = traj.defects(mode);
    let mut csv = String::from("t,energy,running_cost,balance_residual,y_norm\n");
    let _ = writeln!(csv, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", 0.0, traj.energy[0], 0.0, 0.0, y0);
    for i in 0..traj.steps() {
        let _ = writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            traj.times[i + 1],
            traj.energy[i + 1],
            traj.cost_running[i + 1],
            defects[i],
            traj.y_sq[i].sqrt()
        );
    }
    csv
}

fn check_steps(t_end: f64, dt: f64) -> Result<(), CliError> {
    if t_end / dt > MAX_STEPS as f64 {
        return Err(CliError::Invalid(format!("T/dt = {:.3e} exceeds {MAX_STEPS} steps", t_end / dt)));
    }
    Ok(())
}

fn simulate_cmd(cfg: &RunConfig, tol_scale: f64) -> Result<Outcome, CliError> {
    let sys = load_system(cfg)?;
    let gain = match cfg.feedback {
        FeedbackKind::None => None,
        FeedbackKind::NegOutput => {
            if sys.inputs() != sys.outputs() {
                return Err(CliError::Invalid("neg_output feedback needs as many outputs as inputs".into()));
            }
            // u = -(Cx + Du)  <=>  (I + D) u = -C x
            let lhs = linalg::eye(sys.inputs()) + &sys.d;
            let k = linalg::solve(&lhs, &sys.c).map_err(|_| CliError::Numerical("I + D is singular".into()))?;
            Some(-k)
        }
        FeedbackKind::Gain => Some(load_gain(cfg.gain.as_deref().unwrap_or_default(), &sys)?),
    };
    let a_cl = match &gain {
        Some(k) => &sys.a + &sys.b * k,
        None => sys.a.clone(),
    };
    let t_end = cfg.t_end.unwrap_or_else(|| simulate::default_horizon(&a_cl));
    let dt = cfg.dt.unwrap_or_else(|| simulate::default_step(&a_cl));
    check_steps(t_end, dt)?;
    let mode = match cfg.supply {
        SupplyKind::Impedance => BalanceMode::Impedance,
        SupplyKind::Scattering => BalanceMode::Scattering,
    };
    if mode == BalanceMode::Impedance && sys.inputs() != sys.outputs() {
        return Err(CliError::Invalid(
            "impedance supply needs as many outputs as inputs; use --supply scattering".into(),
        ));
    }
    let x0 = unit_state(&sys);
    let input = gain.clone().map_or(InputSignal::Zero, InputSignal::Feedback);
    let opts = SimOptions { stride: usize::MAX, mode, max_halvings: 8 };
    let traj = simulate::simulate_with(&sys, &x0, &input, t_end, dt, &opts)?;
    let balance = simulate::balance_report(&traj, mode);
    let u0 = gain.as_ref().map_or(CVec::zeros(sys.inputs()), |k| k * &x0);
    let y0 = (&sys.c * &x0 + &sys.d * u0).norm();
    let cost = simulate::cost_integral(&traj);
    let final_energy = *traj.energy.last().expect("nonempty");
    let checks = vec![Check::at_most("energy balance", balance.max_residual, balance.tolerance * tol_scale)];
    let text = format!(
        "{} steps of dt = {} to T = {}: energy {} -> {}, cost {}, max balance residual {} (tolerance {})\n",
        traj.steps(),
        e(traj.dt),
        e(t_end),
        e(traj.energy[0]),
        e(final_energy),
        e(cost),
        e(balance.max_residual),
        e(balance.tolerance * tol_scale)
    );
    Ok(Outcome {
        result: json!({
            "feedback": to_value(&cfg.feedback),
            "T": t_end,
            "dt": traj.dt,
            "dt_halvings": traj.dt_halvings,
            "steps": traj.steps(),
            "initial_energy": traj.energy[0],
            "final_energy": final_energy,
            "cost": cost,
            "balance": to_value(&balance),
        }),
        checks,
        text,
        csv: Some(trajectory_csv(&traj, mode, y0)),
        artifact: None,
    })
}

fn beam_cmd(cfg: &RunConfig, tol_scale: f64) -> Result<Outcome, CliError> {
    let params = BeamParams { eps: cfg.eps.unwrap_or(0.0), cells: cfg.cells.unwrap_or(40), profile: cfg.profile };
    let t_end = match cfg.t_end {
        Some(t) => t,
        None => beam::default_horizon(&params)?,
    };
    check_steps(t_end, cfg.dt.unwrap_or_else(|| beam::default_step(&params)))?;
    let (rep, traj) = beam::verify_beam(&params, Some(t_end), cfg.dt)?;
    let mode = BalanceMode::StrictInput { eps: params.eps };
    let y0 = {
        let sys = passilq_core::discretize::discretize_beam(params.eps, params.cells, false)?;
        let x0 = beam::initial_state(&params);
        let u0 = beam::feedback_gain(&sys, params.eps) * &x0;
        (&sys.c * &x0 + &sys.d * u0).norm()
    };
    let checks = vec![
        Check::at_most("riccati residual", rep.riccati_residual, 1e-12 * tol_scale),
        Check::at_most("closed-loop abscissa", rep.closed_loop_abscissa, 0.0),
        Check::flag("energy nonincreasing", rep.energy_nonincreasing),
        Check::at_most("cost relative error", rep.cost_relative_error, 2e-2),
    ];
    debug_assert_eq!(checks.iter().all(|c| c.passed) && rep.contraction_margin >= 0.0, rep.passed_scaled(tol_scale));
    let text = format!(
        "beam eps = {} on N = {}: mu = {:.15}, gain u = {:.6} y\n  riccati residual {}, abscissa {} (resolved {})\n  \
         T = {:.3}, dt = {}: cost {:.10} vs mu^-1 |x0|^2 = {:.10} (relative error {})\n",
        rep.eps,
        rep.cells,
        rep.mu,
        rep.feedback.gain,
        e(rep.riccati_residual),
        e(rep.closed_loop_abscissa),
        e(rep.resolved_abscissa),
        rep.t_end,
        e(rep.dt),
        rep.cost,
        rep.cost_target,
        e(rep.cost_relative_error)
    );
    Ok(Outcome { result: to_value(&rep), checks, text, csv: Some(trajectory_csv(&traj, mode, y0)), artifact: None })
}
