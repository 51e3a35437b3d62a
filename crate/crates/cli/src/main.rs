//! `passilq`: passivity certificates, discretization, LQ solutions, Popov
//! factorizations, energy-balanced simulation and the beam example.
//!
//! Exit status: 0 when every requested check passes, 2 when a check or a
//! numerical computation fails, 1 for input errors.

mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use passilq_core::beam::InitialProfile;
use serde::Serialize;
use serde_json::Value;

use commands::{Check, Outcome};
use config::{CommandName, FeedbackKind, LqMethod, OmegaGrid, RunConfig, SupplyKind};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "passilq",
    version,
    about = "Passivity and LQ optimal control for port-Hamiltonian boundary control systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Print the JSON report on stdout instead of the default output.
    #[arg(long, global = true)]
    json: bool,
    /// Write the JSON report and CSV series into this directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Multiplies all round-off tolerances (on top of PASSILQ_TOL_SCALE).
    #[arg(long, global = true)]
    tol_scale: Option<f64>,
    /// Seed for the `random` input.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Passivity certificate of a spec or discrete system.
    Certify {
        /// Spec or system JSON, `corpus:<name>` or `random`.
        input: String,
        /// Fail (exit 2) unless this certificate flag holds; repeatable.
        #[arg(long)]
        expect: Vec<String>,
    },
    /// Structure-preserving discretization of a spec; prints the system JSON.
    Discretize {
        input: String,
        #[arg(long = "N", default_value_t = 16)]
        cells: usize,
        #[arg(long)]
        expect: Vec<String>,
    },
    /// Riccati solution by Newton-Kleinman and/or the explicit formula.
    Lq {
        input: String,
        #[arg(long, value_enum, default_value_t = LqMethod::Both)]
        method: LqMethod,
        /// Grid cells when the input is a spec.
        #[arg(long = "N")]
        cells: Option<usize>,
    },
    /// Popov factorization residual on a log-spaced frequency grid (CSV).
    Popov {
        input: String,
        #[arg(long = "N")]
        cells: Option<usize>,
        #[arg(long, default_value_t = 1e-2)]
        wmin: f64,
        #[arg(long, default_value_t = 1e3)]
        wmax: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Midpoint simulation with energy bookkeeping (CSV).
    Simulate {
        input: String,
        #[arg(long = "N")]
        cells: Option<usize>,
        #[arg(long = "T")]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// `none`, `neg_output` (u = -y) or `gain <file>` (u = Kx).
        #[arg(long, num_args = 1..=2, value_names = ["KIND", "FILE"], default_value = "none")]
        feedback: Vec<String>,
        #[arg(long, value_enum, default_value_t = SupplyKind::Impedance)]
        supply: SupplyKind,
    },
    /// Euler-Bernoulli beam with optimal boundary feedback.
    Beam {
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long = "N", default_value_t = 40)]
        cells: usize,
        #[arg(long = "T")]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, value_parser = parse_profile, default_value = "cantilever")]
        profile: InitialProfile,
    },
    /// Runs a JSON run configuration.
    Run { config: PathBuf },
}

fn parse_profile(s: &str) -> Result<InitialProfile, String> {
    serde_json::from_value(Value::String(s.into())).map_err(|_| format!("unknown profile {s:?} (cantilever, cubic)"))
}

fn parse_feedback(words: &[String]) -> Result<(FeedbackKind, Option<String>), CliError> {
    match words {
        [k] if k == "none" => Ok((FeedbackKind::None, None)),
        [k] if k == "neg_output" => Ok((FeedbackKind::NegOutput, None)),
        [k, file] if k == "gain" => Ok((FeedbackKind::Gain, Some(file.clone()))),
        [k] if k == "gain" => Err(CliError::Invalid("--feedback gain needs a file".into())),
        _ => Err(CliError::Invalid(format!("bad --feedback {words:?}: use none, neg_output or gain <file>"))),
    }
}

fn to_config(cli: Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match cli.command {
        Command::Run { config } => RunConfig::from_file(&config)?,
        Command::Certify { input, expect } => {
            RunConfig { input: Some(input), expect, ..RunConfig::new(CommandName::Certify) }
        }
        Command::Discretize { input, cells, expect } => {
            RunConfig { input: Some(input), cells: Some(cells), expect, ..RunConfig::new(CommandName::Discretize) }
        }
        Command::Lq { input, method, cells } => {
            RunConfig { input: Some(input), method, cells, ..RunConfig::new(CommandName::Lq) }
        }
        Command::Popov { input, cells, wmin, wmax, points } => RunConfig {
            input: Some(input),
            cells,
            omega: Some(OmegaGrid { min: wmin, max: wmax, points }),
            ..RunConfig::new(CommandName::Popov)
        },
        Command::Simulate { input, cells, t_end, dt, feedback, supply } => {
            let (feedback, gain) = parse_feedback(&feedback)?;
            RunConfig {
                input: Some(input),
                cells,
                t_end,
                dt,
                feedback,
                gain,
                supply,
                ..RunConfig::new(CommandName::Simulate)
            }
        }
        Command::Beam { eps, cells, t_end, dt, profile } => {
            RunConfig { eps: Some(eps), cells: Some(cells), t_end, dt, profile, ..RunConfig::new(CommandName::Beam) }
        }
    };
    let c = cli.common;
    if c.out.is_some() {
        cfg.out_dir = c.out;
    }
    if c.tol_scale.is_some() {
        cfg.tol_scale = c.tol_scale;
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    cfg.check()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct ErrorInfo {
    kind: &'static str,
    message: String,
}

/// Report written for every run, including failed ones.
#[derive(Serialize)]
struct Envelope<'a> {
    command: &'static str,
    input: Option<&'a str>,
    seed: u64,
    tol_scale: f64,
    status: &'static str,
    passed: bool,
    checks: &'a [Check],
    error: Option<ErrorInfo>,
    result: Value,
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn emit(cfg: &RunConfig, json_out: bool, tol_scale: f64, outcome: Result<Outcome, CliError>) -> Result<u8, CliError> {
    let name = cfg.command.as_str();
    let (status, code, error, outcome) = match outcome {
        Ok(o) if o.passed() => ("pass", 0, None, Some(o)),
        Ok(o) => ("fail", 2, None, Some(o)),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ("error", e.exit_code(), Some(ErrorInfo { kind: e.kind(), message: e.to_string() }), None)
        }
    };
    let envelope = Envelope {
        command: name,
        input: cfg.input.as_deref(),
        seed: cfg.seed,
        tol_scale,
        status,
        passed: code == 0,
        checks: outcome.as_ref().map_or(&[], |o| &o.checks),
        error,
        result: outcome.as_ref().map_or(Value::Null, |o| o.result.clone()),
    };
    let report = passilq_core::json::to_string_fixed(&envelope).expect("report serializes") + "\n";

    let mut stdout = std::io::stdout().lock();
    let print = |out: &mut std::io::StdoutLock, s: &str| {
        out.write_all(s.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))
    };
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        write_file(&dir.join(format!("{name}.json")), &report)?;
        if let Some(o) = &outcome {
            if let Some(csv) = &o.csv {
                write_file(&dir.join(format!("{name}.csv")), csv)?;
            }
            if let Some(artifact) = &o.artifact {
                write_file(&dir.join("system.json"), &(artifact.clone() + "\n"))?;
            }
        }
    }
    if json_out {
        print(&mut stdout, &report)?;
    } else if let Some(o) = &outcome {
        // Series-only commands stream their CSV; the beam prints its summary.
        let streams_csv = matches!(cfg.command, CommandName::Popov | CommandName::Simulate);
        let primary = match (&cfg.out_dir, &o.artifact, &o.csv) {
            (None, Some(artifact), _) => artifact.clone() + "\n",
            (None, None, Some(csv)) if streams_csv => csv.clone(),
            _ => o.text.clone(),
        };
        print(&mut stdout, &primary)?;
        if primary != o.text {
            eprint!("{}", o.text);
        }
        for check in o.checks.iter().filter(|c| !c.passed) {
            eprintln!("check failed: {} = {:.3e} (threshold {:.3e})", check.name, check.value, check.threshold);
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json_out = cli.common.json;
    let cfg = match to_config(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            return ExitCode::from(e.exit_code());
        }
    };
    let tol_scale = match config::env_tol_scale() {
        Ok(s) => s * cfg.tol_scale.unwrap_or(1.0),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            return ExitCode::from(e.exit_code());
        }
    };
    let outcome = commands::execute(&cfg, tol_scale);
    match emit(&cfg, json_out, tol_scale, outcome) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(e.exit_code())
        }
    }
}
