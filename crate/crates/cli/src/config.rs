//! Run configuration shared by the subcommands and `run <config.json>`.

use std::path::{Path, PathBuf};

use passilq_core::beam::InitialProfile;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    Certify,
    Discretize,
    Lq,
    Popov,
    Simulate,
    Beam,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::Certify => "certify",
            CommandName::Discretize => "discretize",
            CommandName::Lq => "lq",
            CommandName::Popov => "popov",
            CommandName::Simulate => "simulate",
            CommandName::Beam => "beam",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LqMethod {
    Care,
    Explicit,
    #[default]
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    #[default]
    None,
    NegOutput,
    Gain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SupplyKind {
    #[default]
    Impedance,
    Scattering,
}

/// Logarithmic frequency grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for OmegaGrid {
    fn default() -> Self {
        OmegaGrid { min: 1e-2, max: 1e3, points: 200 }
    }
}

/// Everything one invocation needs. Subcommand flags are translated into this
/// form, so a config file reproduces a command line exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandName,
    /// Spec or system JSON path, `corpus:<name>`, or `random` (seeded).
    #[serde(default)]
    pub input: Option<String>,
    /// Gain matrix JSON for `feedback = "gain"`.
    #[serde(default)]
    pub gain: Option<String>,
    /// Grid cells, for specs and the beam.
    #[serde(default, rename = "N")]
    pub cells: Option<usize>,
    #[serde(default, rename = "T")]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub omega: Option<OmegaGrid>,
    #[serde(default)]
    pub method: LqMethod,
    #[serde(default)]
    pub feedback: FeedbackKind,
    #[serde(default)]
    pub supply: SupplyKind,
    #[serde(default)]
    pub profile: InitialProfile,
    /// Certificate flags that must hold for a passing run.
    #[serde(default)]
    pub expect: Vec<String>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Multiplies every round-off tolerance (on top of `PASSILQ_TOL_SCALE`).
    #[serde(default)]
    pub tol_scale: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn new(command: CommandName) -> Self {
        RunConfig {
            command,
            input: None,
            gain: None,
            cells: None,
            t_end: None,
            dt: None,
            eps: None,
            omega: None,
            method: LqMethod::default(),
            feedback: FeedbackKind::default(),
            supply: SupplyKind::default(),
            profile: InitialProfile::default(),
            expect: Vec::new(),
            out_dir: None,
            tol_scale: None,
            seed: 0,
        }
    }

    /// Parses a config file. Relative paths are taken relative to the file.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::schema(path, &e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &str| -> String {
            if is_builtin(p) || Path::new(p).is_absolute() {
                p.to_string()
            } else {
                base.join(p).to_string_lossy().into_owned()
            }
        };
        cfg.input = cfg.input.as_deref().map(rebase);
        cfg.gain = cfg.gain.as_deref().map(rebase);
        cfg.out_dir = cfg.out_dir.map(|d| if d.is_absolute() { d } else { base.join(d) });
        cfg.check()?;
        Ok(cfg)
    }

    /// Input files must exist and numeric parameters must be in range.
    pub fn check(&self) -> Result<(), CliError> {
        for path in [&self.input, &self.gain].into_iter().flatten() {
            if !is_builtin(path) && !Path::new(path).exists() {
                return Err(CliError::Io(format!("{path}: no such file")));
            }
        }
        if self.command != CommandName::Beam && self.input.is_none() {
            return Err(CliError::Invalid(format!("{} needs an input", self.command.as_str())));
        }
        if self.feedback == FeedbackKind::Gain && self.gain.is_none() {
            return Err(CliError::Invalid("feedback = gain needs a gain file".into()));
        }
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::Invalid(format!("{name} = {x} must be positive"))),
            _ => Ok(()),
        };
        positive("T", self.t_end)?;
        positive("dt", self.dt)?;
        positive("tol_scale", self.tol_scale)?;
        if let Some(eps) = self.eps {
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(CliError::Invalid(format!("eps = {eps} must be finite and >= 0")));
            }
        }
        if let Some(g) = self.omega {
            if !(g.min > 0.0 && g.max > g.min && g.max.is_finite()) || g.points < 2 {
                return Err(CliError::Invalid("omega grid needs 0 < min < max and points >= 2".into()));
            }
        }
        Ok(())
    }
}

/// `corpus:<name>` and `random` name generated inputs rather than files.
pub fn is_builtin(input: &str) -> bool {
    input == "random" || input.starts_with("corpus:")
}

/// Global tolerance scale from `PASSILQ_TOL_SCALE` (default 1).
pub fn env_tol_scale() -> Result<f64, CliError> {
    match std::env::var("PASSILQ_TOL_SCALE") {
        Err(_) => Ok(1.0),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
            _ => Err(CliError::Invalid(format!("PASSILQ_TOL_SCALE = {s:?} is not a positive number"))),
        },
    }
}
