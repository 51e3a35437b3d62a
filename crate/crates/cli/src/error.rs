use std::path::Path;

use passilq_core::{BeamError, CertError, DiscretizeError, FreqError, PhsError, RiccatiError, SimError};
use thiserror::Error;

/// Input problems (`Io`, `Schema`, `Invalid`) exit with 1; `Numerical`
/// failures are reported and exit with 2 like failed checks.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn schema(path: &Path, e: &serde_json::Error) -> Self {
        CliError::Schema(format!("{}: {e}", path.display()))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Schema(_) => "schema",
            CliError::Invalid(_) => "invalid_parameter",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

impl From<PhsError> for CliError {
    fn from(e: PhsError) -> Self {
        match e {
            PhsError::Schema(_) | PhsError::DimensionMismatch(_) => CliError::Schema(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<CertError> for CliError {
    fn from(e: CertError) -> Self {
        match e {
            CertError::DimensionMismatch(_) => CliError::Schema(e.to_string()),
            CertError::Model(m) => m.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<DiscretizeError> for CliError {
    fn from(e: DiscretizeError) -> Self {
        match e {
            DiscretizeError::GridTooSmall { .. } | DiscretizeError::InvalidParameter(_) => {
                CliError::Invalid(e.to_string())
            }
            DiscretizeError::Model(m) => m.into(),
            DiscretizeError::Cert(c) => c.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<RiccatiError> for CliError {
    fn from(e: RiccatiError) -> Self {
        match e {
            RiccatiError::DimensionMismatch(_) => CliError::Schema(e.to_string()),
            RiccatiError::Cert(c) => c.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<FreqError> for CliError {
    fn from(e: FreqError) -> Self {
        match e {
            FreqError::DimensionMismatch(_) => CliError::Schema(e.to_string()),
            FreqError::Factor(r) => r.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::StepSolveSingular { .. } => CliError::Numerical(e.to_string()),
            SimError::InvalidParameter(_) => CliError::Invalid(e.to_string()),
            SimError::DimensionMismatch(_) => CliError::Schema(e.to_string()),
        }
    }
}

impl From<BeamError> for CliError {
    fn from(e: BeamError) -> Self {
        match e {
            BeamError::InvalidParameter(_) => CliError::Invalid(e.to_string()),
            BeamError::Discretize(d) => d.into(),
            BeamError::Riccati(r) => r.into(),
            BeamError::Sim(s) => s.into(),
        }
    }
}
