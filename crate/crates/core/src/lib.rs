//! Passivity certification, structure-preserving discretization and LQ
//! optimal control for first-order port-Hamiltonian boundary control systems.
//!
//! All state-space data is complex (`DMatrix<Complex64>`). Discrete systems
//! carry an energy weight `M` and every adjoint is taken in the inner product
//! `<f, g> = g* M f`.

pub mod beam;
pub mod corpus;
pub mod discretize;
pub mod error;
pub mod freq_domain;
pub mod json;
pub mod linalg;
pub mod lq_riccati;
pub mod par;
pub mod passivity;
pub mod phs_model;
pub mod simulate;
pub mod system;

pub use error::{BeamError, CertError, DiscretizeError, FreqError, LinalgError, PhsError, RiccatiError, SimError};
pub use linalg::{CMat, CVec};
pub use passivity::PassivityCertificate;
pub use phs_model::{HField, PhsSpec};
pub use system::DiscreteSystem;
