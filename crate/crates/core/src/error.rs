use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("matrix is not Hermitian positive definite")]
    NotPositiveDefinite,
    #[error("iteration did not converge")]
    NoConvergence,
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Failures of the continuous model layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix {name} is not Hermitian at zeta = {zeta}")]
    NonHermitian { name: String, zeta: f64 },
    #[error("P0 is not skew-Hermitian (defect {defect:.3e})")]
    NonSkewP0 { defect: f64 },
    #[error("H(zeta) not uniformly positive at zeta = {zeta}: min eigenvalue {min_eig:.6e} < c")]
    PositivityViolation { zeta: f64, min_eig: f64 },
    #[error("boundary matrix has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("boundary complementarity condition fails (condition number {cond:.3e})")]
    ComplementarityFailure { cond: f64 },
    #[error("P1 H has an eigenvalue of magnitude {magnitude:.3e} at zeta = {zeta}")]
    SingularP1H { zeta: f64, magnitude: f64 },
    #[error("R0 is singular")]
    SingularR0,
    #[error("zeta = {zeta} outside the spatial interval [{a}, {b}]")]
    OutOfInterval { zeta: f64, a: f64, b: f64 },
    #[error("schema error: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("energy weight M is not Hermitian (defect {0:.3e})")]
    NonHermitianM(f64),
    #[error("energy weight M is not positive definite")]
    NotPositiveDefiniteM,
    #[error("kernel basis: matrix rank {rank} below expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error(transparent)]
    Model(#[from] PhsError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscretizeError {
    #[error("grid size {got} below minimum {min}")]
    GridTooSmall { got: usize, min: usize },
    #[error("structure restoration failed: {0}")]
    StructureRestorationFailed(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Model(#[from] PhsError),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiccatiError {
    #[error("no stabilizing solution: {0}")]
    NoStabilizingSolution(String),
    #[error("Hamiltonian eigen-split failed: {0}")]
    HamiltonianEigSplitFailure(String),
    #[error("system is not energy preserving in the requested sense")]
    NotEnergyPreserving,
    #[error("closed loop not stable: eigenvalue {re:.6e}{im:+.6e}i")]
    ClosedLoopNotStable { re: f64, im: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FreqError {
    #[error("resolvent singular at s = {re}{im:+}i")]
    ResolventSingular { re: f64, im: f64 },
    #[error("system is not energy preserving in the requested sense")]
    NotEnergyPreserving,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("factor data unavailable: {0}")]
    Factor(#[from] RiccatiError),
    #[error("factor routes disagree by {0:.3e}")]
    FactorMismatch(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("step matrix singular for dt = {dt}")]
    StepSolveSingular { dt: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeamError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
    #[error(transparent)]
    Riccati(#[from] RiccatiError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
