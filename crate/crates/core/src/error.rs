use std::fmt;

/// Failure modes shared across the library. The display strings are the
/// stable kebab-case identifiers reported by the CLI.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("profile-out-of-range: |v| = {radius} beyond last knot {last_knot}")]
    ProfileOutOfRange { radius: f64, last_knot: f64 },
    #[error("quadrature-failure: {0}")]
    QuadratureFailure(String),
    #[error("zero-wavenumber")]
    ZeroWavenumber,
    #[error("penrose-violation: margin {margin:.3e} at tau = {tau}, |xi| = {xi}")]
    PenroseViolation { margin: f64, tau: f64, xi: f64 },
    #[error("invalid-profile: {0}")]
    InvalidProfile(String),
    #[error("invalid-grid: {0}")]
    InvalidGrid(String),
    #[error("invalid-nonlinearity: {0}")]
    InvalidNonlinearity(String),
    #[error("smallness-violation: norm {norm:.3e} exceeds gate {gate:.3e}")]
    SmallnessViolation { norm: f64, gate: f64 },
    #[error("picard-divergence after {iterations} iterations (last update {last_update:.3e})")]
    PicardDivergence { iterations: usize, last_update: f64 },
    #[error("assumption-window-exceeded: sup|u| = {0:.3e} > 1")]
    AssumptionWindowExceeded(f64),
    #[error("resolvent-instability at step {step}: |G| = {magnitude:.3e}")]
    ResolventInstability { step: usize, magnitude: f64 },
    #[error("grid-mismatch: {0}")]
    GridMismatch(String),
    #[error("inverse-map-failure: defect {defect:.3e} after {iterations} Newton steps")]
    InverseMapFailure { defect: f64, iterations: usize },
    #[error("velocity-truncation-breach: boundary mass ratio {0:.3e}")]
    VelocityTruncationBreach(f64),
    #[error("eta-weight-violation: weighted bound {0:.3e} > 1")]
    EtaWeightViolation(f64),
    #[error("local-solve-divergence: update ratios {ratios:?}; reduce the slab length")]
    LocalSolveDivergence { ratios: Vec<f64> },
    #[error("scattering-not-converged: successive limits differ by {0:.3e}")]
    ScatteringNotConverged(f64),
    #[error("norm-truncation-breach: {0}")]
    NormTruncationBreach(String),
    #[error("lipschitz-gate: sup|grad phi| = {0:.3e} > 1/2")]
    LipschitzGate(f64),
    #[error("insufficient-window: {0} points")]
    InsufficientWindow(usize),
    #[error("invalid-argument: {0}")]
    InvalidArgument(String),
    #[error("io: {0}")]
    Io(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn context(self, context: impl fmt::Display) -> Self {
        Error::Context { context: context.to_string(), source: Box::new(self) }
    }

    /// Innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
