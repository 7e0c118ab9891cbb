use num_complex::Complex64;

/// Errors raised by the reduction pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: {detail}")]
    DimensionMismatch { context: &'static str, detail: String },

    #[error("{equation}: coefficient spectra overlap (separation {gap:.3e})")]
    SpectrumOverlap { equation: &'static str, gap: f64 },

    #[error("{0}: input matrix is not Hermitian")]
    NotHermitian(&'static str),

    #[error("{equation}: no stabilizing solution ({reason})")]
    NoStabilizingSolution { equation: &'static str, reason: String },

    #[error("matrix is indefinite (min eigenvalue {min:.3e}, max {max:.3e})")]
    IndefiniteMatrix { min: f64, max: f64 },

    #[error("{0} did not converge")]
    ConvergenceFailure(&'static str),

    #[error("resolvent is singular at s = {s}")]
    SingularResolvent { s: Complex64 },

    #[error("{what} is singular or ill-conditioned (condition {cond:.3e}); {hint}")]
    Singular { what: &'static str, cond: f64, hint: String },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("point {index} on the {side} side needs a derivative sample for the Hermite branch")]
    MissingDerivative { side: &'static str, index: usize },

    #[error("interpolation points are duplicated or degenerate: {0}")]
    DegeneratePoints(String),

    #[error("point {point} is not in the open right half-plane")]
    PointNotInRhp { point: Complex64 },

    #[error("mode/point mismatch: {0}")]
    ModePointMismatch(String),

    #[error("feedthrough assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("gamma must exceed 1, got {0}")]
    GammaOutOfRange(f64),

    #[error("variant needs a square system, got p={p}, m={m}")]
    NotSquare { p: usize, m: usize },

    #[error("requested order {requested} exceeds numerical rank {achievable}")]
    RankDeficient { requested: usize, achievable: usize },

    #[error("order must be at least 1")]
    OrderOutOfRange,

    #[error("state matrix is not Hurwitz (max real part {max_real:.3e})")]
    NotHurwitz { max_real: f64 },

    #[error("point set is not closed under conjugation: {0}")]
    NotConjugateClosed(String),

    #[error("realified model has imaginary residue {0:.3e}")]
    ResidueTooLarge(f64),

    #[error("frequency grid is empty")]
    EmptyGrid,

    #[error("need at least two distinct nodes, got {0}")]
    TooFewNodes(usize),

    #[error("expected {expected} weights, got {actual}")]
    WeightCountMismatch { expected: usize, actual: usize },

    #[error("frequency list is empty")]
    EmptyFrequencies,

    #[error("zero frequency is not allowed for this bound")]
    ZeroFrequency,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a numerical kernel, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SpectrumOverlap { .. }
                | Error::NoStabilizingSolution { .. }
                | Error::IndefiniteMatrix { .. }
                | Error::ConvergenceFailure(_)
                | Error::SingularResolvent { .. }
                | Error::Singular { .. }
                | Error::RankDeficient { .. }
                | Error::ResidueTooLarge(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
