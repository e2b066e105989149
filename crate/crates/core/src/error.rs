use thiserror::Error;

/// Errors produced by `kstab-core`.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A mixture, interval or region violated one of its invariants.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// A Voronoi cell (or interval) carries no probability mass.
    #[error("degenerate cell: interval [{lo}, {hi}] has zero mass")]
    DegenerateCell { lo: f64, hi: f64 },

    /// Two centers coincide, so the Voronoi partition is undefined.
    #[error("degenerate input: centers {0} and {1} coincide")]
    DuplicateCenters(usize, usize),

    /// Point and center dimensions disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A data point lies on the bisector of two centers; `W_n` is not differentiable there.
    #[error("nondifferentiable point: data point {point} is equidistant from centers {k} and {l}")]
    NonDifferentiable { point: usize, k: usize, l: usize },

    /// Newton step with an empty cluster: the Hessian block `N_k` is zero.
    #[error("singular Hessian: cluster {0} is empty")]
    SingularHessian(usize),

    /// Not enough candidates to select the requested number of centers.
    #[error("insufficient candidates: need {needed}, have {available}")]
    InsufficientCandidates { needed: usize, available: usize },

    /// One of the seeding assumptions does not hold.
    #[error("assumption {id} violated: {reason}")]
    AssumptionViolated { id: u8, reason: String },

    /// Two label vectors of different lengths.
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    /// Numerical overflow (for example the inverse Mills ratio far in the tail).
    #[error("overflow: {0}")]
    Overflow(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Error {
    Error::Invalid {
        what,
        reason: reason.into(),
    }
}
