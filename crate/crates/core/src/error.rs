//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or argument lies outside its admissible domain.
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),
    /// Evaluation requested at a boundary point where the quantity is
    /// defined only as a limit.
    #[error("boundary point: {0}")]
    Boundary(String),
    /// The family or regime does not support the requested operation.
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    /// Vector or covariate dimensions do not match.
    #[error("dimension mismatch: {0}")]
    Shape(String),
    /// The perfect-concordance regime requires equal marginal cure fractions.
    #[error("inconsistent margins: {0}")]
    InconsistentMargins(String),
    /// A quantity that is provably positive came out non-positive.
    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),
    /// Fewer observations than the estimator needs.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// A rank-correlation coefficient has a zero denominator (all-tied margin).
    #[error("coefficient undefined: {0}")]
    UndefinedCoefficient(String),
    /// Nested quadrature failed to reach the target accuracy.
    #[error("quadrature accuracy {error:e} above target (estimate {estimate})")]
    QuadratureAccuracy { estimate: f64, error: f64 },
    /// Finite differences hit a region where the log-likelihood is -inf.
    #[error("gradient undefined near non-finite log-likelihood")]
    GradientUndefined,
    /// No optimizer start converged.
    #[error("optimization did not converge: {0}")]
    NonConvergence(String),
    /// Invalid run configuration (design file, study spec, CLI flags).
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Malformed input data.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
