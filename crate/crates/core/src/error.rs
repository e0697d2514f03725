use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("measure has zero total mass")]
    ZeroMass,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("theta must be positive, got {0}")]
    InvalidTheta(f64),
    #[error("color space must contain at least one color")]
    EmptySpace,
    #[error("duplicate color label {0:?}")]
    DuplicateLabel(String),
    #[error("negative or non-finite weight {value} at {location}")]
    InvalidWeight { location: String, value: f64 },
    #[error("base measure must sum to 1, sums to {0}")]
    NotNormalized(f64),
    #[error("row of color {color} has zero total mass")]
    ZeroRow { color: usize },
    #[error("color {from} reinforces base-measure-null color {to} with mass {mass}")]
    MassLeak { from: usize, to: usize, mass: f64 },
    #[error("kernel is unbalanced: row masses {low} (color {low_color}) and {high} (color {high_color})")]
    Unbalanced {
        low_color: usize,
        low: f64,
        high_color: usize,
        high: f64,
    },
    #[error("unknown color index {0}")]
    UnknownColor(usize),
    #[error("enumeration needs {needed} paths, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("alpha must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error("truncation threshold must lie in (0, 1), got {0}")]
    NonPositiveEps(f64),
    #[error("uniform variate must lie in [0, 1), got {0}")]
    InvalidUniform(f64),
    #[error("split point s must lie in (0, 1), got {0}")]
    InvalidS(f64),
    #[error("path length must be at least 1")]
    ZeroLength,
    #[error("model is not exchangeable, so it has no block partition")]
    MissingPartition,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model file: {0}")]
    ModelFile(String),
}
