use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate submatrix")]
    DegenerateSubmatrix,
    #[error("empty corner at level {level}")]
    EmptyCorner { level: f64 },
    #[error("non-Hermitian input: max asymmetry {asymmetry:e}")]
    NotHermitian { asymmetry: f64 },
    #[error("unknown level {level}")]
    UnknownLevel { level: f64 },
    #[error("f support excludes spectrum")]
    SupportExcludesSpectrum,
    #[error("need replicates >= 2 * batches >= 4, got R = {replicates}, B = {batches}")]
    TooFewReplicates { replicates: usize, batches: usize },
    #[error("overlap parameters violate contour condition (coupling = {coupling})")]
    ContourCondition { coupling: f64 },
    #[error("quadrature did not converge: {0}")]
    QuadratureDiverged(String),
    #[error("outside bulk: x = {x}, level y = {y}")]
    OutsideBulk { x: f64, y: f64 },
    #[error("kernel singularity")]
    KernelSingularity,
    #[error("support exceeds grid")]
    SupportExceedsGrid,
    #[error("enumeration budget exceeded: {states} states > {budget}")]
    EnumerationBudget { states: u128, budget: u128 },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid statistic: {0}")]
    InvalidStatistic(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
