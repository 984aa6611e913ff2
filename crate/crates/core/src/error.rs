use thiserror::Error;

/// Errors produced anywhere in the simulation, identification and control stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A caller-supplied value is not usable (non-finite, wrong length, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration or specification value violates its documented range.
    #[error("configuration error: {0}")]
    Config(String),

    /// The physical parameter set leads to an ill-posed model.
    #[error("model configuration error: {0}")]
    ModelConfig(String),

    /// A simulation produced a non-finite or overflowing value.
    #[error("simulation diverged at sample {index}: {detail}")]
    Divergence { index: usize, detail: String },

    /// A frequency-domain or signal analysis found no answer in its search range.
    #[error("analysis error: {0}")]
    Analysis(String),

    /// The dataset is too short for the requested operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The regressor matrix is too ill-conditioned to identify a model.
    #[error(
        "regressor is not identifiable: condition number {condition:.3e} exceeds {threshold:.0e} \
         (insufficient excitation?)"
    )]
    Identifiability { condition: f64, threshold: f64 },

    /// Every candidate of an order search failed.
    #[error("all {} candidate model orders failed; first failure: {}", .0.len(), .0.first().map(String::as_str).unwrap_or("none"))]
    AllCandidatesFailed(Vec<String>),

    /// A metric cannot be computed for the given data.
    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    /// Automatic controller tuning could not find a critical gain.
    #[error("tuning failed: {0}; supply controller gains manually")]
    Tuning(String),
}

pub type Result<T> = std::result::Result<T, Error>;
