use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("signal too short: need at least {min} samples, got {got}")]
    TooShort { min: usize, got: usize },

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("zero norm in {0}")]
    ZeroNorm(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("heart-rate band [{low}, {high}] Hz contains no spectral bins")]
    EmptyBand { low: f64, high: f64 },

    #[error("invalid spectral configuration: {0}")]
    InvalidSpectralConfig(String),

    #[error("shape {h}x{w} is not divisible by factor {factor}")]
    IndivisibleShape { h: usize, w: usize, factor: usize },

    #[error("frame sampling keeps {kept} frames, need at least 2")]
    TooFewFrames { kept: usize },

    #[error("unknown prompt kind: {0}")]
    UnknownKind(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("missing modality: {0}")]
    MissingModality(&'static str),

    #[error("empty batch")]
    EmptyBatch,

    #[error("empty input")]
    EmptyInput,

    #[error("only one class present in {0}")]
    SingleClass(&'static str),

    #[error("need {need} samples of class {class}, have {have}")]
    InsufficientClassSamples {
        class: &'static str,
        need: usize,
        have: usize,
    },

    #[error("non-finite loss term `{term}` at step {step}")]
    NonFiniteLoss { term: &'static str, step: u64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Numeric failures as opposed to usage or data errors.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::ZeroVariance(_)
                | Error::ZeroNorm(_)
                | Error::NonFinite(_)
                | Error::NonFiniteLoss { .. }
        )
    }
}
