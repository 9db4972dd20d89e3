use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("transmit antenna {0} starts inside a receive sphere")]
    SourceInsideReceiver(usize),

    #[error("time grids differ (lengths {left} and {right}, or values)")]
    GridMismatch { left: usize, right: usize },

    #[error("empirical CDF is identically zero; nothing to fit")]
    DegenerateCdf,

    #[error("bit sequences have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("matrix is singular (determinant {0:e})")]
    SingularMatrix(f64),

    #[error("mean channel matrix is rank deficient: A0^2 = {a0_sq:e} <= B0^2 = {b0_sq:e}")]
    RankDeficient { a0_sq: f64, b0_sq: f64 },

    #[error("variance ratio beta = {0} is below 1")]
    VarianceRatioBelowOne(f64),

    #[error("bit-0 detector output variance is zero; MAP threshold undefined")]
    DegenerateVariance,

    #[error("sample kurtosis {kurtosis} outside the shape bracket [{low}, {high}]")]
    KurtosisOutOfRange { kurtosis: f64, low: f64, high: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("unsupported character {0:?}")]
    UnsupportedCharacter(char),

    #[error("message would place an aligned 00000/00000 group before the terminator")]
    TerminatorCollision,

    #[error("frame does not start with the start signal")]
    MissingStart,

    #[error("frame ends before the 00000 terminator")]
    MissingTerminator,

    #[error("5-bit group {0:05b} is not an ITA2 letter")]
    InvalidCode(u8),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Checks a predicate and produces an [`Error::InvalidParameter`] otherwise.
pub(crate) fn ensure(ok: bool, name: &'static str, reason: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::param(name, reason()))
    }
}
