use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown code id {0}")]
    UnknownCodeId(u32),
    #[error("invalid LFSR taps: {0}")]
    InvalidTaps(String),
    #[error("invalid delay {delay} (must be in [0, {period}))")]
    InvalidDelay { delay: usize, period: usize },
    #[error("incompatible code lengths: {0} vs {1}")]
    IncompatibleLengths(usize, usize),
    #[error("invalid table size {count} (must be in [1, {max}])")]
    InvalidTableSize { count: usize, max: usize },
    #[error("expected 2^n-1 chips (1023 for GPS), got {0}")]
    ExpectedChipCount(usize),
    #[error("interferer limit exceeded: {0} > {max}", max = crate::signal::MAX_INTERFERERS)]
    InterfererLimitExceeded(usize),
    #[error("invalid interferer: {0}")]
    InvalidInterferer(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("partial-correlation length mismatch: expected {expected}, got {got}")]
    PartialCorrelationLength { expected: usize, got: usize },
    #[error("empty window")]
    EmptyWindow,
    #[error("invalid window length {0}")]
    InvalidWindow(usize),
    #[error("invalid group size {g} (must divide {n})")]
    InvalidGroupSize { g: usize, n: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("unsolvable autocorrelation matrix")]
    Unsolvable,
    #[error("degenerate weight vector")]
    DegenerateWeights,
    #[error("bit window must span 20 epochs (got {0})")]
    BitWindow(usize),
    #[error("empty decision list")]
    EmptyDecisions,
    #[error("invalid power {0}")]
    InvalidPower(f64),
    #[error("point aborted at epoch {epoch} after {regularized} regularized solves: {source}")]
    PointAborted {
        epoch: u64,
        regularized: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid config key `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("unknown config key `{0}`")]
    UnknownConfigKey(String),
    #[error("malformed config: {0}")]
    ConfigSyntax(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
