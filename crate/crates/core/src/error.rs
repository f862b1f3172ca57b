use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown transmitter index {0}")]
    UnknownTransmitter(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("point coincides with an array element of transmitter {0}")]
    CoincidentElement(usize),
    #[error("zero channel vector")]
    ZeroChannel,
    #[error("channel matrix is rank deficient; set a positive regularization")]
    RankDeficient,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("horizon {horizon} plus history {history} exceeds simulation length {t_sim}")]
    HorizonTooLong {
        horizon: usize,
        history: usize,
        t_sim: usize,
    },
    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },
    #[error("model is untrained")]
    Untrained,
    #[error("artifact format error: {0}")]
    Format(String),
    #[error("config hash mismatch: expected {expected}, found {found}")]
    HashMismatch { expected: String, found: String },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),
    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    /// Stable machine-readable identifier of the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnknownTransmitter(_) => "unknown_transmitter",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Config(_) => "config",
            Error::CoincidentElement(_) => "coincident_element",
            Error::ZeroChannel => "zero_channel",
            Error::RankDeficient => "rank_deficient",
            Error::Dimension(_) => "dimension",
            Error::HorizonTooLong { .. } => "horizon_too_long",
            Error::Diverged { .. } => "diverged",
            Error::Untrained => "untrained",
            Error::Format(_) => "format",
            Error::HashMismatch { .. } => "hash_mismatch",
            Error::Empty(_) => "empty",
            Error::MissingArtifact(_) => "missing_artifact",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::TomlDe(_) => "toml_parse",
            Error::TomlSer(_) => "toml_serialize",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
