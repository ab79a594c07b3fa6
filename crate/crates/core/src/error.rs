use thiserror::Error;

use crate::network::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("invalid network:\n{0}")]
    InvalidNetwork(ValidationReport),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unsupported format version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },

    #[error("demand day {day}: {source}")]
    Day {
        day: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("objective is not finite ({value}) at position {position:?}")]
    NonFinite { value: f64, position: Vec<f64> },

    #[error("nothing to train: {0}")]
    NothingTrainable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
