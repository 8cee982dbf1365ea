use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty trace")]
    EmptyTrace,

    #[error("bad channel: {channel} (network has {channels} channels)")]
    BadChannel { channel: usize, channels: usize },

    #[error("user index {user} out of range (network has {users} users)")]
    BadUser { user: usize, users: usize },

    #[error("more users than channels ({users} > {channels})")]
    MoreUsersThanChannels { users: usize, channels: usize },

    #[error("oracle size limit exceeded: {users}x{channels} (max 6x8)")]
    OracleSizeLimit { users: usize, channels: usize },

    #[error("duplicate channel {0} in ranking")]
    DuplicateChannel(usize),

    #[error("degenerate gap on channel {0}")]
    DegenerateGap(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("inadmissible weight at ({row}, {col})")]
    InadmissibleWeight { row: usize, col: usize },

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
