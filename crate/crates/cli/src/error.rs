use std::fmt;

use insitu_core::cell_array::ArrayError;

/// Command failure, split by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or input shape: exit 2.
    Usage(String),
    /// Anything that failed while running: exit 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError::Usage(msg.to_string())
    }

    pub fn runtime(msg: impl fmt::Display) -> Self {
        CliError::Runtime(msg.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<ArrayError> for CliError {
    fn from(e: ArrayError) -> Self {
        match e {
            ArrayError::LengthMismatch { .. } | ArrayError::IndexOutOfRange { .. } => CliError::usage(e),
            other => CliError::runtime(other),
        }
    }
}

macro_rules! runtime_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::runtime(e)
            }
        })*
    };
}

runtime_from!(
    std::io::Error,
    insitu_core::CompressorError,
    insitu_core::MacError,
    insitu_core::LutError,
    insitu_core::MapError,
    insitu_core::PerfError,
    image::ImageError,
    serde_json::Error
);

pub type Result<T> = std::result::Result<T, CliError>;
