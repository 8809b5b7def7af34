use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("frame {frame} has no candidate boxes")]
    EmptyFrame { frame: u32 },

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("{}, line {line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}, line {line}: unknown {field} `{value}`", file.display())]
    Vocabulary {
        file: PathBuf,
        line: usize,
        field: &'static str,
        value: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
