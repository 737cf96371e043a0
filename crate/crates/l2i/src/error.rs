use std::path::PathBuf;

/// Errors of the command-line layer. Each maps to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}, line {line}: {msg}")]
    Csv { path: PathBuf, line: u64, msg: String },

    #[error("config `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("usage: {0}")]
    Usage(String),

    #[error("check failed: {0}")]
    Check(String),

    #[error(transparent)]
    Core(#[from] l2i_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { key: key.into(), msg: msg.into() }
    }

    /// 1 for bad input or configuration, 2 for numeric or check failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Csv { .. } | Error::Config { .. } | Error::Usage(_) => 1,
            Error::Check(_) => 2,
            Error::Core(e) => core_exit_code(e),
        }
    }
}

fn core_exit_code(e: &l2i_core::Error) -> i32 {
    use l2i_core::Error as E;
    match e {
        E::Seed { source, .. } => core_exit_code(source),
        E::Config(_) | E::InvalidArgument { .. } | E::LossTask { .. } => 1,
        E::Shape { .. } | E::Length { .. } | E::NonFinite(_) | E::Empty(_) => 2,
    }
}
