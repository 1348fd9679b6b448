use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in {key}: {msg}")]
    Config { key: String, msg: String },
    #[error(transparent)]
    Solver(#[from] eikonal_astar::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0} self-test check(s) failed")]
    Acceptance(usize),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(key: &str, msg: String) -> Self {
        CliError::Config {
            key: key.to_string(),
            msg,
        }
    }

    /// 0 success, 1 config error, 2 runtime solver error, 3 self-test failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 1,
            CliError::Solver(eikonal_astar::Error::BadConfig(_)) => 1,
            CliError::Solver(_) | CliError::Io(_) => 2,
            CliError::Acceptance(_) => 3,
        }
    }
}
