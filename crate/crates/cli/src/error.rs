use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("solver error: {0}")]
    Solver(#[from] sck_core::Error),

    #[error("output error: {0}")]
    Output(#[from] std::io::Error),

    #[error("output error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Core validation failures found while building the model are config errors.
    pub fn config(e: sck_core::Error) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Read { .. } | CliError::Schema(_) | CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Output(_) | CliError::Csv(_) => 3,
        }
    }
}
