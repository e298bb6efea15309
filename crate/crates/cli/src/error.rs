use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numeric(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl From<capa_core::Error> for CliError {
    fn from(e: capa_core::Error) -> Self {
        use capa_core::Error::*;
        match e {
            Config(_) | Usage(_) | Domain { .. } => CliError::Config(e.to_string()),
            Numeric { .. } | Fit(_) | Model(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}
