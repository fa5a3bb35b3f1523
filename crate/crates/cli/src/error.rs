use std::fmt;

use crosstraffic::eval::EvalError;
use crosstraffic::ingest::IngestError;
use crosstraffic::pipeline::{JsonlError, PipelineError};
use crosstraffic::prep::PrepError;
use crosstraffic::sim::SimError;
use crosstraffic::store::StoreError;

/// A failed command. Validation problems exit with 1, I/O problems with 2.
#[derive(Debug)]
pub enum CliError {
    Invalid(anyhow::Error),
    Io(anyhow::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn invalid(msg: impl fmt::Display) -> Self {
        CliError::Invalid(anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    pub fn context(self, ctx: impl fmt::Display + Send + Sync + 'static) -> Self {
        match self {
            CliError::Invalid(e) => CliError::Invalid(e.context(ctx)),
            CliError::Io(e) => CliError::Io(e.context(ctx)),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(e) | CliError::Io(e) => write!(f, "{e:#}"),
        }
    }
}

pub trait Context<T> {
    fn context(self, ctx: impl fmt::Display + Send + Sync + 'static) -> Result<T>;
}

impl<T, E: Into<CliError>> Context<T> for std::result::Result<T, E> {
    fn context(self, ctx: impl fmt::Display + Send + Sync + 'static) -> Result<T> {
        self.map_err(|e| e.into().context(ctx))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io { .. } => CliError::Io(e.into()),
            _ => CliError::Invalid(e.into()),
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Io { .. } => CliError::Io(e.into()),
            _ => CliError::Invalid(e.into()),
        }
    }
}

impl From<JsonlError> for CliError {
    fn from(e: JsonlError) -> Self {
        match e {
            JsonlError::Io(_) => CliError::Io(e.into()),
            _ => CliError::Invalid(e.into()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            CliError::Io(e.into())
        } else {
            CliError::Invalid(e.into())
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.into())
        } else {
            CliError::Invalid(e.into())
        }
    }
}

macro_rules! invalid_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Invalid(e.into())
            }
        })*
    };
}

invalid_from!(PipelineError, PrepError, SimError, EvalError, toml::de::Error);
