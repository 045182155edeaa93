use std::fmt;

use fairfront_core::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(e: Error) -> Self {
        Self::config_msg(e.to_string())
    }

    pub fn config_msg(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn data(e: Error) -> Self {
        Self {
            code: EXIT_DATA,
            message: e.to_string(),
        }
    }

    /// Classifies an error raised while computing on already loaded inputs.
    pub fn compute(e: Error) -> Self {
        let code = match e {
            Error::AllInfeasible { .. } => EXIT_INFEASIBLE,
            Error::InvalidParameter(_)
            | Error::ConstraintViolation(_)
            | Error::UnknownPreset(_)
            | Error::InvalidSpec(_)
            | Error::GroupMismatch(_)
            | Error::Dimension { .. } => EXIT_CONFIG,
            _ => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}
