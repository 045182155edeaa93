use thiserror::Error;

/// Errors raised by the frontier library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid sample at row {row}: {reason}")]
    InvalidSample { row: usize, reason: String },

    #[error("estimation failed for group `{group}`: {reason}")]
    Estimation { group: String, reason: String },

    #[error("utility matrix violates {0}")]
    ConstraintViolation(&'static str),

    #[error("unknown metric preset `{0}`")]
    UnknownPreset(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("conditional expectation undefined: {condition} has no mass{}", group_suffix(.group))]
    UndefinedConditional {
        condition: &'static str,
        group: Option<String>,
    },

    #[error("invalid fairness spec: {0}")]
    InvalidSpec(String),

    #[error("group mismatch: {0}")]
    GroupMismatch(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("{file}: line {line}, field `{field}`: {reason}")]
    Parse {
        file: String,
        line: u64,
        field: String,
        reason: String,
    },

    #[error("{path}: {reason}")]
    Io { path: String, reason: String },

    #[error("every policy in the grid was infeasible ({skipped} skipped)")]
    AllInfeasible { skipped: u64 },
}

fn group_suffix(group: &Option<String>) -> String {
    match group {
        Some(g) => format!(" (group `{g}`)"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn in_group(self, label: &str) -> Self {
        match self {
            Error::UndefinedConditional { condition, .. } => Error::UndefinedConditional {
                condition,
                group: Some(label.to_string()),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
