use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text. `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    /// No candidate satisfies the constraints; `constraint` names the binding one.
    #[error("infeasible: {constraint} ({detail})")]
    Infeasible { constraint: String, detail: String },

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code for the CLI: 1 usage, 2 validation, 3 infeasible.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Usage(_) | Error::Io(_) => 1,
            Error::Parse { .. } | Error::Validation { .. } => 2,
            Error::Infeasible { .. } => 3,
        }
    }
}

/// Fails with a validation error unless `value` is finite and `>= 0`.
pub(crate) fn ensure_non_negative(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("must be finite and >= 0, got {value}"),
        ))
    }
}

pub(crate) fn ensure_positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

/// Fraction in the half-open interval (0, 1].
pub(crate) fn ensure_fraction(field: &str, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("must be in (0, 1], got {value}"),
        ))
    }
}
