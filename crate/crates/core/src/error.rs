use thiserror::Error;

/// Errors raised by the filter, the state space models and the CLI plumbing.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    /// Innovation variance vanished (or went negative) while the innovation did not.
    #[error("singular update at step {}: innovation variance {variance:e}, innovation {innovation:e}", fmt_step(.step))]
    SingularUpdate {
        step: Option<usize>,
        variance: f64,
        innovation: f64,
    },

    #[error("solve diverged at step {} (t = {t}): non-finite state or vector field output", fmt_step(.step))]
    Diverged { step: Option<usize>, t: f64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

fn fmt_step(step: &Option<usize>) -> String {
    match step {
        Some(k) => k.to_string(),
        None => "?".to_string(),
    }
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Attach a step index to errors that carry one.
    pub(crate) fn at_step(self, k: usize) -> Self {
        match self {
            Error::SingularUpdate {
                variance,
                innovation,
                ..
            } => Error::SingularUpdate {
                step: Some(k),
                variance,
                innovation,
            },
            Error::Diverged { t, .. } => Error::Diverged { step: Some(k), t },
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
