use thiserror::Error;

/// Errors raised by the toolkit. Variants map onto the failure classes the
/// operations document: bad input, degenerate observables, non-invertible
/// mechanisms, infeasible privacy budgets and out-of-regime parameters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QldpError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate observable: {0}")]
    DegenerateObservable(String),

    #[error("non-invertible mechanism: {0}")]
    NoninvertibleMechanism(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    /// A sample-complexity formula was evaluated outside the parameter regime
    /// in which it holds. `condition` names the violated precondition.
    #[error("out of regime: requires {condition}")]
    OutOfRegime { condition: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl QldpError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        QldpError::InvalidInput(msg.into())
    }

    pub(crate) fn regime(condition: impl Into<String>) -> Self {
        QldpError::OutOfRegime {
            condition: condition.into(),
        }
    }
}

pub type Result<T, E = QldpError> = std::result::Result<T, E>;
