use qldp::QldpError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("out of regime: {0}")]
    Regime(String),

    #[error("io error: {0}")]
    Io(String),

    #[error(transparent)]
    Core(QldpError),
}

impl CliError {
    /// 1 failed run, 2 usage, 3 out-of-regime or infeasible budget.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } => 2,
            CliError::Regime(_) => 3,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                QldpError::OutOfRegime { .. } | QldpError::Infeasible(_) => 3,
                QldpError::InvalidInput(_) | QldpError::Parse { .. } | QldpError::DegenerateObservable(_) => 2,
                QldpError::NoninvertibleMechanism(_) => 3,
            },
        }
    }
}

impl From<QldpError> for CliError {
    fn from(e: QldpError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
