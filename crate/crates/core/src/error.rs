use crate::symkernel::{ParseError, SubstError, SymbolError};

/// Broad failure classes; the CLI maps these onto exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Unsupported,
    Inconsistent,
    Budget,
    Numerical,
    Internal,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Subst(#[from] SubstError),
    #[error("{0}")]
    Input(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported shape: {0}")]
    Unsupported(String),
    #[error("inconsistent theory: {0}")]
    Inconsistent(String),
    #[error("constraint budget exceeded: {count} constraints for a {limit}-dimensional phase space")]
    BudgetExceeded { count: usize, limit: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("internal invariant broken: {0}")]
    Internal(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse(_) | Error::Symbol(_) | Error::Input(_) | Error::Precondition(_) => {
                ErrorKind::Input
            }
            Error::Subst(_) | Error::Internal(_) => ErrorKind::Internal,
            Error::Unsupported(_) => ErrorKind::Unsupported,
            Error::Inconsistent(_) => ErrorKind::Inconsistent,
            Error::BudgetExceeded { .. } => ErrorKind::Budget,
            Error::Numerical(_) => ErrorKind::Numerical,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
