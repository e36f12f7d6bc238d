use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("structure error: {0}")]
    Structure(String),
    #[error("no real solution: {0}")]
    Infeasible(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("integrator step error: {0}")]
    Integrator(String),
    #[error("edge state not found: {0}")]
    MissingEdgeState(String),
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl Error {
    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Structure(_) => "structure",
            Error::Infeasible(_) => "infeasible",
            Error::Numeric(_) => "numeric",
            Error::Domain(_) => "domain",
            Error::Integrator(_) => "integrator",
            Error::MissingEdgeState(_) => "missing_edge_state",
            Error::Protocol(_) => "protocol",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
