use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] matryoshka::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Core(e) => e.kind(),
        }
    }

    /// Process exit code; every error kind gets its own.
    pub fn exit_code(&self) -> i32 {
        use matryoshka::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Core(e) => match e {
                E::Config(_) => 4,
                E::Structure(_) => 5,
                E::Infeasible(_) => 6,
                E::Domain(_) => 7,
                E::Numeric(_) => 8,
                E::Integrator(_) => 9,
                E::MissingEdgeState(_) => 10,
                E::Protocol(_) => 11,
            },
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
    }
}

pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub type CliResult<T> = std::result::Result<T, CliError>;
