use serde::Serialize;
use trapmode::Error;

/// Failure of a run, with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad config, flags or parameters: exit 2.
    Validation(String),
    /// Numerical failure: exit 3.
    Solver(Error),
    /// Could not write artifacts: exit 3.
    Io(std::io::Error),
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Solver(_) => "solver",
            CliError::Io(_) => "io",
        }
    }

    /// One-line JSON for stderr.
    pub fn diagnostic(&self) -> String {
        let d = Diagnostic { error: self.kind(), message: self.to_string(), exit_code: self.exit_code() };
        serde_json::to_string(&d).expect("diagnostic serializes")
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Solver(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownDomain(_) | Error::InvalidParameter(_) | Error::BranchIndex { .. } | Error::UnequalSigma(_) => {
                CliError::Validation(e.to_string())
            }
            e => CliError::Solver(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
