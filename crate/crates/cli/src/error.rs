use std::fmt;
use std::process::ExitCode;

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Numerical(_) => 4,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<hymis::Error> for CliError {
    fn from(e: hymis::Error) -> Self {
        use hymis::Error as E;
        match e {
            E::InvalidParams(_) | E::InvalidTrace(_) | E::Csv(_) | E::Json(_) => CliError::Parse(e.to_string()),
            E::Config(_) | E::Schedule(_) | E::MissingBaseline | E::ZeroBaseline => CliError::Usage(e.to_string()),
            E::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
