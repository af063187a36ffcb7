use std::fmt;

use takeup_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Internal,
    Usage,
    Config,
    Input,
    MissingArtifact,
    NonConvergence,
    Io,
}

impl Kind {
    pub fn code(self) -> i32 {
        match self {
            Kind::Internal => 1,
            Kind::Usage => 2,
            Kind::Config => 3,
            Kind::Input => 4,
            Kind::MissingArtifact => 5,
            Kind::NonConvergence => 6,
            Kind::Io => 7,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Internal => "internal",
            Kind::Usage => "usage",
            Kind::Config => "config",
            Kind::Input => "input",
            Kind::MissingArtifact => "missing_artifact",
            Kind::NonConvergence => "non_convergence",
            Kind::Io => "io",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        CliError { kind, message: message.into() }
    }
}

/// `error: kind=<name> code=<n> message="<json-escaped text>"`
impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = serde_json::to_string(&self.message).unwrap_or_else(|_| "\"\"".into());
        write!(f, "error: kind={} code={} message={}", self.kind.name(), self.kind.code(), msg)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Configuration(_) | Error::Lookup(_) => Kind::Config,
            Error::NonConvergence { .. } => Kind::NonConvergence,
            Error::Io { .. } => Kind::Io,
            Error::Composition { .. }
            | Error::InputValidation(_)
            | Error::MissingPolicyYear(_)
            | Error::Domain(_)
            | Error::SingularDesign { .. }
            | Error::UndefinedRate(_)
            | Error::Parse { .. } => Kind::Input,
        };
        CliError::new(kind, e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::new(Kind::Io, format!("{}: {e}", path.display()))
}
