use std::fmt;
use std::process::ExitCode;

/// A command failure with its exit status: 1 for usage problems (bad flags,
/// unreadable or malformed inputs), 2 for failed invariant checks.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub type CliResult<T = ()> = Result<T, Failure>;

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<qfgeo_core::Error> for Failure {
    fn from(e: qfgeo_core::Error) -> Self {
        use qfgeo_core::Error::*;
        match e {
            Parse { .. } | InvalidArgument(_) | Io(_) | Csv(_) | Json(_) | UnknownNode(_) => Failure::usage(e.to_string()),
            _ => Failure::invariant(e.to_string()),
        }
    }
}

/// Attaches the offending path to I/O errors.
pub trait IoContext<T> {
    fn at(self, path: &std::path::Path) -> CliResult<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: &std::path::Path) -> CliResult<T> {
        self.map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    }
}
