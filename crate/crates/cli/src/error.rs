use std::fmt;

use phfem::PhError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const STRUCTURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const MISSING: i32 = 3;
    pub const NUMERICAL: i32 = 4;
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(exit::CONFIG, message)
    }

    pub fn missing(message: impl Into<String>) -> Self {
        Self::new(exit::MISSING, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<PhError> for CliError {
    fn from(e: PhError) -> Self {
        let code = match &e {
            PhError::InvalidArgument(_)
            | PhError::InvalidPartition(_)
            | PhError::UnsupportedSpec { .. }
            | PhError::DegenerateWeights(_)
            | PhError::SingularHodge(_)
            | PhError::Parse(_) => exit::CONFIG,
            PhError::StructureViolation(_) | PhError::RankDeficiency(_) | PhError::Internal(_) => exit::STRUCTURE,
            PhError::Numerical(_) => exit::NUMERICAL,
            PhError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => exit::MISSING,
            PhError::Io(_) => exit::NUMERICAL,
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        PhError::Io(e).into()
    }
}

pub type CliResult<T> = Result<T, CliError>;
