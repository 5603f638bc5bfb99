use std::fmt;

/// Process exit codes.
pub mod exit {
    pub const FAILURE: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const PORT_BUSY: i32 = 3;
    pub const EXPLAINER_FAILURES: i32 = 4;
}

/// An error that carries the exit code the process should end with.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        CliError::new(exit::VALIDATION, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Exit code for any error escaping a command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if let Some(e) = err.downcast_ref::<CliError>() {
        return e.code;
    }
    match err.downcast_ref::<lionex::Error>() {
        Some(
            lionex::Error::Validation(_)
            | lionex::Error::Parse { .. }
            | lionex::Error::Dimension { .. }
            | lionex::Error::Structure(_)
            | lionex::Error::Domain(_),
        ) => exit::VALIDATION,
        _ => exit::FAILURE,
    }
}
