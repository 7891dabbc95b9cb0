use std::fmt;

/// Exit codes.
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// A failed run: the stage it failed in and the exit code to report.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub stage: String,
    pub message: String,
}

impl Failure {
    pub fn validation(stage: &str, message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            stage: stage.to_string(),
            message: message.into(),
        }
    }

    pub fn internal(stage: &str, message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INTERNAL,
            stage: stage.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

fn core_code(e: &sqm_core::Error) -> i32 {
    match e {
        sqm_core::Error::Budget(_) => EXIT_BUDGET,
        sqm_core::Error::Io(_) => EXIT_INTERNAL,
        _ => EXIT_VALIDATION,
    }
}

/// Attaches a stage name to lower-level errors.
pub trait Stage<T> {
    fn stage(self, stage: &str) -> Result<T, Failure>;
}

impl<T> Stage<T> for Result<T, sqm_core::Error> {
    fn stage(self, stage: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: core_code(&e),
            stage: stage.to_string(),
            message: e.to_string(),
        })
    }
}

impl<T> Stage<T> for Result<T, serde_json::Error> {
    fn stage(self, stage: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::validation(stage, e.to_string()))
    }
}

impl<T> Stage<T> for Result<T, std::io::Error> {
    fn stage(self, stage: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::internal(stage, e.to_string()))
    }
}
