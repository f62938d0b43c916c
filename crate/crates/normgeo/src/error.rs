use normgeo_core::Error;

/// Exit status for bad input (flags, files, configs).
pub const EXIT_INPUT: i32 = 1;
/// Exit status for solver and sampler failures.
pub const EXIT_RUNTIME: i32 = 2;

/// Error carrying a machine-parsable tag and an exit status.
#[derive(Debug, thiserror::Error)]
#[error("{tag}: {message}")]
pub struct CliError {
    pub tag: &'static str,
    pub message: String,
    pub code: i32,
}

impl CliError {
    pub fn input(tag: &'static str, message: impl Into<String>) -> Self {
        CliError { tag, message: message.into(), code: EXIT_INPUT }
    }

    pub fn runtime(tag: &'static str, message: impl Into<String>) -> Self {
        CliError { tag, message: message.into(), code: EXIT_RUNTIME }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::input("E_USAGE", message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let tag = match &e {
            Error::Dimension { .. } => "E_DIM",
            Error::InvalidInput(_) => "E_INPUT",
            Error::Unsupported(_) => "E_UNSUPPORTED",
            Error::DimensionTooLarge { .. } => "E_DIM_TOO_LARGE",
            Error::NotPositiveDefinite => "E_NOT_PD",
            Error::NearSingular { .. } => "E_NEAR_SINGULAR",
            Error::DegenerateSet { .. } => "E_DEGENERATE_SET",
            Error::Solver { .. } => "E_SOLVER",
            Error::NoCrossing { .. } => "E_NO_CROSSING",
        };
        let code = if e.is_input_error() { EXIT_INPUT } else { EXIT_RUNTIME };
        CliError { tag, message: e.to_string(), code }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::runtime("E_OUTPUT", e.to_string())
    }
}
