use std::fmt;

/// Failures surfaced to the user, each mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file, or missing input files.
    Config(String),
    /// Malformed JSON or data on stdin.
    Input(String),
    /// The run finished but some prompts failed.
    PromptFailures(usize),
    /// Anything else that stopped the run.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::PromptFailures(_) | CliError::Runtime(_) => 1,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config_error",
            CliError::Input(_) => "input_error",
            CliError::PromptFailures(_) => "prompt_failures",
            CliError::Runtime(_) => "runtime_error",
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.code(), "message": self.to_string() }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Input(m) | CliError::Runtime(m) => f.write_str(m),
            CliError::PromptFailures(n) => write!(f, "{n} prompt(s) failed; see the report rows"),
        }
    }
}

impl std::error::Error for CliError {}
