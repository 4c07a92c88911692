use std::fmt;
use std::path::Path;

use serde::Serialize;

/// Failure reported to the user as a single JSON record on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
}

impl CliError {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
            path: None,
            line: None,
            scenario: None,
        }
    }

    /// Malformed config; `line` 0 means the whole file.
    pub fn config(path: &Path, line: usize, message: impl Into<String>) -> Self {
        Self {
            path: Some(path.display().to_string()),
            line: (line > 0).then_some(line),
            ..Self::new("config", message)
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            path: Some(path.display().to_string()),
            ..Self::new("io", err.to_string())
        }
    }

    pub fn data(path: &Path, message: impl Into<String>) -> Self {
        Self {
            path: Some(path.display().to_string()),
            ..Self::new("data", message)
        }
    }

    pub fn solver(scenario: &str, err: gmwdb_core::Error) -> Self {
        Self {
            scenario: Some(scenario.to_string()),
            ..Self::new("solver", err.to_string())
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("usage", message)
    }

    pub fn in_scenario(mut self, scenario: &str) -> Self {
        self.scenario.get_or_insert_with(|| scenario.to_string());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error record serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)?;
        if let Some(p) = &self.path {
            write!(f, " ({p}")?;
            if let Some(l) = self.line {
                write!(f, ":{l}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl std::error::Error for CliError {}
