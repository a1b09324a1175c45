use std::fmt;

use egp_core::Error;

/// A command failure, classified by the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad input files, schemas or arguments.
    Input(String),
    /// The LLM endpoint failed or answered unusably.
    External(String),
    /// The requested statistic is undefined on this data.
    Undefined(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::External(_) => 3,
            Failure::Undefined(_) => 4,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Failure::Input(msg.into())
    }

    fn prefixed(self, what: &str) -> Self {
        match self {
            Failure::Input(m) => Failure::Input(format!("{what}: {m}")),
            Failure::External(m) => Failure::External(format!("{what}: {m}")),
            Failure::Undefined(m) => Failure::Undefined(format!("{what}: {m}")),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::External(m) | Failure::Undefined(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_external() {
            Failure::External(e.to_string())
        } else if matches!(e, Error::Undefined(_)) {
            Failure::Undefined(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

/// Attach a description of what was being done to an error.
pub trait Context<T> {
    fn context(self, what: impl fmt::Display) -> Result<T, Failure>;
}

impl<T, E: Into<Failure>> Context<T> for Result<T, E> {
    fn context(self, what: impl fmt::Display) -> Result<T, Failure> {
        self.map_err(|e| e.into().prefixed(&what.to_string()))
    }
}
