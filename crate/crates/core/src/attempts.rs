//! Three-way attempt classes and their one-vs-rest projections.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttemptClass {
    /// Construct present in both the original and the corrected sentence.
    Successful,
    /// Construct present only after correction.
    Unsuccessful,
    /// No attempt, or the construct only appears in the original.
    NoAttemptOrOther,
}

impl AttemptClass {
    pub fn as_str(self) -> &'static str {
        match self {
            AttemptClass::Successful => "successful",
            AttemptClass::Unsuccessful => "unsuccessful",
            AttemptClass::NoAttemptOrOther => "none",
        }
    }
}

impl fmt::Display for AttemptClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// Successful or unsuccessful attempt vs. none.
    General,
    Successful,
    Unsuccessful,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::General, Task::Successful, Task::Unsuccessful];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::General => "general",
            Task::Successful => "successful",
            Task::Unsuccessful => "unsuccessful",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Task::General),
            "successful" => Ok(Task::Successful),
            "unsuccessful" => Ok(Task::Unsuccessful),
            other => Err(Error::Value(format!("unknown task `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    tau_o: f64,
    tau_c: f64,
}

impl ThresholdPair {
    pub fn new(tau_o: f64, tau_c: f64) -> Result<Self> {
        for (name, t) in [("tau_o", tau_o), ("tau_c", tau_c)] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Value(format!("{name} = {t} is outside [0, 1]")));
            }
        }
        Ok(ThresholdPair { tau_o, tau_c })
    }

    pub fn both(tau: f64) -> Result<Self> {
        ThresholdPair::new(tau, tau)
    }

    pub fn tau_o(&self) -> f64 {
        self.tau_o
    }

    pub fn tau_c(&self) -> f64 {
        self.tau_c
    }
}

pub fn class_from_labels(y_o: bool, y_c: bool) -> AttemptClass {
    match (y_o, y_c) {
        (true, true) => AttemptClass::Successful,
        (false, true) => AttemptClass::Unsuccessful,
        _ => AttemptClass::NoAttemptOrOther,
    }
}

/// Class estimate from presence probabilities; a side is positive when its
/// probability reaches its threshold.
pub fn class_from_probs(p_o: f64, p_c: f64, t: ThresholdPair) -> AttemptClass {
    class_at(p_o, p_c, t.tau_o, t.tau_c)
}

/// As [`class_from_probs`] without range checks on the thresholds, so that
/// callers can use sentinels above 1.
pub(crate) fn class_at(p_o: f64, p_c: f64, tau_o: f64, tau_c: f64) -> AttemptClass {
    class_from_labels(p_o >= tau_o, p_c >= tau_c)
}

pub fn one_vs_rest(c: AttemptClass, task: Task) -> bool {
    match task {
        Task::General => c != AttemptClass::NoAttemptOrOther,
        Task::Successful => c == AttemptClass::Successful,
        Task::Unsuccessful => c == AttemptClass::Unsuccessful,
    }
}
