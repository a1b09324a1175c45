//! CEFR levels (used by can-do statements) and bands (used by essays).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One of the six base CEFR levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    A1,
    A2,
    B1,
    B2,
    C1,
    C2,
}

impl Level {
    pub const ALL: [Level; 6] = [
        Level::A1,
        Level::A2,
        Level::B1,
        Level::B2,
        Level::C1,
        Level::C2,
    ];

    /// Position on the scale, A1 = 0.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Level::A1 => "A1",
            Level::A2 => "A2",
            Level::B1 => "B1",
            Level::B2 => "B2",
            Level::C1 => "C1",
            Level::C2 => "C2",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "A1" => Level::A1,
            "A2" => Level::A2,
            "B1" => Level::B1,
            "B2" => Level::B2,
            "C1" => Level::C1,
            "C2" => Level::C2,
            other => {
                return Err(Error::Value(format!(
                    "`{other}` is not a CEFR level (A1..C2)"
                )))
            }
        })
    }
}

/// Essay proficiency band: the six levels plus the intermediate plus bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Band {
    A1,
    A2,
    A2Plus,
    B1,
    B1Plus,
    B2,
    B2Plus,
    C1,
    C1Plus,
    C2,
}

impl Band {
    pub const ALL: [Band; 10] = [
        Band::A1,
        Band::A2,
        Band::A2Plus,
        Band::B1,
        Band::B1Plus,
        Band::B2,
        Band::B2Plus,
        Band::C1,
        Band::C1Plus,
        Band::C2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Band::A1 => "A1",
            Band::A2 => "A2",
            Band::A2Plus => "A2+",
            Band::B1 => "B1",
            Band::B1Plus => "B1+",
            Band::B2 => "B2",
            Band::B2Plus => "B2+",
            Band::C1 => "C1",
            Band::C1Plus => "C1+",
            Band::C2 => "C2",
        }
    }

    /// Numeric encoding on the 1..6 scale; plus bands sit half-way up.
    pub fn encode(self) -> f64 {
        match self {
            Band::A1 => 1.0,
            Band::A2 => 2.0,
            Band::A2Plus => 2.5,
            Band::B1 => 3.0,
            Band::B1Plus => 3.5,
            Band::B2 => 4.0,
            Band::B2Plus => 4.5,
            Band::C1 => 5.0,
            Band::C1Plus => 5.5,
            Band::C2 => 6.0,
        }
    }
}

impl From<Level> for Band {
    fn from(level: Level) -> Self {
        match level {
            Level::A1 => Band::A1,
            Level::A2 => Band::A2,
            Level::B1 => Band::B1,
            Level::B2 => Band::B2,
            Level::C1 => Band::C1,
            Level::C2 => Band::C2,
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Band::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::Value(format!("`{s}` is not a CEFR band")))
    }
}

impl Serialize for Band {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Band {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
