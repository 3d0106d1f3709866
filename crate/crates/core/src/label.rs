use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Operational intent of a transmission. `Takeoff` is the positive class
/// for every metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Landing = 0,
    Takeoff = 1,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Landing, Label::Takeoff];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Label {
        if i == 0 {
            Label::Landing
        } else {
            Label::Takeoff
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Takeoff
    }

    /// 0.0 for landing, 1.0 for takeoff.
    pub fn target(self) -> f64 {
        self.index() as f64
    }

    /// Argmax over `[landing, takeoff]`; an exact tie goes to landing.
    pub fn from_probabilities(p: [f64; 2]) -> Label {
        if p[1] > p[0] {
            Label::Takeoff
        } else {
            Label::Landing
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Landing => "landing",
            Label::Takeoff => "takeoff",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "landing" | "0" => Ok(Label::Landing),
            "takeoff" | "1" => Ok(Label::Takeoff),
            other => Err(Error::InvalidData(format!("unknown label {other:?}"))),
        }
    }
}
