use std::fmt;

use serde::{Deserialize, Serialize};

/// A possibility degree in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Possibility(f64);

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("possibility degree {0} outside [0, 1]")]
pub struct OutOfRange(pub f64);

/// Slack applied when comparing computed degrees against thresholds.
pub const EPSILON: f64 = 1e-9;

impl Possibility {
    pub const ZERO: Possibility = Possibility(0.0);
    pub const ONE: Possibility = Possibility(1.0);

    pub fn new(value: f64) -> Result<Self, OutOfRange> {
        if (0.0..=1.0).contains(&value) {
            Ok(Possibility(value))
        } else {
            Err(OutOfRange(value))
        }
    }

    /// Clamps into range; NaN maps to zero.
    pub fn saturating(value: f64) -> Self {
        if value.is_nan() {
            Possibility(0.0)
        } else {
            Possibility(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Possibility(1.0 - self.0)
    }

    pub fn min(self, other: Self) -> Self {
        Possibility(self.0.min(other.0))
    }

    pub fn max(self, other: Self) -> Self {
        Possibility(self.0.max(other.0))
    }

    /// `self >= threshold`, tolerating binary rounding of decimal inputs.
    pub fn meets(self, threshold: f64) -> bool {
        self.0 + EPSILON >= threshold
    }
}

impl TryFrom<f64> for Possibility {
    type Error = OutOfRange;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Possibility::new(value)
    }
}

impl From<Possibility> for f64 {
    fn from(p: Possibility) -> f64 {
        p.0
    }
}

impl fmt::Display for Possibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "{:.*}", p, self.0),
            None => write!(f, "{:.2}", self.0),
        }
    }
}

/// Rounds onto a 1e-12 grid. Differences of decimal degrees such as
/// `0.7 - 0.4` come back as the nearest double to the decimal result.
pub fn snap(value: f64) -> f64 {
    (value * 1e12).round() / 1e12
}

/// `leader - competitor`, snapped and kept within `[0, leader]`.
pub fn margin(leader: f64, competitor: f64) -> f64 {
    snap(leader - competitor).clamp(0.0, leader.max(0.0))
}
