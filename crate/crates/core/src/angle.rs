//! Analyzer angles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// An analyzer angle stored in integer millidegrees.
///
/// Settings are compared for equality when sifting and when grouping counts,
/// so they are kept on an exact grid rather than as floats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Angle(i32);

impl Angle {
    pub const ZERO: Angle = Angle(0);

    pub const fn from_millidegrees(m: i32) -> Self {
        Angle(m)
    }

    /// Rounds to the nearest millidegree.
    pub fn from_degrees(deg: f64) -> Self {
        Angle((deg * 1000.0).round() as i32)
    }

    pub fn millidegrees(self) -> i32 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        f64::from(self.0) / 1000.0
    }

    pub fn radians(self) -> f64 {
        self.degrees().to_radians()
    }
}

impl From<f64> for Angle {
    fn from(deg: f64) -> Self {
        Angle::from_degrees(deg)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.degrees()
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.degrees())
    }
}

impl FromStr for Angle {
    type Err = std::num::ParseFloatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim().parse::<f64>().map(Angle::from_degrees)
    }
}

/// The analyzer angles used throughout the experiment.
pub mod settings {
    use super::Angle;

    pub const DEG_0: Angle = Angle::from_millidegrees(0);
    pub const DEG_22_5: Angle = Angle::from_millidegrees(22_500);
    pub const DEG_45: Angle = Angle::from_millidegrees(45_000);
    pub const DEG_67_5: Angle = Angle::from_millidegrees(67_500);

    /// Alice's random choices in the key-distribution run.
    pub const E91_ALICE: [Angle; 3] = [DEG_0, DEG_22_5, DEG_45];
    /// Bob's random choices in the key-distribution run.
    pub const E91_BOB: [Angle; 3] = [DEG_22_5, DEG_45, DEG_67_5];
    /// Matched settings kept as key material.
    pub const KEY_SETTINGS: [Angle; 2] = [DEG_22_5, DEG_45];
    /// `(θa, θb, sign)` terms of the CHSH combination.
    pub const CHSH_TERMS: [(Angle, Angle, i8); 4] = [
        (DEG_0, DEG_22_5, 1),
        (DEG_45, DEG_22_5, 1),
        (DEG_45, DEG_67_5, 1),
        (DEG_0, DEG_67_5, -1),
    ];
}
