use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::NetworkError;
use crate::quantum::{eom_unitary, phase_retarder, LocalUnitary};

/// Side of the network, i.e. which switch a user hangs off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

/// An end user: one output port of one switch. Ports are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EndUser {
    pub side: Side,
    pub port: u8,
}

impl EndUser {
    pub fn new(side: Side, port: u8) -> Self {
        EndUser { side, port }
    }

    pub fn a(port: u8) -> Self {
        EndUser::new(Side::A, port)
    }

    pub fn b(port: u8) -> Self {
        EndUser::new(Side::B, port)
    }
}

impl fmt::Display for EndUser {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.side, self.port)
    }
}

impl FromStr for EndUser {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || NetworkError::BadUser(s.to_string());
        let mut chars = s.chars();
        let side = match chars.next().map(|c| c.to_ascii_uppercase()) {
            Some('A') => Side::A,
            Some('B') => Side::B,
            _ => return Err(bad()),
        };
        let port: u8 = chars.as_str().parse().map_err(|_| bad())?;
        if port == 0 {
            return Err(bad());
        }
        Ok(EndUser { side, port })
    }
}

/// An Alice-side user paired with a Bob-side user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UserPair {
    alice: EndUser,
    bob: EndUser,
}

impl UserPair {
    pub fn new(alice: EndUser, bob: EndUser) -> Result<Self, NetworkError> {
        if alice.side != Side::A || bob.side != Side::B {
            return Err(NetworkError::BadPair(format!("{alice}{bob}")));
        }
        Ok(UserPair { alice, bob })
    }

    /// `A{a}` with `B{b}`.
    pub fn ports(a: u8, b: u8) -> Self {
        UserPair {
            alice: EndUser::a(a),
            bob: EndUser::b(b),
        }
    }

    pub fn alice(&self) -> EndUser {
        self.alice
    }

    pub fn bob(&self) -> EndUser {
        self.bob
    }
}

impl fmt::Display for UserPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.alice, self.bob)
    }
}

impl FromStr for UserPair {
    type Err = NetworkError;

    /// Accepts `A1B2`, `A1-B2`, `a1,b2` and `B2A1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cleaned: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | ',' | ' ' | ':'))
            .collect();
        let split = cleaned
            .char_indices()
            .skip(1)
            .find(|(_, c)| c.is_ascii_alphabetic())
            .map(|(i, _)| i)
            .ok_or_else(|| NetworkError::BadPair(s.to_string()))?;
        let first: EndUser = cleaned[..split].parse()?;
        let second: EndUser = cleaned[split..].parse()?;
        match (first.side, second.side) {
            (Side::A, Side::B) => UserPair::new(first, second),
            (Side::B, Side::A) => UserPair::new(second, first),
            _ => Err(NetworkError::BadPair(s.to_string())),
        }
    }
}

/// Per-side scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerSide {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

impl PerSide {
    pub fn both(v: f64) -> Self {
        PerSide { a: v, b: v }
    }

    pub fn get(&self, side: Side) -> f64 {
        match side {
            Side::A => self.a,
            Side::B => self.b,
        }
    }
}

/// Uncompensated polarization transformation left on one fiber path:
/// a phase retarder of `retarder_deg` followed by an EOM-type rotation of
/// `eom_deg`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResidualRotation {
    pub eom_deg: f64,
    pub retarder_deg: f64,
}

impl ResidualRotation {
    pub fn new(eom_deg: f64, retarder_deg: f64) -> Self {
        ResidualRotation {
            eom_deg,
            retarder_deg,
        }
    }

    pub fn unitary(&self) -> LocalUnitary<f64> {
        eom_unitary(self.eom_deg.to_radians()).then_after(&phase_retarder(self.retarder_deg.to_radians()))
    }
}

/// Physical parameters of the access network.
///
/// Serialized as TOML with exactly these field names; angles in degrees.
/// `residual_rotation` is keyed by end user (`"A1"`, `"B3"`, ...); ports
/// without an entry are perfectly compensated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub fiber_length_km: PerSide,
    pub attenuation_db_per_km: f64,
    pub switch_insertion_loss_db: f64,
    pub ports_per_side: u8,
    pub pulse_rate_hz: f64,
    pub pair_gen_prob_per_pulse: f64,
    pub source_fidelity: f64,
    pub source_phase_deg: f64,
    pub detector_efficiency: f64,
    pub dark_count_prob_per_slot: f64,
    pub residual_rotation: BTreeMap<String, ResidualRotation>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            fiber_length_km: PerSide::both(10.0),
            attenuation_db_per_km: 0.2,
            switch_insertion_loss_db: 1.0,
            ports_per_side: 8,
            pulse_rate_hz: 76e6,
            pair_gen_prob_per_pulse: 0.05,
            source_fidelity: 0.9512,
            source_phase_deg: 180.0,
            detector_efficiency: 1.0,
            dark_count_prob_per_slot: 0.0,
            residual_rotation: default_residuals(),
        }
    }
}

// Small per-port leftovers after compensation: opposite EOM-type offsets on
// the two sides plus a few degrees of retardance, mostly on Bob's longer leg.
fn default_residuals() -> BTreeMap<String, ResidualRotation> {
    const ALICE_RETARDER: [f64; 8] = [0.0, 1.0, 0.5, 1.5, 0.0, 1.0, 0.5, 1.5];
    const BOB_RETARDER: [f64; 8] = [6.5, 5.5, 6.0, 5.0, 6.5, 5.5, 6.0, 5.0];
    let mut map = BTreeMap::new();
    for port in 1..=8u8 {
        let i = usize::from(port - 1);
        map.insert(
            EndUser::a(port).to_string(),
            ResidualRotation::new(2.5, ALICE_RETARDER[i]),
        );
        map.insert(
            EndUser::b(port).to_string(),
            ResidualRotation::new(-2.5, BOB_RETARDER[i]),
        );
    }
    map
}

impl NetworkConfig {
    /// Perfect source, lossless links, unit pair generation and no residual rotation.
    pub fn ideal() -> Self {
        NetworkConfig {
            fiber_length_km: PerSide::both(0.0),
            switch_insertion_loss_db: 0.0,
            pair_gen_prob_per_pulse: 1.0,
            source_fidelity: 1.0,
            residual_rotation: BTreeMap::new(),
            ..NetworkConfig::default()
        }
    }

    /// Lossless, perfectly compensated network with a Werner source of the given fidelity.
    pub fn werner(source_fidelity: f64) -> Self {
        NetworkConfig {
            source_fidelity,
            ..NetworkConfig::ideal()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, NetworkError> {
        let cfg: NetworkConfig =
            toml::from_str(text).map_err(|e| NetworkError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, NetworkError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NetworkError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |what: &str, v: f64| NetworkError::Config(format!("{what} out of range: {v}"));
        let non_negative = [
            ("fiber_length_km.A", self.fiber_length_km.a),
            ("fiber_length_km.B", self.fiber_length_km.b),
            ("attenuation_db_per_km", self.attenuation_db_per_km),
            ("switch_insertion_loss_db", self.switch_insertion_loss_db),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad(name, v));
            }
        }
        let unit = [
            ("pair_gen_prob_per_pulse", self.pair_gen_prob_per_pulse),
            ("detector_efficiency", self.detector_efficiency),
            ("dark_count_prob_per_slot", self.dark_count_prob_per_slot),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(name, v));
            }
        }
        if !(0.25..=1.0).contains(&self.source_fidelity) {
            return Err(bad("source_fidelity", self.source_fidelity));
        }
        if !(self.pulse_rate_hz > 0.0 && self.pulse_rate_hz.is_finite()) {
            return Err(bad("pulse_rate_hz", self.pulse_rate_hz));
        }
        if !self.source_phase_deg.is_finite() {
            return Err(bad("source_phase_deg", self.source_phase_deg));
        }
        if self.ports_per_side == 0 {
            return Err(bad("ports_per_side", 0.0));
        }
        for (key, rot) in &self.residual_rotation {
            let user: EndUser = key.parse()?;
            if user.port > self.ports_per_side {
                return Err(NetworkError::PortOutOfRange(user));
            }
            if !(rot.eom_deg.is_finite() && rot.retarder_deg.is_finite()) {
                return Err(NetworkError::Config(format!("residual_rotation.{key} not finite")));
            }
        }
        Ok(())
    }

    pub fn check_user(&self, user: EndUser) -> Result<(), NetworkError> {
        if user.port == 0 || user.port > self.ports_per_side {
            return Err(NetworkError::PortOutOfRange(user));
        }
        Ok(())
    }

    pub fn check_pair(&self, pair: UserPair) -> Result<(), NetworkError> {
        self.check_user(pair.alice())?;
        self.check_user(pair.bob())
    }

    pub fn residual(&self, user: EndUser) -> LocalUnitary<f64> {
        self.residual_rotation
            .get(&user.to_string())
            .map(ResidualRotation::unitary)
            .unwrap_or_else(LocalUnitary::identity)
    }

    pub fn source_phase(&self) -> f64 {
        self.source_phase_deg.to_radians()
    }
}
