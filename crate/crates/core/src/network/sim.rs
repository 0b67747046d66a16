use std::collections::HashMap;
use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use super::{channel_state, transmittance, NetworkConfig, NetworkError, RoutingSchedule, Side, UserPair};
use crate::angle::{settings, Angle};
use crate::quantum::{born_probabilities, outcome_bits, OutcomeDistribution, PairState, Port};
use crate::rng::{self, SimRng};

/// Measurement basis of Alice's analyzer in a fringe scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn alice_angle(self) -> Angle {
        match self {
            Basis::Z => settings::DEG_0,
            Basis::X => settings::DEG_45,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Basis::Z => "Z",
            Basis::X => "X",
        }
    }
}

impl std::str::FromStr for Basis {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "Z" => Ok(Basis::Z),
            "X" => Ok(Basis::X),
            other => Err(NetworkError::Config(format!("unknown basis {other:?}"))),
        }
    }
}

/// How analyzer angles are chosen for each slot.
#[derive(Debug, Clone, PartialEq)]
pub enum SettingPolicy {
    Fixed { theta_a: Angle, theta_b: Angle },
    /// Alice fixed by the basis; Bob stepped through `theta_b` in equal blocks of slots.
    Fringe { basis: Basis, theta_b: Vec<Angle> },
    /// Alice uniform over {0°, 22.5°, 45°}, Bob uniform over {22.5°, 45°, 67.5°}.
    E91,
    /// Cycles slot by slot through the four CHSH setting pairs.
    Chsh,
}

impl SettingPolicy {
    fn settings_for(
        &self,
        slot: u64,
        range: &Range<u64>,
        rng: &mut SimRng,
    ) -> (Angle, Angle) {
        match self {
            SettingPolicy::Fixed { theta_a, theta_b } => (*theta_a, *theta_b),
            SettingPolicy::Fringe { basis, theta_b } => {
                let len = (range.end - range.start) as u128;
                let offset = (slot - range.start) as u128;
                let idx = (offset * theta_b.len() as u128 / len) as usize;
                (basis.alice_angle(), theta_b[idx.min(theta_b.len() - 1)])
            }
            SettingPolicy::E91 => (
                settings::E91_ALICE[rng.random_range(0..3)],
                settings::E91_BOB[rng.random_range(0..3)],
            ),
            SettingPolicy::Chsh => {
                let (a, b, _) = settings::CHSH_TERMS[(slot % 4) as usize];
                (a, b)
            }
        }
    }
}

/// One coincidence: both detectors fired in the same slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoincidenceRecord {
    pub slot: u64,
    pub pair: UserPair,
    pub theta_a: Angle,
    pub theta_b: Angle,
    /// 0 = value +1, 1 = value −1.
    pub outcome_a: u8,
    pub outcome_b: u8,
}

/// Slot-level accounting of a simulation run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LossStats {
    pub slots: u64,
    /// Slots in which the switches were not routed to any pair.
    pub idle_slots: u64,
    pub pairs_generated: u64,
    pub arrived_a: u64,
    pub arrived_b: u64,
    pub both_arrived: u64,
    /// Coincidences in which at least one click was a dark count.
    pub dark_coincidences: u64,
    pub records: u64,
}

impl LossStats {
    pub fn merge(&mut self, other: &LossStats) {
        self.slots += other.slots;
        self.idle_slots += other.idle_slots;
        self.pairs_generated += other.pairs_generated;
        self.arrived_a += other.arrived_a;
        self.arrived_b += other.arrived_b;
        self.both_arrived += other.both_arrived;
        self.dark_coincidences += other.dark_coincidences;
        self.records += other.records;
    }
}

/// A simulation session: owns its random streams and reuses channel states
/// across calls, so consecutive `run` calls continue one experiment.
pub struct SlotSimulator {
    config: NetworkConfig,
    physics: SimRng,
    choices: SimRng,
    states: HashMap<UserPair, PairState<f64>>,
    outcome_cache: HashMap<(UserPair, Angle, Angle), OutcomeDistribution<f64>>,
}

struct Window {
    pair: UserPair,
    first: u64,
    last: u64,
}

impl SlotSimulator {
    pub fn new(config: NetworkConfig, seed: u64) -> Result<Self, NetworkError> {
        config.validate()?;
        Ok(SlotSimulator {
            config,
            physics: rng::stream(seed, "slots.physics", 0),
            choices: rng::stream(seed, "slots.settings", 0),
            states: HashMap::new(),
            outcome_cache: HashMap::new(),
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    /// Simulates the slots in `range`, routing with `schedule`.
    ///
    /// Quiet slots are skipped geometrically: the gap to the next slot with a
    /// generated pair or a dark count is drawn in one step, then the slot
    /// contents are drawn conditioned on that activity.
    pub fn run(
        &mut self,
        schedule: &RoutingSchedule,
        policy: &SettingPolicy,
        range: Range<u64>,
    ) -> Result<(Vec<CoincidenceRecord>, LossStats), NetworkError> {
        if let SettingPolicy::Fringe { theta_b, .. } = policy {
            if theta_b.is_empty() {
                return Err(NetworkError::Config("fringe policy needs at least one angle".into()));
            }
        }
        let mut stats = LossStats {
            slots: range.end.saturating_sub(range.start),
            ..LossStats::default()
        };
        let mut records = Vec::new();
        if range.is_empty() {
            return Ok((records, stats));
        }

        let windows: Vec<Window> = schedule
            .entries()
            .iter()
            .filter(|e| e.end >= range.start && e.start < range.end)
            .map(|e| Window {
                pair: e.pair,
                first: e.start.max(range.start),
                last: e.end.min(range.end - 1),
            })
            .collect();
        let routed: u64 = windows.iter().map(|w| w.last - w.first + 1).sum();
        stats.idle_slots = stats.slots - routed;

        let g = self.config.pair_gen_prob_per_pulse;
        let d = self.config.dark_count_prob_per_slot;
        let t_a = transmittance(&self.config, Side::A);
        let t_b = transmittance(&self.config, Side::B);
        let p_active = 1.0 - (1.0 - g) * (1.0 - d) * (1.0 - d);
        if p_active <= 0.0 {
            return Ok((records, stats));
        }
        let gaps = Geometric::new(p_active).expect("activity probability in (0, 1]");
        let p_gen_given_active = g / p_active;
        let p_dark_a_given_dark_only = if d > 0.0 { d / (1.0 - (1.0 - d) * (1.0 - d)) } else { 0.0 };

        for w in windows {
            self.config.check_pair(w.pair)?;
            let mut slot = w.first;
            loop {
                let gap = gaps.sample(&mut self.physics);
                slot = slot.saturating_add(gap);
                if slot > w.last {
                    break;
                }
                let generated = self.physics.random::<f64>() < p_gen_given_active;
                let (dark_a, dark_b) = if generated {
                    (self.physics.random::<f64>() < d, self.physics.random::<f64>() < d)
                } else if self.physics.random::<f64>() < p_dark_a_given_dark_only {
                    (true, self.physics.random::<f64>() < d)
                } else {
                    (false, true)
                };
                let (arr_a, arr_b) = if generated {
                    stats.pairs_generated += 1;
                    (self.physics.random::<f64>() < t_a, self.physics.random::<f64>() < t_b)
                } else {
                    (false, false)
                };
                stats.arrived_a += u64::from(arr_a);
                stats.arrived_b += u64::from(arr_b);
                stats.both_arrived += u64::from(arr_a && arr_b);

                if (arr_a || dark_a) && (arr_b || dark_b) {
                    let (theta_a, theta_b) = policy.settings_for(slot, &range, &mut self.choices);
                    let dist = self.outcomes(w.pair, theta_a, theta_b)?;
                    let (port_a, port_b) = if arr_a && arr_b {
                        sample_joint(&dist, &mut self.physics)
                    } else {
                        stats.dark_coincidences += 1;
                        let pa = if arr_a {
                            sample_port(dist.marginal_a(Port::H), &mut self.physics)
                        } else {
                            sample_port(0.5, &mut self.physics)
                        };
                        let pb = if arr_b {
                            sample_port(dist.marginal_b(Port::H), &mut self.physics)
                        } else {
                            sample_port(0.5, &mut self.physics)
                        };
                        (pa, pb)
                    };
                    let (outcome_a, outcome_b) = outcome_bits(port_a, port_b);
                    records.push(CoincidenceRecord {
                        slot,
                        pair: w.pair,
                        theta_a,
                        theta_b,
                        outcome_a,
                        outcome_b,
                    });
                }
                if slot == w.last {
                    break;
                }
                slot += 1;
            }
        }
        stats.records = records.len() as u64;
        Ok((records, stats))
    }

    fn outcomes(
        &mut self,
        pair: UserPair,
        theta_a: Angle,
        theta_b: Angle,
    ) -> Result<OutcomeDistribution<f64>, NetworkError> {
        if let Some(d) = self.outcome_cache.get(&(pair, theta_a, theta_b)) {
            return Ok(*d);
        }
        let state = match self.states.get(&pair) {
            Some(s) => *s,
            None => {
                let s = channel_state(&self.config, pair)?;
                self.states.insert(pair, s);
                s
            }
        };
        let d = born_probabilities(&state, theta_a.radians(), theta_b.radians());
        self.outcome_cache.insert((pair, theta_a, theta_b), d);
        Ok(d)
    }
}

fn sample_joint(dist: &OutcomeDistribution<f64>, rng: &mut SimRng) -> (Port, Port) {
    let u: f64 = rng.random();
    let cells = [
        (Port::H, Port::H),
        (Port::H, Port::V),
        (Port::V, Port::H),
        (Port::V, Port::V),
    ];
    let mut acc = 0.0;
    for (p, cell) in dist.as_array().iter().zip(cells) {
        acc += p;
        if u < acc {
            return cell;
        }
    }
    // Rounding can leave `acc` a hair below 1; fall back to the last nonzero cell.
    let last = dist.as_array().iter().rposition(|&p| p > 0.0).unwrap_or(3);
    cells[last]
}

fn sample_port(p_h: f64, rng: &mut SimRng) -> Port {
    if rng.random::<f64>() < p_h {
        Port::H
    } else {
        Port::V
    }
}

/// Runs `n_slots` slots from slot 0 in a fresh session.
pub fn run_slots(
    config: &NetworkConfig,
    schedule: &RoutingSchedule,
    policy: &SettingPolicy,
    n_slots: u64,
    seed: u64,
) -> Result<(Vec<CoincidenceRecord>, LossStats), NetworkError> {
    SlotSimulator::new(config.clone(), seed)?.run(schedule, policy, 0..n_slots)
}
