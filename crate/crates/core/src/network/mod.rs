//! Slot-level model of the access network: one pair source, a fiber and a
//! 1×N switch per side, and threshold detectors behind a polarizing beam
//! splitter at every end user.

mod config;
mod schedule;
mod sim;

use thiserror::Error;

pub use config::{EndUser, NetworkConfig, PerSide, ResidualRotation, Side, UserPair};
pub use schedule::{RoutingSchedule, ScheduleEntry};
pub use sim::{run_slots, Basis, CoincidenceRecord, LossStats, SettingPolicy, SlotSimulator};

use crate::quantum::{apply_local, ideal_pair_state, werner_mix, PairState, QuantumError};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid end user {0:?}")]
    BadUser(String),
    #[error("invalid user pair {0:?}: expected one A-side and one B-side user")]
    BadPair(String),
    #[error("port of {0} exceeds the configured ports per side")]
    PortOutOfRange(EndUser),
    #[error("invalid routing schedule: {0}")]
    BadSchedule(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// Probability that a photon sent toward `side` is detected:
/// `10^(−(length·attenuation + switch_loss)/10) · detector_efficiency`.
pub fn transmittance(config: &NetworkConfig, side: Side) -> f64 {
    let loss_db = config.fiber_length_km.get(side) * config.attenuation_db_per_km
        + config.switch_insertion_loss_db;
    10f64.powf(-loss_db / 10.0) * config.detector_efficiency
}

/// Expected coincidences per slot without dark counts.
pub fn expected_record_rate(config: &NetworkConfig) -> f64 {
    config.pair_gen_prob_per_pulse * transmittance(config, Side::A) * transmittance(config, Side::B)
}

/// The source state as delivered to `pair`: Werner noise at the source
/// fidelity, then the residual rotations of the two fiber paths.
pub fn channel_state(config: &NetworkConfig, pair: UserPair) -> Result<PairState<f64>, NetworkError> {
    config.check_pair(pair)?;
    let ideal = ideal_pair_state(config.source_phase());
    let noisy = werner_mix(&ideal, config.source_fidelity)?;
    Ok(apply_local(
        &noisy,
        &config.residual(pair.alice()),
        &config.residual(pair.bob()),
    ))
}
