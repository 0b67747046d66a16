//! Simulation of a switched entanglement access network, E91 key
//! distribution over it, and a ring secure-sum protocol consuming the keys.
//!
//! The numerical core is generic over [`scalar::Real`]; the aliases below fix
//! it to `f64`, which is what the network simulator uses.

pub mod analysis;
pub mod angle;
pub mod experiment;
pub mod format;
pub mod network;
pub mod qkd;
pub mod quantum;
pub mod rng;
pub mod scalar;
pub mod secure_sum;
pub mod transport;

pub type PairState = quantum::PairState<f64>;
pub type LocalUnitary = quantum::LocalUnitary<f64>;
pub type OutcomeDistribution = quantum::OutcomeDistribution<f64>;
pub type ChshAngles = quantum::ChshAngles<f64>;
