//! Measurement runs on the simulated network: fringe scans and CHSH
//! acquisitions for one user pair.

use crate::analysis::{
    chsh_estimate, fidelity_bound, fit_fringe, AnalysisError, ChshEstimate, CountMatrix, CountTable, FringeCurve,
    FringeFit,
};
use crate::angle::{settings, Angle};
use crate::network::{
    expected_record_rate, Basis, LossStats, NetworkConfig, NetworkError, RoutingSchedule, SettingPolicy,
    SlotSimulator, UserPair,
};
use crate::rng::derive_seed;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    Invalid(String),
}

/// `points` equally spaced analyzer angles over `[0°, 180°)`, rounded to the
/// millidegree grid.
pub fn fringe_angles(points: usize) -> Vec<Angle> {
    (0..points)
        .map(|i| Angle::from_degrees(180.0 * i as f64 / points as f64))
        .collect()
}

/// Fringe of `pair` in `basis`: `pulses` slots at each of Bob's angles.
pub fn fringe_scan(
    config: &NetworkConfig,
    pair: UserPair,
    basis: Basis,
    angles: &[Angle],
    pulses: u64,
    seed: u64,
) -> Result<(FringeCurve, LossStats), ExperimentError> {
    config.check_pair(pair)?;
    if angles.is_empty() {
        return Err(ExperimentError::Invalid("fringe scan needs at least one angle".into()));
    }
    let total = pulses * angles.len() as u64;
    let label = format!("experiment.fringe.{pair}.{}", basis.label());
    let mut sim = SlotSimulator::new(config.clone(), derive_seed(seed, &label, 0))?;
    let policy = SettingPolicy::Fringe {
        basis,
        theta_b: angles.to_vec(),
    };
    let (records, stats) = sim.run(&RoutingSchedule::single(pair, total), &policy, 0..total)?;
    let mut curve = FringeCurve::from_records(basis, &records);
    // Angles with no coincidence at all still belong on the curve.
    for &a in angles {
        if !curve.points.iter().any(|p| p.0 == a) {
            curve.points.push((a, 0));
        }
    }
    curve.points.sort();
    Ok((curve, stats))
}

/// Both fringes of one pair and the fidelity bound from their fitted visibilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFringes {
    pub pair: UserPair,
    pub z: FringeCurve,
    pub x: FringeCurve,
    pub fit_z: FringeFit,
    pub fit_x: FringeFit,
    pub bound: f64,
}

pub fn pair_fringes(
    config: &NetworkConfig,
    pair: UserPair,
    angles: &[Angle],
    pulses: u64,
    seed: u64,
) -> Result<PairFringes, ExperimentError> {
    let (z, _) = fringe_scan(config, pair, Basis::Z, angles, pulses, seed)?;
    let (x, _) = fringe_scan(config, pair, Basis::X, angles, pulses, seed)?;
    let fit_z = fit_fringe(&z)?;
    let fit_x = fit_fringe(&x)?;
    let bound = fidelity_bound(fit_z.visibility.clamp(0.0, 1.0), fit_x.visibility.clamp(0.0, 1.0))?;
    Ok(PairFringes {
        pair,
        z,
        x,
        fit_z,
        fit_x,
        bound,
    })
}

const MAX_CHSH_SLOTS: u64 = 1 << 40;

/// Runs the four CHSH settings on `pair` until each has `per_setting`
/// coincidences, keeping the first `per_setting` of each.
pub fn chsh_acquire(
    config: &NetworkConfig,
    pair: UserPair,
    per_setting: u64,
    seed: u64,
) -> Result<(CountTable, LossStats), ExperimentError> {
    config.check_pair(pair)?;
    let rate = expected_record_rate(config) + config.dark_count_prob_per_slot.powi(2);
    if rate <= 0.0 {
        return Err(ExperimentError::Invalid(format!("{pair} records no coincidences")));
    }
    let mut sim = SlotSimulator::new(config.clone(), derive_seed(seed, &format!("experiment.chsh.{pair}"), 0))?;
    let schedule = RoutingSchedule::single(pair, MAX_CHSH_SLOTS);
    let mut table = CountTable::new();
    for (a, b, _) in settings::CHSH_TERMS {
        table.insert(a, b, CountMatrix::default());
    }
    let mut loss = LossStats::default();
    let mut slot = 0u64;
    let lowest = |t: &CountTable| {
        settings::CHSH_TERMS
            .iter()
            .map(|&(a, b, _)| t.get(a, b).map_or(0, CountMatrix::total))
            .min()
            .unwrap_or(0)
    };
    while lowest(&table) < per_setting {
        if slot >= MAX_CHSH_SLOTS {
            return Err(ExperimentError::Invalid(format!(
                "{pair}: only {} coincidences per setting after {slot} slots",
                lowest(&table)
            )));
        }
        let missing = (per_setting - lowest(&table)) as f64;
        let chunk = (missing * 4.0 / rate * 1.05).ceil().clamp(1e3, 1e12) as u64;
        let end = (slot + chunk).min(MAX_CHSH_SLOTS);
        let (records, stats) = sim.run(&schedule, &SettingPolicy::Chsh, slot..end)?;
        loss.merge(&stats);
        for r in records {
            let cell = table.get_mut(r.theta_a, r.theta_b).expect("CHSH policy settings");
            if cell.total() < per_setting {
                cell.add(r.outcome_a, r.outcome_b);
            }
        }
        slot = end;
    }
    Ok((table, loss))
}

pub fn chsh_run(
    config: &NetworkConfig,
    pair: UserPair,
    per_setting: u64,
    resamples: usize,
    seed: u64,
) -> Result<(CountTable, ChshEstimate), ExperimentError> {
    let (table, _) = chsh_acquire(config, pair, per_setting, seed)?;
    let est = chsh_estimate(&table, resamples, derive_seed(seed, &format!("experiment.chsh_error.{pair}"), 0))?;
    Ok((table, est))
}
