//! Estimators for the reported quantities: correlations, fringe
//! visibilities, the fidelity bound and the CHSH value with Poissonian
//! error bars.

mod bootstrap;
mod csvio;
mod fit;

use std::collections::BTreeMap;

use thiserror::Error;

pub use bootstrap::poisson_bootstrap;
pub use csvio::{read_count_table, read_fringe, write_count_table, write_fringe};
pub use fit::{fit_fringe, raw_visibility, visibility, FringeFit};

use crate::angle::{settings, Angle};
use crate::network::{Basis, CoincidenceRecord};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no counts to estimate from")]
    Empty,
    #[error("fringe curve needs at least 5 distinct angles spanning 180° of 2θ (got {points} angles over {span_deg}° of θ)")]
    ShortCurve { points: usize, span_deg: f64 },
    #[error("sinusoidal fit failed: {0}")]
    FitFailure(String),
    #[error("missing or thin data for setting ({theta_a}°, {theta_b}°): {count} counts")]
    Incomplete {
        theta_a: Angle,
        theta_b: Angle,
        count: u64,
    },
    #[error("bootstrap needs at least 100 resamples, got {0}")]
    TooFewResamples(usize),
    #[error("visibility {0} outside [0, 1]")]
    BadVisibility(f64),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("CSV row {row}: {msg}")]
    CsvField { row: usize, msg: String },
}

/// Coincidences at one setting pair, `n[outcome_a][outcome_b]` with outcome 0 meaning value +1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CountMatrix {
    pub n: [[u64; 2]; 2],
}

impl CountMatrix {
    pub fn new(n_pp: u64, n_pm: u64, n_mp: u64, n_mm: u64) -> Self {
        CountMatrix {
            n: [[n_pp, n_pm], [n_mp, n_mm]],
        }
    }

    pub fn total(&self) -> u64 {
        self.n.iter().flatten().sum()
    }

    /// Coincidences with equal values.
    pub fn same(&self) -> u64 {
        self.n[0][0] + self.n[1][1]
    }

    pub fn diff(&self) -> u64 {
        self.n[0][1] + self.n[1][0]
    }

    pub fn add(&mut self, outcome_a: u8, outcome_b: u8) {
        self.n[usize::from(outcome_a & 1)][usize::from(outcome_b & 1)] += 1;
    }
}

/// Count matrices keyed by `(θa, θb)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountTable {
    cells: BTreeMap<(Angle, Angle), CountMatrix>,
}

impl CountTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records<'a, I>(records: I) -> Self
    where
        I: IntoIterator<Item = &'a CoincidenceRecord>,
    {
        let mut table = CountTable::new();
        for r in records {
            table
                .cells
                .entry((r.theta_a, r.theta_b))
                .or_default()
                .add(r.outcome_a, r.outcome_b);
        }
        table
    }

    pub fn insert(&mut self, theta_a: Angle, theta_b: Angle, counts: CountMatrix) {
        self.cells.insert((theta_a, theta_b), counts);
    }

    pub fn get(&self, theta_a: Angle, theta_b: Angle) -> Option<&CountMatrix> {
        self.cells.get(&(theta_a, theta_b))
    }

    pub fn get_mut(&mut self, theta_a: Angle, theta_b: Angle) -> Option<&mut CountMatrix> {
        self.cells.get_mut(&(theta_a, theta_b))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Angle, Angle), &CountMatrix)> {
        self.cells.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&(Angle, Angle), &mut CountMatrix)> {
        self.cells.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.cells.values().map(CountMatrix::total).sum()
    }

    /// Only the four CHSH setting pairs.
    pub fn chsh_subset(&self) -> CountTable {
        let mut out = CountTable::new();
        for (a, b, _) in settings::CHSH_TERMS {
            if let Some(c) = self.get(a, b) {
                out.insert(a, b, *c);
            }
        }
        out
    }
}

/// `(N_same − N_diff) / N_total`.
pub fn correlation(counts: &CountMatrix) -> Result<f64, AnalysisError> {
    let total = counts.total();
    if total == 0 {
        return Err(AnalysisError::Empty);
    }
    Ok((counts.same() as f64 - counts.diff() as f64) / total as f64)
}

/// Coincidence counts of one detector pair as a function of Bob's angle.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeCurve {
    pub basis: Basis,
    pub points: Vec<(Angle, u64)>,
}

impl FringeCurve {
    /// Counts of the (+1, +1) detector pair at each of Bob's angles, restricted to
    /// records taken with Alice in `basis`.
    pub fn from_records<'a, I>(basis: Basis, records: I) -> Self
    where
        I: IntoIterator<Item = &'a CoincidenceRecord>,
    {
        let mut by_angle: BTreeMap<Angle, u64> = BTreeMap::new();
        for r in records {
            if r.theta_a != basis.alice_angle() {
                continue;
            }
            let cell = by_angle.entry(r.theta_b).or_insert(0);
            if r.outcome_a == 0 && r.outcome_b == 0 {
                *cell += 1;
            }
        }
        FringeCurve {
            basis,
            points: by_angle.into_iter().collect(),
        }
    }

    /// At least 5 distinct angles covering 180° of `2θ`.
    pub fn check(&self) -> Result<(), AnalysisError> {
        let mut angles: Vec<Angle> = self.points.iter().map(|p| p.0).collect();
        angles.sort();
        angles.dedup();
        let span = match (angles.first(), angles.last()) {
            (Some(lo), Some(hi)) => hi.degrees() - lo.degrees(),
            _ => 0.0,
        };
        if angles.len() < 5 || span < 90.0 {
            return Err(AnalysisError::ShortCurve {
                points: angles.len(),
                span_deg: span,
            });
        }
        Ok(())
    }
}

/// Lower bound `(V_z + V_x)/2` on the entanglement fidelity.
pub fn fidelity_bound(v_z: f64, v_x: f64) -> Result<f64, AnalysisError> {
    for v in [v_z, v_x] {
        if !(0.0..=1.0).contains(&v) {
            return Err(AnalysisError::BadVisibility(v));
        }
    }
    Ok((v_z + v_x) / 2.0)
}

/// Estimated CHSH value with its bootstrap standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshEstimate {
    pub s_value: f64,
    pub std_error: f64,
}

impl ChshEstimate {
    /// `S − k·σ > 2`.
    pub fn violates(&self, k_sigma: f64) -> bool {
        self.s_value - k_sigma * self.std_error > 2.0
    }
}

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const MIN_CHSH_COUNTS: u64 = 100;
pub const MIN_RESAMPLES: usize = 100;

/// `S = E(0°,22.5°) + E(45°,22.5°) + E(45°,67.5°) − E(0°,67.5°)` from the table.
pub fn chsh_value(table: &CountTable) -> Result<f64, AnalysisError> {
    let mut s = 0.0;
    for (a, b, sign) in settings::CHSH_TERMS {
        let counts = table.get(a, b).ok_or(AnalysisError::Incomplete {
            theta_a: a,
            theta_b: b,
            count: 0,
        })?;
        s += f64::from(sign) * correlation(counts)?;
    }
    Ok(s)
}

/// CHSH value with Poisson-bootstrap standard error. Each of the four
/// setting pairs needs at least [`MIN_CHSH_COUNTS`] coincidences.
pub fn chsh_estimate(
    table: &CountTable,
    resamples: usize,
    seed: u64,
) -> Result<ChshEstimate, AnalysisError> {
    for (a, b, _) in settings::CHSH_TERMS {
        let count = table.get(a, b).map_or(0, CountMatrix::total);
        if count < MIN_CHSH_COUNTS {
            return Err(AnalysisError::Incomplete {
                theta_a: a,
                theta_b: b,
                count,
            });
        }
    }
    let subset = table.chsh_subset();
    let s_value = chsh_value(&subset)?;
    let mut rng = crate::rng::stream(seed, "analysis.chsh_bootstrap", 0);
    let (_, std_error) = poisson_bootstrap(&subset, chsh_value, resamples, &mut rng)?;
    Ok(ChshEstimate { s_value, std_error })
}
