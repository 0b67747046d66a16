use rand::seq::index;

use super::{QkdError, QBER_ABORT};
use crate::analysis::{chsh_estimate, ChshEstimate, CountTable};
use crate::angle::settings;
use crate::network::CoincidenceRecord;

/// Key bits together with the slots they came from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SiftedKey {
    pub bits: Vec<u8>,
    pub source_slots: Vec<u64>,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn truncate(&mut self, len: usize) {
        self.bits.truncate(len);
        self.source_slots.truncate(len);
    }
}

/// Keeps records with `θa = θb ∈ {22.5°, 45°}`. Under the outcome convention
/// matched settings already agree, so neither side flips bits.
pub fn sift(records: &[CoincidenceRecord]) -> (SiftedKey, SiftedKey) {
    let mut a = SiftedKey::default();
    let mut b = SiftedKey::default();
    for r in records {
        if r.theta_a == r.theta_b && settings::KEY_SETTINGS.contains(&r.theta_a) {
            a.bits.push(r.outcome_a);
            a.source_slots.push(r.slot);
            b.bits.push(r.outcome_b);
            b.source_slots.push(r.slot);
        }
    }
    (a, b)
}

/// CHSH estimate on the records taken at the four CHSH setting pairs. The
/// check passes when `estimate.violates(2.0)`.
pub fn chsh_security_check(
    records: &[CoincidenceRecord],
    resamples: usize,
    seed: u64,
) -> Result<ChshEstimate, QkdError> {
    let table = CountTable::from_records(records).chsh_subset();
    Ok(chsh_estimate(&table, resamples, seed)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QberReport {
    pub gamma: f64,
    pub sample_size: usize,
    /// Sorted positions revealed for the estimate.
    pub disclosed_positions: Vec<usize>,
}

/// Discloses `⌈fraction·len⌉` uniformly chosen positions and measures the
/// disagreement rate there.
pub fn estimate_qber(
    key_a: &SiftedKey,
    key_b: &SiftedKey,
    fraction: f64,
    seed: u64,
) -> Result<QberReport, QkdError> {
    if key_a.len() != key_b.len() {
        return Err(QkdError::Invalid(format!(
            "sifted keys differ in length ({} vs {})",
            key_a.len(),
            key_b.len()
        )));
    }
    if key_a.len() < 50 {
        return Err(QkdError::InsufficientKey(format!("{} sifted bits, need at least 50", key_a.len())));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(QkdError::Invalid(format!("sample fraction {fraction}")));
    }
    let len = key_a.len();
    let k = ((fraction * len as f64).ceil() as usize).min(len);
    let mut rng = crate::rng::stream(seed, "qkd.qber_sample", 0);
    let mut positions = index::sample(&mut rng, len, k).into_vec();
    positions.sort_unstable();
    let errors = positions.iter().filter(|&&i| key_a.bits[i] != key_b.bits[i]).count();
    let gamma = errors as f64 / k as f64;
    if gamma >= QBER_ABORT {
        return Err(QkdError::QberAbort { gamma });
    }
    Ok(QberReport {
        gamma,
        sample_size: k,
        disclosed_positions: positions,
    })
}

/// The key with the disclosed sample positions removed.
pub fn discard_sample(key: &SiftedKey, report: &QberReport) -> SiftedKey {
    let mut out = SiftedKey::default();
    let mut disclosed = report.disclosed_positions.iter().peekable();
    for (i, (&bit, &slot)) in key.bits.iter().zip(&key.source_slots).enumerate() {
        if disclosed.peek() == Some(&&i) {
            disclosed.next();
            continue;
        }
        out.bits.push(bit);
        out.source_slots.push(slot);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::Angle;
    use crate::network::UserPair;

    fn record(slot: u64, a: f64, b: f64, oa: u8, ob: u8) -> CoincidenceRecord {
        CoincidenceRecord {
            slot,
            pair: UserPair::ports(1, 1),
            theta_a: Angle::from_degrees(a),
            theta_b: Angle::from_degrees(b),
            outcome_a: oa,
            outcome_b: ob,
        }
    }

    fn key(bits: Vec<u8>) -> SiftedKey {
        let source_slots = (0..bits.len() as u64).collect();
        SiftedKey { bits, source_slots }
    }

    #[test]
    fn sift_keeps_only_matched_key_settings() {
        let recs = [
            record(1, 0.0, 22.5, 0, 0),
            record(2, 22.5, 22.5, 1, 1),
            record(3, 45.0, 45.0, 0, 1),
            record(4, 45.0, 67.5, 1, 1),
            record(5, 0.0, 0.0, 0, 0),
        ];
        let (a, b) = sift(&recs);
        assert_eq!(a.source_slots, vec![2, 3]);
        assert_eq!(a.source_slots, b.source_slots);
        assert_eq!(a.bits, vec![1, 0]);
        assert_eq!(b.bits, vec![1, 1]);
    }

    #[test]
    fn qber_extremes() {
        let bits: Vec<u8> = (0..1000).map(|i| (i * 7 % 3 == 0) as u8).collect();
        let a = key(bits.clone());
        let r = estimate_qber(&a, &a, 0.2, 1).unwrap();
        assert_eq!(r.gamma, 0.0);
        assert_eq!(r.sample_size, 200);
        assert_eq!(r.disclosed_positions.len(), r.sample_size);

        let flipped = key(bits.iter().map(|b| b ^ 1).collect());
        match estimate_qber(&a, &flipped, 0.2, 1) {
            Err(QkdError::QberAbort { gamma }) => assert_eq!(gamma, 1.0),
            other => panic!("expected abort, got {other:?}"),
        }
        assert!(estimate_qber(&key(vec![0; 49]), &key(vec![0; 49]), 0.2, 1).is_err());
    }

    #[test]
    fn discarding_removes_exactly_the_sample() {
        let a = key((0..500).map(|i| (i % 2) as u8).collect());
        let r = estimate_qber(&a, &a, 0.2, 9).unwrap();
        let rest = discard_sample(&a, &r);
        assert_eq!(rest.len(), 400);
        for slot in &rest.source_slots {
            assert!(r.disclosed_positions.binary_search(&(*slot as usize)).is_err());
        }
    }
}
