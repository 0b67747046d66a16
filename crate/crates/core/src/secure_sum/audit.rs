use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{compute_announcement, mask, PadKey, RingTopology, SecureSumError};

/// How pads are drawn in a simulated audit run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PadMode {
    Uniform,
    /// Every pad fixed to this value: a deliberately broken pad source.
    Constant(u64),
}

/// Announcements of `rounds` rounds without the transport, indexed
/// `[party][round]`. Pads are fresh per round and link unless `mode` is constant.
pub fn simulate_announcements(
    inputs: &[u64],
    n: u32,
    rounds: usize,
    mode: PadMode,
    seed: u64,
) -> Result<Vec<Vec<u64>>, SecureSumError> {
    let names: Vec<String> = (0..inputs.len()).map(|i| format!("P{i}")).collect();
    let ring = RingTopology::new(names)?;
    let m = mask::<u64>(n)?;
    let mut rng = crate::rng::stream(seed, "secure_sum.audit_pads", 0);
    let mut out = vec![Vec::with_capacity(rounds); inputs.len()];
    let mut link = vec![0u64; inputs.len()];
    for round in 0..rounds {
        for pad in link.iter_mut() {
            *pad = match mode {
                PadMode::Uniform => rng.random::<u64>() & m,
                PadMode::Constant(c) => c & m,
            };
        }
        for (i, &v) in inputs.iter().enumerate() {
            let mut next = PadKey::new(link[i], n)?;
            let mut prev = PadKey::new(link[ring.prev(i)], n)?;
            let a = compute_announcement(&ring.parties()[i], round as u64, v, &mut next, &mut prev, n)?;
            out[i].push(a.x);
        }
    }
    Ok(out)
}

fn p_value(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).expect("positive degrees of freedom").sf(stat)
}

/// Pearson statistic and p-value of `counts` against a uniform distribution.
pub fn chi_square_uniform(counts: &[u64]) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    if total == 0 || counts.len() < 2 {
        return (0.0, 1.0);
    }
    let expected = total as f64 / counts.len() as f64;
    let stat = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    (stat, p_value(stat, counts.len() - 1))
}

/// Pearson homogeneity test of two histograms over the same bins.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len(), "histograms over the same bins");
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let total = na + nb;
    if na == 0.0 || nb == 0.0 {
        return (0.0, 1.0);
    }
    let mut stat = 0.0;
    let mut bins = 0;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        bins += 1;
        let (ea, eb) = (na * col / total, nb * col / total);
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    (stat, p_value(stat, bins.max(1) - 1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartyAudit {
    pub uniformity_p_first: f64,
    pub uniformity_p_second: f64,
    pub two_sample_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub bits: u32,
    pub rounds: (usize, usize),
    pub parties: Vec<PartyAudit>,
}

impl AuditReport {
    pub fn min_p(&self) -> f64 {
        self.parties
            .iter()
            .flat_map(|p| [p.uniformity_p_first, p.uniformity_p_second, p.two_sample_p])
            .fold(1.0, f64::min)
    }
}

fn histogram(xs: &[u64], n: u32) -> Vec<u64> {
    let mut h = vec![0u64; 1 << n];
    for &x in xs {
        h[x as usize] += 1;
    }
    h
}

/// Per-party uniformity of the announcements under two input vectors, and
/// the two-sample test between them. Inputs are indexed `[party][round]`.
pub fn privacy_audit(first: &[Vec<u64>], second: &[Vec<u64>], n: u32) -> Result<AuditReport, SecureSumError> {
    if n == 0 || n > 12 {
        return Err(SecureSumError::BadWidth(n));
    }
    if first.len() != second.len() {
        return Err(SecureSumError::Violation("audit runs have different party counts".into()));
    }
    let limit = 1u64 << n;
    let mut parties = Vec::with_capacity(first.len());
    for (a, b) in first.iter().zip(second) {
        if let Some(x) = a.iter().chain(b).find(|&&x| x >= limit) {
            return Err(SecureSumError::OutOfRange {
                value: x.to_string(),
                bits: n,
            });
        }
        let (ha, hb) = (histogram(a, n), histogram(b, n));
        parties.push(PartyAudit {
            uniformity_p_first: chi_square_uniform(&ha).1,
            uniformity_p_second: chi_square_uniform(&hb).1,
            two_sample_p: chi_square_two_sample(&ha, &hb).1,
        });
    }
    Ok(AuditReport {
        bits: n,
        rounds: (
            first.first().map_or(0, Vec::len),
            second.first().map_or(0, Vec::len),
        ),
        parties,
    })
}
