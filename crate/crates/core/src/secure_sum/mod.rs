//! Ring secure-sum over pairwise one-time pads.
//!
//! Party `i` announces `X_i = v_i + R(i, i+1) − R(i−1, i) mod 2^n`, where
//! `R(i, j)` is the pad shared by ring neighbours `i` and `j`. Every pad is
//! added once and subtracted once, so `Σ X_i = Σ v_i mod 2^n` while each
//! `X_i` alone is uniform. Inputs whose true sum reaches `2^n` wrap modulo
//! `2^n`. Parties are assumed not to collude.

mod audit;
mod keys;
mod party;
mod protocol;

use std::collections::BTreeSet;
use std::fmt::{Debug, Display};

use num_traits::{PrimInt, Unsigned, WrappingAdd, WrappingSub};
use thiserror::Error;

pub use audit::{chi_square_two_sample, chi_square_uniform, privacy_audit, simulate_announcements, AuditReport, PartyAudit, PadMode};
pub use keys::{FileKeys, KeySource, QkdKeys, SeededKeys};
pub use party::{Party, PartyState};
pub use protocol::{run_protocol, sum_wraps, ProtocolRun, TransportMode};

use crate::qkd::QkdError;
use crate::transport::{NodeError, TransportError};

pub const DEFAULT_BITS: u32 = 25;

/// Unsigned machine word holding values of `Z_{2^n}`.
pub trait Word: PrimInt + Unsigned + WrappingAdd + WrappingSub + Debug + Display + Send + Sync + 'static {
    const BITS: u32;
}

impl Word for u8 {
    const BITS: u32 = 8;
}
impl Word for u16 {
    const BITS: u32 = 16;
}
impl Word for u32 {
    const BITS: u32 = 32;
}
impl Word for u64 {
    const BITS: u32 = 64;
}

#[derive(Debug, Error)]
pub enum SecureSumError {
    #[error("bit width {0} not supported by this word size")]
    BadWidth(u32),
    #[error("value {value} does not fit in {bits} bits")]
    OutOfRange { value: String, bits: u32 },
    #[error("key exhausted: need bits {offset}..{end}, have {len}; run a fresh key distribution")]
    KeyExhausted { offset: usize, end: usize, len: usize },
    #[error("pad reuse: one-time pad violated at key bits {offset}..{end}")]
    PadReuse { offset: usize, end: usize },
    #[error("pad reuse: this pad was already consumed")]
    PadConsumed,
    #[error("protocol violation: {0}")]
    Violation(String),
    #[error("invalid ring: {0}")]
    BadRing(String),
    #[error("parties disagree on the sum in round {0}")]
    Disagreement(u64),
    #[error("key source: {0}")]
    KeySource(String),
    #[error(transparent)]
    Qkd(#[from] QkdError),
    #[error(transparent)]
    Node(#[from] NodeError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// `2^n − 1` as a word.
pub fn mask<W: Word>(n: u32) -> Result<W, SecureSumError> {
    if n == 0 || n > W::BITS {
        return Err(SecureSumError::BadWidth(n));
    }
    Ok(if n == W::BITS { W::max_value() } else { (W::one() << n as usize) - W::one() })
}

fn check_fits<W: Word>(value: W, n: u32) -> Result<(), SecureSumError> {
    if value > mask::<W>(n)? {
        return Err(SecureSumError::OutOfRange {
            value: value.to_string(),
            bits: n,
        });
    }
    Ok(())
}

/// A single-use pad in `[0, 2^n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadKey<W> {
    value: W,
    bit_width: u32,
    consumed: bool,
}

impl<W: Word> PadKey<W> {
    pub fn new(value: W, bit_width: u32) -> Result<Self, SecureSumError> {
        check_fits(value, bit_width)?;
        Ok(PadKey {
            value,
            bit_width,
            consumed: false,
        })
    }

    pub fn value(&self) -> W {
        self.value
    }

    pub fn bit_width(&self) -> u32 {
        self.bit_width
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }
}

/// Key material shared with one neighbour, with a record of consumed bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyBuffer {
    bits: Vec<u8>,
    consumed: Vec<bool>,
}

impl KeyBuffer {
    pub fn new(bits: Vec<u8>) -> Self {
        let consumed = vec![false; bits.len()];
        KeyBuffer { bits, consumed }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn unconsumed(&self) -> usize {
        self.consumed.iter().filter(|c| !**c).count()
    }
}

/// Reads bits `[offset, offset + n)` as a big-endian integer and marks them consumed.
pub fn derive_pad<W: Word>(key: &mut KeyBuffer, n: u32, offset: usize) -> Result<PadKey<W>, SecureSumError> {
    mask::<W>(n)?;
    let end = offset + n as usize;
    if end > key.len() {
        return Err(SecureSumError::KeyExhausted {
            offset,
            end,
            len: key.len(),
        });
    }
    if key.consumed[offset..end].iter().any(|&c| c) {
        return Err(SecureSumError::PadReuse { offset, end });
    }
    let value = key.bits[offset..end]
        .iter()
        .fold(W::zero(), |acc, &b| (acc << 1) | if b & 1 == 1 { W::one() } else { W::zero() });
    key.consumed[offset..end].iter_mut().for_each(|c| *c = true);
    PadKey::new(value, n)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Announcement<W> {
    pub party: String,
    pub round: u64,
    pub x: W,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SumResult<W> {
    pub round: u64,
    pub t: W,
}

/// `x = v + pad_next − pad_prev mod 2^n`; consumes both pads.
pub fn compute_announcement<W: Word>(
    party: &str,
    round: u64,
    v: W,
    pad_next: &mut PadKey<W>,
    pad_prev: &mut PadKey<W>,
    n: u32,
) -> Result<Announcement<W>, SecureSumError> {
    let m = mask::<W>(n)?;
    check_fits(v, n)?;
    for pad in [&*pad_next, &*pad_prev] {
        if pad.consumed {
            return Err(SecureSumError::PadConsumed);
        }
        if pad.bit_width != n {
            return Err(SecureSumError::BadWidth(pad.bit_width));
        }
    }
    pad_next.consumed = true;
    pad_prev.consumed = true;
    let x = v.wrapping_add(&pad_next.value).wrapping_sub(&pad_prev.value) & m;
    Ok(Announcement {
        party: party.to_string(),
        round,
        x,
    })
}

/// `t = Σ x mod 2^n` over exactly one announcement per ring member.
pub fn aggregate<W: Word>(
    announcements: &[Announcement<W>],
    ring: &RingTopology,
    n: u32,
) -> Result<SumResult<W>, SecureSumError> {
    let m = mask::<W>(n)?;
    let round = announcements
        .first()
        .map(|a| a.round)
        .ok_or_else(|| SecureSumError::Violation("no announcements".into()))?;
    let mut seen = BTreeSet::new();
    let mut t = W::zero();
    for a in announcements {
        if a.round != round {
            return Err(SecureSumError::Violation(format!("mixed rounds {round} and {}", a.round)));
        }
        if ring.index_of(&a.party).is_none() {
            return Err(SecureSumError::Violation(format!("unknown party {}", a.party)));
        }
        if !seen.insert(a.party.as_str()) {
            return Err(SecureSumError::Violation(format!("duplicate announcement from {}", a.party)));
        }
        check_fits(a.x, n)?;
        t = t.wrapping_add(&a.x) & m;
    }
    if seen.len() != ring.len() {
        let missing: Vec<&str> = ring.parties().iter().map(String::as_str).filter(|p| !seen.contains(p)).collect();
        return Err(SecureSumError::Violation(format!("missing announcements from {}", missing.join(","))));
    }
    Ok(SumResult { round, t })
}

/// Parties in ring order; party `i` shares a pad with `i − 1` and `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingTopology {
    parties: Vec<String>,
}

impl RingTopology {
    pub fn new(parties: Vec<String>) -> Result<Self, SecureSumError> {
        if parties.len() < 3 {
            return Err(SecureSumError::BadRing(format!("{} parties, need at least 3", parties.len())));
        }
        let distinct: BTreeSet<&String> = parties.iter().collect();
        if distinct.len() != parties.len() {
            return Err(SecureSumError::BadRing("party names repeat".into()));
        }
        if let Some(p) = parties.iter().find(|p| p.is_empty() || p.chars().any(|c| c.is_whitespace() || c == '=')) {
            return Err(SecureSumError::BadRing(format!("party name {p:?}")));
        }
        Ok(RingTopology { parties })
    }

    /// A1, B1, A2, B2.
    pub fn four_party() -> Self {
        RingTopology {
            parties: ["A1", "B1", "A2", "B2"].map(String::from).to_vec(),
        }
    }

    pub fn parties(&self) -> &[String] {
        &self.parties
    }

    pub fn len(&self) -> usize {
        self.parties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parties.is_empty()
    }

    pub fn index_of(&self, party: &str) -> Option<usize> {
        self.parties.iter().position(|p| p == party)
    }

    pub fn next(&self, i: usize) -> usize {
        (i + 1) % self.parties.len()
    }

    pub fn prev(&self, i: usize) -> usize {
        (i + self.parties.len() - 1) % self.parties.len()
    }

    /// `(i, i + 1)` for every `i`, the last one wrapping to 0.
    pub fn links(&self) -> Vec<(usize, usize)> {
        (0..self.len()).map(|i| (i, self.next(i))).collect()
    }
}
