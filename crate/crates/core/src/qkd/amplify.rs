use rand::{Rng, RngCore};

use super::QkdError;

/// Disclosed bits charged against the reconciled key.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LeakAccounting {
    pub syndrome_bits: usize,
    pub hash_bits: usize,
    /// `⌈n·h2(γ)⌉`.
    pub entropy_bits: usize,
}

impl LeakAccounting {
    pub fn reconciliation(&self) -> usize {
        self.syndrome_bits + self.hash_bits
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalKey {
    pub bits: Vec<u8>,
    pub security_param: usize,
    pub leak_accounting: LeakAccounting,
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// `n − leak − ⌈n·h2(γ)⌉ − s`, or an error when that is not positive.
pub fn final_length(n: usize, leak_bits: usize, gamma: f64, s: usize) -> Result<usize, QkdError> {
    let entropy = (n as f64 * binary_entropy(gamma)).ceil() as usize;
    let spent = leak_bits + entropy + s;
    if n <= spent {
        return Err(QkdError::InsufficientKey(format!(
            "{n} reconciled bits cannot cover {leak_bits} leaked + {entropy} entropy + {s} security bits"
        )));
    }
    Ok(n - spent)
}

/// `T·key` over GF(2) for an `m × n` Toeplitz matrix whose `m + n − 1`
/// defining bits are drawn from `rng`.
pub fn toeplitz_hash<R: RngCore + ?Sized>(key: &[u8], m: usize, rng: &mut R) -> Vec<u8> {
    let n = key.len();
    if m == 0 || n == 0 {
        return vec![0; m];
    }
    let diag: Vec<u8> = (0..m + n - 1).map(|_| u8::from(rng.random::<bool>())).collect();
    // Row i has T[i][j] = diag[i + n − 1 − j]; against the reversed key it is a sliding window.
    let reversed: Vec<u8> = key.iter().rev().copied().collect();
    (0..m)
        .map(|i| {
            diag[i..i + n]
                .iter()
                .zip(&reversed)
                .fold(0u8, |acc, (t, x)| acc ^ (t & x))
        })
        .collect()
}

pub fn privacy_amplify(
    key: &[u8],
    leak: LeakAccounting,
    gamma: f64,
    s: usize,
    seed: u64,
) -> Result<FinalKey, QkdError> {
    let n = key.len();
    if n < leak.reconciliation() + s {
        return Err(QkdError::InsufficientKey(format!(
            "{n} bits cannot cover {} leaked + {s} security bits",
            leak.reconciliation()
        )));
    }
    let m = final_length(n, leak.reconciliation(), gamma, s)?;
    let mut rng = crate::rng::stream(seed, "qkd.toeplitz", 0);
    let bits = toeplitz_hash(key, m, &mut rng);
    Ok(FinalKey {
        bits,
        security_param: s,
        leak_accounting: LeakAccounting {
            entropy_bits: (n as f64 * binary_entropy(gamma)).ceil() as usize,
            ..leak
        },
    })
}
