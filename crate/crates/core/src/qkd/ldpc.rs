use rand::Rng;

use super::{verification_hash, HashKey, QkdError, HASH_BITS, MAX_BP_ITERATIONS};
use crate::scalar::Real;

const COL_DEGREE: usize = 3;
const ROW_DEGREE: usize = 6;
const REPAIR_ROUNDS: usize = 200;
const SWAP_ATTEMPTS: usize = 64;

/// Regular (3,6) parity-check matrix. Variable `v` owns edges
/// `3v..3v+3`; `edge_check[e]` is the check of edge `e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdpcCode {
    n: usize,
    m: usize,
    seed: u64,
    edge_check: Vec<u32>,
    check_edges: Vec<[u32; ROW_DEGREE]>,
}

impl LdpcCode {
    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn check_count(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn var_checks(&self, v: usize) -> [usize; COL_DEGREE] {
        let e = COL_DEGREE * v;
        [0, 1, 2].map(|k| self.edge_check[e + k] as usize)
    }

    pub fn check_vars(&self, c: usize) -> [usize; ROW_DEGREE] {
        self.check_edges[c].map(|e| e as usize / COL_DEGREE)
    }

    /// `H·x` over GF(2).
    pub fn syndrome(&self, bits: &[u8]) -> Vec<u8> {
        self.check_edges
            .iter()
            .map(|edges| edges.iter().fold(0, |acc, &e| acc ^ bits[e as usize / COL_DEGREE]))
            .collect()
    }

    /// Number of distinct 4-cycles, counted over pairs of checks sharing two variables.
    pub fn four_cycles(&self) -> usize {
        let mut count = 0;
        for c1 in 0..self.m {
            let mut vars1 = self.check_vars(c1);
            vars1.sort_unstable();
            for c2 in c1 + 1..self.m {
                let shared = self
                    .check_vars(c2)
                    .iter()
                    .filter(|v| vars1.binary_search(v).is_ok())
                    .count();
                count += shared * shared.saturating_sub(1) / 2;
            }
        }
        count
    }
}

struct Builder {
    edge_check: Vec<u32>,
    check_edges: Vec<Vec<u32>>,
}

impl Builder {
    fn var(e: usize) -> usize {
        e / COL_DEGREE
    }

    fn checks_of(&self, v: usize) -> [u32; COL_DEGREE] {
        let e = COL_DEGREE * v;
        [self.edge_check[e], self.edge_check[e + 1], self.edge_check[e + 2]]
    }

    fn multi(&self, e: usize) -> bool {
        let c = self.edge_check[e];
        self.checks_of(Self::var(e)).iter().filter(|&&x| x == c).count() > 1
    }

    fn in_four_cycle(&self, e: usize) -> bool {
        let v = Self::var(e);
        let c = self.edge_check[e];
        let others: Vec<u32> = self.checks_of(v).into_iter().filter(|&x| x != c).collect();
        self.check_edges[c as usize].iter().any(|&e2| {
            let v2 = Self::var(e2 as usize);
            v2 != v && self.checks_of(v2).iter().any(|c2| others.contains(c2))
        })
    }

    fn swap(&mut self, e1: usize, e2: usize) {
        let (c1, c2) = (self.edge_check[e1], self.edge_check[e2]);
        for (e, from, to) in [(e1, c1, c2), (e2, c2, c1)] {
            let slot = self.check_edges[from as usize]
                .iter()
                .position(|&x| x as usize == e)
                .expect("edge listed under its check");
            self.check_edges[from as usize].swap_remove(slot);
            self.check_edges[to as usize].push(e as u32);
            self.edge_check[e] = to;
        }
    }

    /// Swaps the check endpoints of bad edges with random partners, keeping
    /// a swap only when neither edge is bad afterwards.
    fn repair<R: Rng>(&mut self, rng: &mut R, bad: impl Fn(&Builder, usize) -> bool) -> usize {
        let total = self.edge_check.len();
        for _ in 0..REPAIR_ROUNDS {
            let offenders: Vec<usize> = (0..total).filter(|&e| bad(self, e)).collect();
            if offenders.is_empty() {
                return 0;
            }
            for e in offenders {
                if !bad(self, e) {
                    continue;
                }
                for _ in 0..SWAP_ATTEMPTS {
                    let e2 = rng.random_range(0..total);
                    if self.edge_check[e2] == self.edge_check[e] || Self::var(e2) == Self::var(e) {
                        continue;
                    }
                    self.swap(e, e2);
                    if !bad(self, e) && !bad(self, e2) && !self.multi(e) && !self.multi(e2) {
                        break;
                    }
                    self.swap(e, e2);
                }
            }
        }
        (0..total).filter(|&e| bad(self, e)).count()
    }
}

/// Regular (3,6) code from a seeded random socket permutation, then local
/// edge swaps to remove parallel edges and 4-cycles.
///
/// Short blocks (below a few hundred bits) cannot be 4-cycle free; for
/// those the remaining cycles are left in place and [`LdpcCode::four_cycles`]
/// reports them. Parallel edges that survive the retry budget are an error.
pub fn ldpc_generate(block_len: usize, seed: u64) -> Result<LdpcCode, QkdError> {
    if block_len == 0 || block_len % 2 != 0 {
        return Err(QkdError::Invalid(format!("block length {block_len} must be positive and even")));
    }
    let n = block_len;
    let m = n * COL_DEGREE / ROW_DEGREE;
    let mut rng = crate::rng::stream(seed, "qkd.ldpc_generate", 0);

    let mut sockets: Vec<u32> = (0..m as u32).flat_map(|c| [c; ROW_DEGREE]).collect();
    rand::seq::SliceRandom::shuffle(sockets.as_mut_slice(), &mut rng);
    let mut check_edges = vec![Vec::with_capacity(ROW_DEGREE); m];
    for (e, &c) in sockets.iter().enumerate() {
        check_edges[c as usize].push(e as u32);
    }
    let mut b = Builder {
        edge_check: sockets,
        check_edges,
    };
    if b.repair(&mut rng, |b, e| b.multi(e)) > 0 {
        return Err(QkdError::Construction(format!("parallel edges remain at block length {n}")));
    }
    b.repair(&mut rng, |b, e| b.in_four_cycle(e));
    if (0..b.edge_check.len()).any(|e| b.multi(e)) {
        return Err(QkdError::Construction(format!("parallel edges remain at block length {n}")));
    }

    let check_edges = b
        .check_edges
        .into_iter()
        .map(|edges| edges.try_into().expect("row degree preserved by swaps"))
        .collect();
    Ok(LdpcCode {
        n,
        m,
        seed,
        edge_check: b.edge_check,
        check_edges,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub bits: Vec<u8>,
    pub iterations: usize,
    pub converged: bool,
}

/// Sum-product decoding of `received` toward the coset with the given syndrome.
pub fn decode_syndrome<T: Real>(
    code: &LdpcCode,
    received: &[u8],
    syndrome: &[u8],
    gamma: T,
    max_iterations: usize,
) -> DecodeOutcome {
    let one = T::one();
    let two = one + one;
    let prior = ((one - gamma) / gamma).ln();
    let channel: Vec<T> = received.iter().map(|&b| if b == 0 { prior } else { -prior }).collect();
    let mut decided = received.to_vec();
    if code.syndrome(&decided) == syndrome {
        return DecodeOutcome {
            bits: decided,
            iterations: 0,
            converged: true,
        };
    }

    let edges = code.edge_check.len();
    let mut v2c: Vec<T> = (0..edges).map(|e| channel[e / COL_DEGREE]).collect();
    let mut c2v = vec![T::zero(); edges];
    let limit = one - T::epsilon() * T::lit(4.0);
    let llr_cap = T::lit(60.0);
    let mut tanh = [T::zero(); ROW_DEGREE];

    for iter in 1..=max_iterations {
        for (c, row) in code.check_edges.iter().enumerate() {
            for (k, &e) in row.iter().enumerate() {
                tanh[k] = (v2c[e as usize] / two).tanh();
            }
            let sign = if syndrome[c] == 0 { one } else { -one };
            for (k, &e) in row.iter().enumerate() {
                let mut prod = sign;
                for (j, t) in tanh.iter().enumerate() {
                    if j != k {
                        prod *= *t;
                    }
                }
                c2v[e as usize] = two * prod.max(-limit).min(limit).atanh();
            }
        }
        for v in 0..code.n {
            let base = COL_DEGREE * v;
            let total = channel[v] + c2v[base] + c2v[base + 1] + c2v[base + 2];
            decided[v] = u8::from(total < T::zero());
            for k in 0..COL_DEGREE {
                v2c[base + k] = (total - c2v[base + k]).max(-llr_cap).min(llr_cap);
            }
        }
        if code.syndrome(&decided) == syndrome {
            return DecodeOutcome {
                bits: decided,
                iterations: iter,
                converged: true,
            };
        }
    }
    DecodeOutcome {
        bits: decided,
        iterations: max_iterations,
        converged: false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconciliationResult {
    pub corrected_bits: Vec<u8>,
    pub syndrome_bits_disclosed: usize,
    pub verified: bool,
    pub bp_iterations: usize,
}

/// Alice discloses her syndrome, Bob decodes, and the two compare a seeded
/// 64-bit hash of their blocks.
pub fn ldpc_reconcile(
    alice: &[u8],
    bob: &[u8],
    code: &LdpcCode,
    gamma_prior: f64,
    hash_key: &HashKey,
) -> Result<ReconciliationResult, QkdError> {
    if alice.len() != code.n || bob.len() != code.n {
        return Err(QkdError::Invalid(format!(
            "blocks of {} and {} bits for a code of length {}",
            alice.len(),
            bob.len(),
            code.n
        )));
    }
    if !(gamma_prior > 0.0 && gamma_prior < 0.5) {
        return Err(QkdError::Invalid(format!("channel prior {gamma_prior} outside (0, 0.5)")));
    }
    let syndrome = code.syndrome(alice);
    let out = decode_syndrome(code, bob, &syndrome, gamma_prior, MAX_BP_ITERATIONS);
    let verified = out.converged && verification_hash(hash_key, alice) == verification_hash(hash_key, &out.bits);
    Ok(ReconciliationResult {
        corrected_bits: out.bits,
        syndrome_bits_disclosed: code.m + HASH_BITS,
        verified,
        bp_iterations: out.iterations,
    })
}
