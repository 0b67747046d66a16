use rand::Rng;

/// Random multipliers for the block verification hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashKey {
    seed: u64,
}

impl HashKey {
    pub fn from_seed(seed: u64) -> Self {
        HashKey { seed }
    }

    fn expand(&self, count: usize) -> Vec<u128> {
        let mut rng = crate::rng::stream(self.seed, "qkd.hash_key", 0);
        (0..count).map(|_| rng.random()).collect()
    }
}

/// Pair-multiply-shift hash of the packed bits: 64-bit words, 128-bit
/// multipliers, top 64 bits of the sum kept. The bit length is folded in
/// so blocks differing only in trailing zeros differ.
pub fn verification_hash(key: &HashKey, bits: &[u8]) -> u64 {
    let mut packed: Vec<u64> = bits
        .chunks(64)
        .map(|chunk| chunk.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b & 1)))
        .collect();
    packed.push(bits.len() as u64);
    if packed.len() % 2 == 1 {
        packed.push(0);
    }
    let k = key.expand(packed.len() + 1);
    let mut acc = k[packed.len()];
    for (i, pair) in packed.chunks(2).enumerate() {
        let x = u128::from(pair[0]).wrapping_add(k[2 * i]);
        let y = u128::from(pair[1]).wrapping_add(k[2 * i + 1]);
        acc = acc.wrapping_add(x.wrapping_mul(y));
    }
    (acc >> 64) as u64
}
