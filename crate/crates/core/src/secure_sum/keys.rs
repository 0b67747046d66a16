use std::path::PathBuf;

use rand::Rng;

use super::SecureSumError;
use crate::network::{EndUser, NetworkConfig, Side, UserPair};
use crate::qkd::{read_key_file, run_qkd_session, PipelineReport, QkdParams};
use crate::rng::derive_seed;

/// Supplies the key shared by two ring neighbours, as each of them holds it.
pub trait KeySource {
    /// `(left's copy, right's copy)`, each at least `bits` long.
    fn link_key(&mut self, left: &str, right: &str, bits: usize) -> Result<(Vec<u8>, Vec<u8>), SecureSumError>;
}

/// Uniform pads from a seeded generator, identical on both ends.
#[derive(Debug, Clone)]
pub struct SeededKeys {
    pub seed: u64,
}

impl KeySource for SeededKeys {
    fn link_key(&mut self, left: &str, right: &str, bits: usize) -> Result<(Vec<u8>, Vec<u8>), SecureSumError> {
        let label = format!("secure_sum.pad.{left}.{right}");
        let mut rng = crate::rng::stream(self.seed, &label, 0);
        let key: Vec<u8> = (0..bits).map(|_| u8::from(rng.random::<bool>())).collect();
        Ok((key.clone(), key))
    }
}

/// Runs E91 sessions between the two neighbours until enough final key exists.
/// Each neighbour keeps its own copy; one must be on side A and the other on side B.
#[derive(Debug, Clone)]
pub struct QkdKeys {
    pub config: NetworkConfig,
    pub params: QkdParams,
    pub seed: u64,
    /// Report of every session run so far, labelled by pair.
    pub reports: Vec<PipelineReport>,
}

impl QkdKeys {
    pub fn new(config: NetworkConfig, params: QkdParams, seed: u64) -> Self {
        QkdKeys {
            config,
            params,
            seed,
            reports: Vec::new(),
        }
    }
}

const MAX_SESSIONS: u64 = 64;

impl KeySource for QkdKeys {
    fn link_key(&mut self, left: &str, right: &str, bits: usize) -> Result<(Vec<u8>, Vec<u8>), SecureSumError> {
        let parse = |s: &str| {
            s.parse::<EndUser>()
                .map_err(|e| SecureSumError::KeySource(format!("party {s} is not an end user: {e}")))
        };
        let (l, r) = (parse(left)?, parse(right)?);
        let (pair, left_is_alice) = match (l.side, r.side) {
            (Side::A, Side::B) => (UserPair::new(l, r), true),
            (Side::B, Side::A) => (UserPair::new(r, l), false),
            _ => {
                return Err(SecureSumError::KeySource(format!(
                    "{left} and {right} are on the same side and share no entangled pairs"
                )))
            }
        };
        let pair = pair.map_err(|e| SecureSumError::KeySource(e.to_string()))?;
        let (mut alice, mut bob) = (Vec::new(), Vec::new());
        let mut attempt = 0;
        while alice.len() < bits {
            if attempt == MAX_SESSIONS {
                return Err(SecureSumError::KeySource(format!(
                    "{pair}: only {} key bits after {MAX_SESSIONS} sessions",
                    alice.len()
                )));
            }
            let seed = derive_seed(self.seed, &format!("secure_sum.qkd.{pair}"), attempt);
            let session = run_qkd_session(pair, &self.config, &self.params, seed)?;
            alice.extend(session.alice.bits);
            bob.extend(session.bob.bits);
            self.reports.push(session.report);
            attempt += 1;
        }
        Ok(if left_is_alice { (alice, bob) } else { (bob, alice) })
    }
}

/// Pre-generated key files `<left>_<right>.key` in `dir`, in the format of
/// [`crate::qkd::write_key_file`]. Both neighbours read the same file.
#[derive(Debug, Clone)]
pub struct FileKeys {
    pub dir: PathBuf,
}

impl FileKeys {
    pub fn path(&self, left: &str, right: &str) -> PathBuf {
        self.dir.join(format!("{left}_{right}.key"))
    }
}

impl KeySource for FileKeys {
    fn link_key(&mut self, left: &str, right: &str, bits: usize) -> Result<(Vec<u8>, Vec<u8>), SecureSumError> {
        let path = self.path(left, right);
        let key = read_key_file(&path)?;
        if key.len() < bits {
            return Err(SecureSumError::KeyExhausted {
                offset: 0,
                end: bits,
                len: key.len(),
            });
        }
        Ok((key.clone(), key))
    }
}
