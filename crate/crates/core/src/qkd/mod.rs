//! E91 post-processing: sifting, the CHSH check, QBER sampling, LDPC
//! reconciliation and Toeplitz privacy amplification.
//!
//! Bit strings are `Vec<u8>` holding one bit (0 or 1) per byte.

mod amplify;
mod hash;
mod keyfile;
mod ldpc;
mod session;
mod sift;

use thiserror::Error;

pub use amplify::{binary_entropy, final_length, privacy_amplify, toeplitz_hash, FinalKey, LeakAccounting};
pub use hash::{verification_hash, HashKey};
pub use keyfile::{bits_from_hex, bits_to_hex, key_file_text, read_key_file, write_key_file};
pub use ldpc::{decode_syndrome, ldpc_generate, ldpc_reconcile, DecodeOutcome, LdpcCode, ReconciliationResult};
pub use session::{run_qkd_session, PipelineReport, QkdParams, QkdSession};
pub use sift::{chsh_security_check, discard_sample, estimate_qber, sift, QberReport, SiftedKey};

use crate::analysis::AnalysisError;
use crate::network::NetworkError;

/// QBER at or above which the session aborts.
pub const QBER_ABORT: f64 = 0.11;
pub const DEFAULT_QBER_FRACTION: f64 = 0.2;
pub const DEFAULT_BLOCK_LEN: usize = 4096;
pub const DEFAULT_SECURITY_PARAM: usize = 300;
pub const MAX_BP_ITERATIONS: usize = 60;
/// Bits disclosed per block by the verification hash.
pub const HASH_BITS: usize = 64;

#[derive(Debug, Error)]
pub enum QkdError {
    #[error("QBER {gamma:.4} reached the {QBER_ABORT} abort threshold")]
    QberAbort { gamma: f64 },
    #[error("CHSH check failed: S = {s_value:.4} ± {std_error:.4} does not exceed 2 by two standard errors (sifted-key error rate {gamma:.4})")]
    ChshAbort { s_value: f64, std_error: f64, gamma: f64 },
    #[error("insufficient key: {0}")]
    InsufficientKey(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("LDPC construction failed: {0}")]
    Construction(String),
    #[error("no coincidences expected for this configuration")]
    NoSignal,
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}
