use std::fmt::Write as _;

use rayon::prelude::*;

use super::{
    discard_sample, estimate_qber, ldpc_generate, ldpc_reconcile, privacy_amplify, sift, FinalKey, HashKey,
    LeakAccounting, QkdError, ReconciliationResult, DEFAULT_BLOCK_LEN, DEFAULT_QBER_FRACTION,
    DEFAULT_SECURITY_PARAM,
};
use crate::analysis::{chsh_estimate, ChshEstimate, CountTable, DEFAULT_RESAMPLES};
use crate::format::sig6;
use crate::network::{expected_record_rate, LossStats, NetworkConfig, RoutingSchedule, SettingPolicy, SlotSimulator, UserPair};
use crate::rng::derive_seed;

/// Simulated slots beyond which a session gives up on reaching its target.
const MAX_SLOTS: u64 = 1 << 44;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QkdParams {
    pub target_sifted: usize,
    pub qber_fraction: f64,
    pub block_len: usize,
    pub security_param: usize,
    pub resamples: usize,
}

impl Default for QkdParams {
    fn default() -> Self {
        QkdParams {
            target_sifted: 12_000,
            qber_fraction: DEFAULT_QBER_FRACTION,
            block_len: DEFAULT_BLOCK_LEN,
            security_param: DEFAULT_SECURITY_PARAM,
            resamples: DEFAULT_RESAMPLES,
        }
    }
}

/// Bit counts at each stage of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub pair: UserPair,
    pub slots: u64,
    pub loss: LossStats,
    pub records: usize,
    pub chsh: ChshEstimate,
    /// Sifted bits kept (the sifted key is cut to the target length).
    pub sifted_bits: usize,
    pub sifted_available: usize,
    pub gamma: f64,
    pub qber_sample_bits: usize,
    pub post_sample_bits: usize,
    pub blocks_total: usize,
    pub blocks_ok: usize,
    /// Bits entering reconciliation, whole blocks only.
    pub reconciled_bits: usize,
    /// Bits of the blocks that passed verification.
    pub verified_bits: usize,
    pub leak: LeakAccounting,
    pub security_param: usize,
    pub final_len: usize,
}

impl PipelineReport {
    pub fn to_kv_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("pair", self.pair.to_string());
        kv("slots", self.slots.to_string());
        kv("pairs_generated", self.loss.pairs_generated.to_string());
        kv("records", self.records.to_string());
        kv("chsh_s", sig6(self.chsh.s_value));
        kv("chsh_std_error", sig6(self.chsh.std_error));
        kv("sifted_available", self.sifted_available.to_string());
        kv("sifted_bits", self.sifted_bits.to_string());
        kv("qber_gamma", sig6(self.gamma));
        kv("qber_sample_bits", self.qber_sample_bits.to_string());
        kv("post_sample_bits", self.post_sample_bits.to_string());
        kv("blocks_total", self.blocks_total.to_string());
        kv("blocks_ok", self.blocks_ok.to_string());
        kv("reconciled_bits", self.reconciled_bits.to_string());
        kv("verified_bits", self.verified_bits.to_string());
        kv("leak_syndrome_bits", self.leak.syndrome_bits.to_string());
        kv("leak_hash_bits", self.leak.hash_bits.to_string());
        kv("entropy_bits", self.leak.entropy_bits.to_string());
        kv("security_param", self.security_param.to_string());
        kv("final_len", self.final_len.to_string());
        kv("final_len_formula", "n - leak_ec - ceil(n*h2(gamma)) - s".to_string());
        s
    }

    pub fn to_csv(&self) -> String {
        let g = sig6(self.gamma);
        let s_val = sig6(self.chsh.s_value);
        let ok = self.blocks_ok.to_string();
        let fin = self.final_len.to_string();
        let rows: [(&str, usize, &str, &str, &str, &str); 7] = [
            ("records", self.records, "", &s_val, "", ""),
            ("sifted", self.sifted_bits, "", "", "", ""),
            ("qber_sample", self.qber_sample_bits, &g, "", "", ""),
            ("post_sample", self.post_sample_bits, &g, "", "", ""),
            ("reconciled", self.reconciled_bits, &g, "", "", ""),
            ("verified", self.verified_bits, &g, "", &ok, ""),
            ("final", self.final_len, &g, &s_val, &ok, &fin),
        ];
        let mut out = String::from("stage,bits,gamma,s_value,blocks_ok,final_len\n");
        for (stage, bits, gamma, s, blocks, fl) in rows {
            let _ = writeln!(out, "{stage},{bits},{gamma},{s},{blocks},{fl}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QkdSession {
    pub alice: FinalKey,
    pub bob: FinalKey,
    pub report: PipelineReport,
}

/// Runs E91 on `pair` until `target_sifted` matched-basis bits exist, then
/// checks CHSH, samples the QBER, reconciles whole blocks in parallel and
/// amplifies the verified bits.
pub fn run_qkd_session(
    pair: UserPair,
    config: &NetworkConfig,
    params: &QkdParams,
    seed: u64,
) -> Result<QkdSession, QkdError> {
    config.check_pair(pair)?;
    if params.target_sifted < 2 * params.block_len {
        return Err(QkdError::Invalid(format!(
            "target of {} sifted bits is below two blocks of {}",
            params.target_sifted, params.block_len
        )));
    }
    let rate = expected_record_rate(config);
    if rate <= 0.0 && config.dark_count_prob_per_slot <= 0.0 {
        return Err(QkdError::NoSignal);
    }

    let mut sim = SlotSimulator::new(config.clone(), derive_seed(seed, "qkd.slots", 0))?;
    let schedule = RoutingSchedule::single(pair, MAX_SLOTS);
    let per_slot = (rate + config.dark_count_prob_per_slot.powi(2)) * 2.0 / 9.0;
    let mut records = Vec::new();
    let mut loss = LossStats::default();
    let mut slot = 0u64;
    let mut sifted_count = 0usize;
    while sifted_count < params.target_sifted {
        if slot >= MAX_SLOTS {
            return Err(QkdError::InsufficientKey(format!(
                "only {sifted_count} sifted bits after {slot} slots"
            )));
        }
        let missing = (params.target_sifted - sifted_count) as f64;
        let chunk = ((missing / per_slot) * 1.02).ceil().clamp(1e3, 1e12) as u64;
        let end = (slot + chunk).min(MAX_SLOTS);
        let (recs, stats) = sim.run(&schedule, &SettingPolicy::E91, slot..end)?;
        loss.merge(&stats);
        records.extend(recs);
        slot = end;
        sifted_count = sift(&records).0.len();
    }

    let table = CountTable::from_records(&records).chsh_subset();
    let chsh = chsh_estimate(&table, params.resamples, derive_seed(seed, "qkd.chsh", 0))?;
    let (mut key_a, mut key_b) = sift(&records);
    if !chsh.violates(2.0) {
        // The session is over, so the whole sifted key may be compared.
        let errors = key_a.bits.iter().zip(&key_b.bits).filter(|(a, b)| a != b).count();
        return Err(QkdError::ChshAbort {
            s_value: chsh.s_value,
            std_error: chsh.std_error,
            gamma: errors as f64 / key_a.len().max(1) as f64,
        });
    }

    let sifted_available = key_a.len();
    key_a.truncate(params.target_sifted);
    key_b.truncate(params.target_sifted);
    let qber = estimate_qber(&key_a, &key_b, params.qber_fraction, derive_seed(seed, "qkd.qber", 0))?;
    let rest_a = discard_sample(&key_a, &qber);
    let rest_b = discard_sample(&key_b, &qber);

    let code = ldpc_generate(params.block_len, derive_seed(seed, "qkd.code", 0))?;
    let n = params.block_len;
    let blocks_total = rest_a.len() / n;
    let prior = qber.gamma.clamp(1e-3, 0.49);
    let results: Vec<ReconciliationResult> = (0..blocks_total)
        .into_par_iter()
        .map(|b| {
            let range = b * n..(b + 1) * n;
            let key = HashKey::from_seed(derive_seed(seed, "qkd.block_hash", b as u64));
            ldpc_reconcile(&rest_a.bits[range.clone()], &rest_b.bits[range], &code, prior, &key)
        })
        .collect::<Result<_, _>>()?;

    let mut rec_a = Vec::new();
    let mut rec_b = Vec::new();
    let mut leak = LeakAccounting::default();
    let mut blocks_ok = 0;
    for (b, r) in results.iter().enumerate() {
        if !r.verified {
            continue;
        }
        blocks_ok += 1;
        rec_a.extend_from_slice(&rest_a.bits[b * n..(b + 1) * n]);
        rec_b.extend_from_slice(&r.corrected_bits);
        leak.syndrome_bits += code.check_count();
        leak.hash_bits += r.syndrome_bits_disclosed - code.check_count();
    }
    if blocks_ok == 0 {
        return Err(QkdError::InsufficientKey("no reconciled block passed verification".into()));
    }

    let pa_seed = derive_seed(seed, "qkd.toeplitz", 0);
    let alice = privacy_amplify(&rec_a, leak, qber.gamma, params.security_param, pa_seed)?;
    let bob = privacy_amplify(&rec_b, leak, qber.gamma, params.security_param, pa_seed)?;

    let report = PipelineReport {
        pair,
        slots: slot,
        loss,
        records: records.len(),
        chsh,
        sifted_bits: key_a.len(),
        sifted_available,
        gamma: qber.gamma,
        qber_sample_bits: qber.sample_size,
        post_sample_bits: rest_a.len(),
        blocks_total,
        blocks_ok,
        reconciled_bits: blocks_total * n,
        verified_bits: rec_a.len(),
        leak: alice.leak_accounting,
        security_param: params.security_param,
        final_len: alice.bits.len(),
    };
    Ok(QkdSession { alice, bob, report })
}
