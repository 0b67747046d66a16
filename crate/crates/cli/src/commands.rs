use std::fmt::Write as _;

use eanet::analysis::{MIN_RESAMPLES, 
    fidelity_bound, fit_fringe, raw_visibility, write_count_table, write_fringe, ChshEstimate, FringeFit,
};
use eanet::experiment::{chsh_run, fringe_angles, fringe_scan};
use eanet::format::sig6;
use eanet::network::{Basis, NetworkConfig, UserPair};
use eanet::qkd::{run_qkd_session, key_file_text, QkdError, QkdParams, QkdSession};
use eanet::rng::derive_seed;
use eanet::secure_sum::{
    run_protocol, sum_wraps, KeySource, ProtocolRun, QkdKeys, RingTopology, SecureSumError, SeededKeys,
    TransportMode,
};

use crate::{
    parse_pair, BasisChoice, ChshArgs, CliError, FringeArgs, KeyChoice, OutDir, QkdArgs, SecureSumArgs,
    TransportChoice,
};

fn abort(e: impl std::fmt::Display) -> CliError {
    CliError::Abort(e.to_string())
}

pub(crate) struct FringeResult {
    pub fits: Vec<(Basis, FringeFit, f64)>,
    pub bound: Option<f64>,
}

/// Scans `pair` in each basis, writing `<prefix>fringe_<pair>_<basis>.csv`.
pub(crate) fn fringe_pair(
    pair: UserPair,
    bases: &[Basis],
    points: usize,
    pulses: u64,
    config: &NetworkConfig,
    seed: u64,
    dir: &mut OutDir,
    prefix: &str,
) -> Result<FringeResult, CliError> {
    if points < 5 {
        return Err(CliError::Usage(format!("a fringe needs at least 5 points, got {points}")));
    }
    let angles = fringe_angles(points);
    let mut fits = Vec::new();
    for &basis in bases {
        let (curve, _) = fringe_scan(config, pair, basis, &angles, pulses, seed).map_err(abort)?;
        let rel = format!("{prefix}fringe_{pair}_{}.csv", basis.label());
        if curve.points.iter().all(|p| p.1 == 0) {
            dir.write_str(&rel, "theta_b_deg,count\n")?;
            return Err(CliError::Abort(format!("{pair} {} basis: no coincidences recorded", basis.label())));
        }
        let mut buf = Vec::new();
        write_fringe(&curve, &mut buf).map_err(abort)?;
        dir.write_bytes(&rel, &buf)?;
        let fit = fit_fringe(&curve).map_err(abort)?;
        let raw = raw_visibility(&curve).map_err(abort)?;
        fits.push((basis, fit, raw));
    }
    let v = |b: Basis| fits.iter().find(|f| f.0 == b).map(|f| f.1.visibility.clamp(0.0, 1.0));
    let bound = match (v(Basis::Z), v(Basis::X)) {
        (Some(z), Some(x)) => Some(fidelity_bound(z, x).map_err(abort)?),
        _ => None,
    };
    Ok(FringeResult { fits, bound })
}

pub(crate) fn fringe_summary_rows(pair: UserPair, r: &FringeResult, out: &mut String) {
    for (basis, fit, raw) in &r.fits {
        let _ = writeln!(
            out,
            "{pair},{},{},{},{},{},{}",
            basis.label(),
            sig6(fit.visibility.clamp(0.0, 1.0)),
            sig6(*raw),
            sig6(fit.offset),
            sig6(fit.phase_rad.to_degrees()),
            r.bound.map(sig6).unwrap_or_default()
        );
    }
}

pub(crate) const FRINGE_SUMMARY_HEADER: &str = "pair,basis,visibility,raw_visibility,offset,phase_deg,fidelity_bound\n";

pub fn fringe(a: &FringeArgs, config: &NetworkConfig, seed: u64, dir: &mut OutDir) -> Result<String, CliError> {
    let pair = parse_pair(&a.pair, config)?;
    let bases: &[Basis] = match a.basis {
        BasisChoice::Z => &[Basis::Z],
        BasisChoice::X => &[Basis::X],
        BasisChoice::Both => &[Basis::Z, Basis::X],
    };
    let r = fringe_pair(pair, bases, a.points, a.pulses, config, seed, dir, "")?;
    let mut csv = String::from(FRINGE_SUMMARY_HEADER);
    fringe_summary_rows(pair, &r, &mut csv);
    dir.write_str(&format!("fringe_{pair}_summary.csv"), &csv)?;

    let mut s = String::new();
    for (basis, fit, _) in &r.fits {
        let _ = write!(s, "{pair} V_{}={} ", basis.label().to_lowercase(), sig6(fit.visibility.clamp(0.0, 1.0)));
    }
    if let Some(b) = r.bound {
        let _ = write!(s, "fidelity_bound={}", sig6(b));
    }
    Ok(s.trim_end().to_string() + "\n")
}

pub(crate) fn chsh_pair(
    pair: UserPair,
    samples: u64,
    resamples: usize,
    config: &NetworkConfig,
    seed: u64,
    dir: &mut OutDir,
    prefix: &str,
) -> Result<ChshEstimate, CliError> {
    if samples < 1000 {
        return Err(CliError::Usage(format!("need at least 1000 samples per setting, got {samples}")));
    }
    if resamples < MIN_RESAMPLES {
        return Err(CliError::Usage(format!("need at least {MIN_RESAMPLES} resamples, got {resamples}")));
    }
    let (table, est) = chsh_run(config, pair, samples, resamples, seed).map_err(abort)?;
    let mut buf = Vec::new();
    write_count_table(&table, &mut buf).map_err(abort)?;
    dir.write_bytes(&format!("{prefix}chsh_{pair}_counts.csv"), &buf)?;
    Ok(est)
}

pub(crate) const CHSH_SUMMARY_HEADER: &str = "pair,samples,s_value,std_error,violation\n";

pub(crate) fn chsh_summary_row(pair: UserPair, samples: u64, est: &ChshEstimate) -> String {
    format!(
        "{pair},{samples},{},{},{}\n",
        sig6(est.s_value),
        sig6(est.std_error),
        est.violates(2.0)
    )
}

pub fn chsh(a: &ChshArgs, config: &NetworkConfig, seed: u64, dir: &mut OutDir) -> Result<String, CliError> {
    let pair = parse_pair(&a.pair, config)?;
    let est = chsh_pair(pair, a.samples, a.resamples, config, seed, dir, "")?;
    let csv = String::from(CHSH_SUMMARY_HEADER) + &chsh_summary_row(pair, a.samples, &est);
    dir.write_str(&format!("chsh_{pair}_summary.csv"), &csv)?;
    Ok(format!(
        "{pair} S={} ± {} violation={}\n",
        sig6(est.s_value),
        sig6(est.std_error),
        if est.violates(2.0) { "yes" } else { "no" }
    ))
}

fn qkd_stage(e: &QkdError) -> &'static str {
    match e {
        QkdError::ChshAbort { .. } => "CHSH check",
        QkdError::QberAbort { .. } => "QBER estimation",
        QkdError::InsufficientKey(_) => "key accumulation",
        QkdError::Construction(_) => "LDPC construction",
        QkdError::NoSignal | QkdError::Network(_) => "simulation",
        QkdError::Analysis(_) => "analysis",
        QkdError::Invalid(_) => "setup",
    }
}

/// Seed of the session for `pair`, shared by `qkd` and `demo-paper`.
pub(crate) fn qkd_seed(seed: u64, pair: UserPair) -> u64 {
    derive_seed(seed, &format!("cli.qkd.{pair}"), 0)
}

pub(crate) fn qkd_pair(
    pair: UserPair,
    target_sifted: usize,
    config: &NetworkConfig,
    seed: u64,
    dir: &mut OutDir,
    prefix: &str,
) -> Result<QkdSession, CliError> {
    if target_sifted < 8192 {
        return Err(CliError::Usage(format!("target of {target_sifted} sifted bits is below 8192")));
    }
    let params = QkdParams {
        target_sifted,
        ..QkdParams::default()
    };
    let session = run_qkd_session(pair, config, &params, qkd_seed(seed, pair))
        .map_err(|e| CliError::Abort(format!("qkd {pair} at {}: {e}", qkd_stage(&e))))?;
    let r = &session.report;
    dir.write_str(&format!("{prefix}qkd_{pair}_report.csv"), &r.to_csv())?;
    dir.write_str(&format!("{prefix}qkd_{pair}_report.txt"), &r.to_kv_text())?;
    for (who, key) in [("alice", &session.alice), ("bob", &session.bob)] {
        dir.write_str(&format!("{prefix}qkd_{pair}_{who}.key"), &key_file_text(&key.bits))?;
    }
    Ok(session)
}

/// `|#1 − #0| / √n`, which is approximately standard normal for unbiased bits.
pub fn monobit_z(bits: &[u8]) -> f64 {
    if bits.is_empty() {
        return 0.0;
    }
    let ones = bits.iter().filter(|&&b| b == 1).count() as f64;
    let n = bits.len() as f64;
    (2.0 * ones - n).abs() / n.sqrt()
}

/// Two-sided 0.1% level.
pub const MONOBIT_Z_LIMIT: f64 = 3.29;

pub(crate) fn qkd_line(s: &QkdSession) -> String {
    let r = &s.report;
    format!(
        "{} sifted={} gamma={} post_sample={} blocks_ok={}/{} verified={} final={} keys_equal={} monobit_z={}\n",
        r.pair,
        r.sifted_bits,
        sig6(r.gamma),
        r.post_sample_bits,
        r.blocks_ok,
        r.blocks_total,
        r.verified_bits,
        r.final_len,
        s.alice.bits == s.bob.bits,
        sig6(monobit_z(&s.alice.bits))
    )
}

pub fn qkd(a: &QkdArgs, config: &NetworkConfig, seed: u64, dir: &mut OutDir) -> Result<String, CliError> {
    let pair = parse_pair(&a.pair, config)?;
    let session = qkd_pair(pair, a.target_sifted, config, seed, dir, "")?;
    Ok(qkd_line(&session))
}

pub(crate) fn transport_mode(t: TransportChoice) -> TransportMode {
    match t {
        TransportChoice::Lockstep => TransportMode::Lockstep,
        TransportChoice::Threads => TransportMode::Threads,
        TransportChoice::Tcp => TransportMode::Tcp,
    }
}

pub(crate) fn alternating_parties(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| format!("{}{}", if i % 2 == 0 { 'A' } else { 'B' }, i / 2 + 1))
        .collect()
}

pub(crate) fn secure_sum_error(e: SecureSumError) -> CliError {
    match e {
        SecureSumError::BadWidth(_) | SecureSumError::OutOfRange { .. } | SecureSumError::BadRing(_) => {
            CliError::Usage(e.to_string())
        }
        SecureSumError::Transport(t) => CliError::Io(t.to_string()),
        other => CliError::Abort(other.to_string()),
    }
}

/// Writes `<prefix>announcements.csv` and `<prefix>sums.csv`.
pub(crate) fn write_protocol_run(run: &ProtocolRun<u64>, dir: &mut OutDir, prefix: &str) -> Result<(), CliError> {
    let mut ann = String::from("round,party,x\n");
    for a in &run.announcements {
        let _ = writeln!(ann, "{},{},{}", a.round, a.party, a.x);
    }
    dir.write_str(&format!("{prefix}announcements.csv"), &ann)?;
    let mut sums = String::from("round,t\n");
    for s in &run.sums {
        let _ = writeln!(sums, "{},{}", s.round, s.t);
    }
    dir.write_str(&format!("{prefix}sums.csv"), &sums)?;
    Ok(())
}

pub(crate) fn protocol_line(inputs: &[u64], bits: u32, run: &ProtocolRun<u64>) -> String {
    let t: Vec<u64> = run.sums.iter().map(|s| s.t).collect();
    let constant = t.windows(2).all(|w| w[0] == w[1]);
    let mut s = format!(
        "secure-sum inputs={} bits={bits} rounds={} t={}",
        inputs.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
        t.len(),
        if constant {
            t.first().map(u64::to_string).unwrap_or_default()
        } else {
            "varies".into()
        }
    );
    if sum_wraps(inputs, bits) {
        s.push_str(" (wrapped modulo 2^bits)");
    }
    s.push('\n');
    s
}

pub(crate) fn wrap_warning(inputs: &[u64], bits: u32) {
    if sum_wraps(inputs, bits) {
        eprintln!("warning: the inputs sum to 2^{bits} or more; the result is the sum modulo 2^{bits}");
    }
}

pub fn secure_sum(a: &SecureSumArgs, config: &NetworkConfig, seed: u64, dir: &mut OutDir) -> Result<String, CliError> {
    if a.inputs.len() < 3 {
        return Err(CliError::Usage(format!("need at least 3 inputs, got {}", a.inputs.len())));
    }
    if !(1..=64).contains(&a.bits) {
        return Err(CliError::Usage(format!("bits must be in 1..=64, got {}", a.bits)));
    }
    let parties = if a.parties.is_empty() {
        alternating_parties(a.inputs.len())
    } else {
        a.parties.clone()
    };
    if parties.len() != a.inputs.len() {
        return Err(CliError::Usage(format!("{} parties for {} inputs", parties.len(), a.inputs.len())));
    }
    let ring = RingTopology::new(parties).map_err(secure_sum_error)?;
    wrap_warning(&a.inputs, a.bits);

    let go = |keys: &mut dyn KeySource| {
        run_protocol(&ring, &a.inputs, a.bits, a.rounds, keys, transport_mode(a.transport), "cli")
            .map_err(secure_sum_error)
    };
    let run = match a.keys {
        KeyChoice::Qkd => {
            if ring.len() % 2 == 1 {
                return Err(CliError::Usage(
                    "QKD keys need an even ring alternating A- and B-side users".into(),
                ));
            }
            let mut keys = QkdKeys::new(config.clone(), QkdParams::default(), seed);
            let run = go(&mut keys)?;
            let mut csv = String::from("pair,gamma,final_len\n");
            for r in &keys.reports {
                let _ = writeln!(csv, "{},{},{}", r.pair, sig6(r.gamma), r.final_len);
            }
            dir.write_str("secure_sum_qkd_sessions.csv", &csv)?;
            run
        }
        KeyChoice::Seeded => go(&mut SeededKeys {
            seed: derive_seed(seed, "cli.secure_sum.pads", 0),
        })?,
    };
    write_protocol_run(&run, dir, "secure_sum_")?;
    Ok(protocol_line(&a.inputs, a.bits, &run))
}
