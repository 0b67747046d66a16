use std::collections::HashMap;
use std::fmt::Write as _;

use eanet::analysis::DEFAULT_RESAMPLES;
use eanet::format::sig6;
use eanet::network::{Basis, NetworkConfig, UserPair};
use eanet::secure_sum::{run_protocol, KeySource, RingTopology, SecureSumError};

use crate::commands::{
    chsh_pair, chsh_summary_row, fringe_pair, fringe_summary_rows, monobit_z, protocol_line, qkd_pair,
    secure_sum_error, transport_mode, wrap_warning, write_protocol_run, CHSH_SUMMARY_HEADER, FRINGE_SUMMARY_HEADER,
};
use crate::{CliError, DemoArgs, OutDir, DEMO_INPUTS};

pub const REPORT_FILE: &str = "report.txt";

const SECURE_SUM_BITS: u32 = 25;

fn in_stage(stage: &'static str) -> impl Fn(CliError) -> CliError {
    move |e| match e {
        CliError::Usage(m) => CliError::Usage(format!("{stage}: {m}")),
        CliError::Abort(m) => CliError::Abort(format!("{stage}: {m}")),
        CliError::Io(m) => CliError::Io(format!("{stage}: {m}")),
        CliError::Mismatch(m) => CliError::Mismatch(format!("{stage}: {m}")),
    }
}

/// Final keys of sessions already run, handed to the ring as each neighbour holds them.
struct SessionKeys {
    by_pair: HashMap<UserPair, (Vec<u8>, Vec<u8>)>,
}

impl KeySource for SessionKeys {
    fn link_key(&mut self, left: &str, right: &str, _bits: usize) -> Result<(Vec<u8>, Vec<u8>), SecureSumError> {
        let pair: UserPair = format!("{left}{right}")
            .parse()
            .map_err(|e| SecureSumError::KeySource(format!("{e}")))?;
        let (alice, bob) = self
            .by_pair
            .get(&pair)
            .cloned()
            .ok_or_else(|| SecureSumError::KeySource(format!("no session was run for {pair}")))?;
        Ok(if left.starts_with('A') { (alice, bob) } else { (bob, alice) })
    }
}

pub fn demo_paper(a: &DemoArgs, config: &NetworkConfig, seed: u64, dir: &mut OutDir) -> Result<String, CliError> {
    let pairs = [(1, 1), (1, 2), (2, 1), (2, 2)].map(|(i, j)| UserPair::ports(i, j));
    let mut report = format!("seed={seed}\n");

    report.push_str("\n[fringe]\n");
    let mut csv = String::from(FRINGE_SUMMARY_HEADER);
    for &pair in &pairs {
        let r = fringe_pair(pair, &[Basis::Z, Basis::X], a.fringe_points, a.fringe_pulses, config, seed, dir, "fringe/")
            .map_err(in_stage("fringe"))?;
        fringe_summary_rows(pair, &r, &mut csv);
        let v = |b: Basis| r.fits.iter().find(|f| f.0 == b).map_or(0.0, |f| f.1.visibility.clamp(0.0, 1.0));
        let bound = r.bound.unwrap_or(0.0);
        let _ = writeln!(
            report,
            "{pair} V_z={} V_x={} fidelity_bound={} above_0.90={}",
            sig6(v(Basis::Z)),
            sig6(v(Basis::X)),
            sig6(bound),
            bound >= 0.90
        );
    }
    dir.write_str("fringe/summary.csv", &csv)?;

    report.push_str("\n[chsh]\n");
    let mut csv = String::from(CHSH_SUMMARY_HEADER);
    for &pair in &pairs {
        let est = chsh_pair(pair, a.chsh_samples, DEFAULT_RESAMPLES, config, seed, dir, "chsh/")
            .map_err(in_stage("chsh"))?;
        csv.push_str(&chsh_summary_row(pair, a.chsh_samples, &est));
        let _ = writeln!(
            report,
            "{pair} S={} std_error={} violation_2sigma={}",
            sig6(est.s_value),
            sig6(est.std_error),
            est.violates(2.0)
        );
    }
    dir.write_str("chsh/summary.csv", &csv)?;

    report.push_str("\n[qkd]\n");
    let ring = RingTopology::four_party();
    let mut csv = String::from(
        "pair,sifted,gamma,qber_sample,post_sample,blocks_ok,blocks_total,verified,final_len,keys_equal,monobit_z\n",
    );
    let mut keys = SessionKeys { by_pair: HashMap::new() };
    for (i, j) in ring.links() {
        let pair: UserPair = format!("{}{}", ring.parties()[i], ring.parties()[j])
            .parse()
            .map_err(|e| CliError::Usage(format!("qkd: {e}")))?;
        let s = qkd_pair(pair, a.target_sifted, config, seed, dir, "qkd/").map_err(in_stage("qkd"))?;
        let r = &s.report;
        let equal = s.alice.bits == s.bob.bits;
        let _ = writeln!(
            csv,
            "{pair},{},{},{},{},{},{},{},{},{equal},{}",
            r.sifted_bits,
            sig6(r.gamma),
            r.qber_sample_bits,
            r.post_sample_bits,
            r.blocks_ok,
            r.blocks_total,
            r.verified_bits,
            r.final_len,
            sig6(monobit_z(&s.alice.bits))
        );
        let _ = writeln!(
            report,
            "{pair} sifted={} gamma={} post_sample={} verified={} final={} keys_equal={equal}",
            r.sifted_bits,
            sig6(r.gamma),
            r.post_sample_bits,
            r.verified_bits,
            r.final_len
        );
        keys.by_pair.insert(pair, (s.alice.bits, s.bob.bits));
    }
    dir.write_str("qkd/summary.csv", &csv)?;

    report.push_str("\n[secure-sum]\n");
    wrap_warning(&DEMO_INPUTS, SECURE_SUM_BITS);
    let run = run_protocol(
        &ring,
        &DEMO_INPUTS,
        SECURE_SUM_BITS,
        a.rounds,
        &mut keys,
        transport_mode(a.transport),
        "demo",
    )
    .map_err(secure_sum_error)
    .map_err(in_stage("secure-sum"))?;
    write_protocol_run(&run, dir, "secure_sum/")?;
    report.push_str(&protocol_line(&DEMO_INPUTS, SECURE_SUM_BITS, &run));
    for p in ring.parties() {
        let mut xs: Vec<u64> = run.announcements.iter().filter(|x| &x.party == p).map(|x| x.x).collect();
        xs.sort_unstable();
        xs.dedup();
        let _ = writeln!(report, "{p} distinct_announcements={}", xs.len());
    }

    dir.write_str(REPORT_FILE, &report)?;
    Ok(report)
}
