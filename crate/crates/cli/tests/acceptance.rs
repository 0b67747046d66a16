//! End-to-end acceptance run: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use eanet::analysis::DEFAULT_RESAMPLES;
use eanet::experiment::{chsh_run, fringe_angles, pair_fringes};
use eanet::network::{run_slots, NetworkConfig, RoutingSchedule, SettingPolicy, UserPair};
use eanet::qkd::{ldpc_generate, ldpc_reconcile, run_qkd_session, sift, HashKey, QkdParams, MAX_BP_ITERATIONS};
use eanet::quantum::{chsh_analytic, fidelity, ideal_pair_state, werner_fidelity, werner_mix, ChshAngles};
use eanet::secure_sum::{
    aggregate, compute_announcement, privacy_audit, run_protocol, simulate_announcements, PadKey, PadMode, QkdKeys,
    RingTopology, TransportMode,
};
use eanet_cli::{execute, Command, DemoArgs, RunManifest, TransportChoice, MANIFEST_FILE, DEMO_INPUTS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn demo_pairs() -> [UserPair; 4] {
    [(1, 1), (1, 2), (2, 1), (2, 2)].map(|(a, b)| UserPair::ports(a, b))
}

fn c1_ideal_chsh() -> Outcome {
    let start = Instant::now();
    let (_, est) = chsh_run(&NetworkConfig::ideal(), UserPair::ports(1, 1), 100_000, DEFAULT_RESAMPLES, 1)
        .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let oracle = 2.0 * SQRT_2;
    check(
        (est.s_value - oracle).abs() <= 0.02 && secs < 10.0,
        format!("S = {:.4} ± {:.4}, oracle {oracle:.4}, {secs:.2} s", est.s_value, est.std_error),
    )
}

fn c2_werner_scaling() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (i, p) in [0.8, 0.9, 1.0].into_iter().enumerate() {
        let config = NetworkConfig::werner(werner_fidelity(p));
        let rho = werner_mix(&ideal_pair_state(PI), werner_fidelity(p)).map_err(|e| e.to_string())?;
        let oracle = chsh_analytic(&rho, &ChshAngles::standard());
        if (oracle - 2.0 * SQRT_2 * p).abs() > 1e-12 {
            return Err(format!("analytic S {oracle} differs from 2√2·{p}"));
        }
        let (_, est) = chsh_run(&config, UserPair::ports(1, 1), 100_000, DEFAULT_RESAMPLES, 10 + i as u64)
            .map_err(|e| e.to_string())?;
        let within = (est.s_value - oracle).abs() <= 3.0 * est.std_error;
        ok &= within;
        parts.push(format!("p={p}: {:.4} vs {oracle:.4} (σ {:.4})", est.s_value, est.std_error));
    }
    check(ok, parts.join("; "))
}

fn c3_source_fidelity() -> Outcome {
    let target = ideal_pair_state(PI);
    let rho = werner_mix(&target, 0.9512).map_err(|e| e.to_string())?;
    let f = fidelity(&rho, &target).map_err(|e| e.to_string())?;
    check((f - 0.9512).abs() <= 1e-9, format!("F = {f:.12}"))
}

fn c4_pairwise_bound() -> Outcome {
    let config = NetworkConfig::default();
    let angles = fringe_angles(16);
    let mut parts = Vec::new();
    let mut ok = true;
    for pair in demo_pairs() {
        let f = pair_fringes(&config, pair, &angles, 1_000_000, 1).map_err(|e| e.to_string())?;
        let (_, est) = chsh_run(&config, pair, 100_000, DEFAULT_RESAMPLES, 1).map_err(|e| e.to_string())?;
        ok &= f.bound >= 0.90 && est.violates(2.0);
        parts.push(format!(
            "{pair}: bound {:.4}, S {:.4} ± {:.4}",
            f.bound, est.s_value, est.std_error
        ));
    }
    check(ok, parts.join("; "))
}

fn c5_qber() -> Outcome {
    let config = NetworkConfig::werner(0.925);
    let p = (4.0 * 0.925 - 1.0) / 3.0;
    let oracle = (1.0 - p) / 2.0;
    let pair = UserPair::ports(1, 1);
    let slots = 60_000;
    let (records, _) = run_slots(&config, &RoutingSchedule::single(pair, slots), &SettingPolicy::E91, slots, 5)
        .map_err(|e| e.to_string())?;
    let (a, b) = sift(&records);
    let errors = a.bits.iter().zip(&b.bits).filter(|(x, y)| x != y).count();
    let gamma = errors as f64 / a.len() as f64;
    let session = run_qkd_session(pair, &config, &QkdParams::default(), 5).map_err(|e| e.to_string())?;
    let g = session.report.gamma;
    check(
        a.len() >= 10_000 && (gamma - oracle).abs() <= 0.01 && gamma < 0.11 && g < 0.11,
        format!(
            "γ = {gamma:.4} over {} sifted bits, oracle {oracle:.4}; session estimate from its 20% sample {g:.4}",
            a.len()
        ),
    )
}

fn c6_sift_rate() -> Outcome {
    let config = NetworkConfig::ideal();
    let n = 100_000;
    let (records, _) = run_slots(
        &config,
        &RoutingSchedule::single(UserPair::ports(3, 4), n),
        &SettingPolicy::E91,
        n,
        6,
    )
    .map_err(|e| e.to_string())?;
    let kept = sift(&records).0.len() as f64 / records.len() as f64;
    check(
        records.len() == 100_000 && (kept - 2.0 / 9.0).abs() <= 0.005,
        format!("kept {kept:.5} of {} records, oracle {:.5}", records.len(), 2.0 / 9.0),
    )
}

fn c7_ldpc() -> Outcome {
    let start = Instant::now();
    let code = ldpc_generate(4096, 7).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ok = 0;
    let mut worst = 0;
    for i in 0..100u64 {
        let alice: Vec<u8> = (0..4096).map(|_| rng.random_range(0..2u8)).collect();
        let bob: Vec<u8> = alice.iter().map(|&b| b ^ u8::from(rng.random_bool(0.05))).collect();
        let r = ldpc_reconcile(&alice, &bob, &code, 0.05, &HashKey::from_seed(i)).map_err(|e| e.to_string())?;
        if r.verified && r.bp_iterations <= MAX_BP_ITERATIONS && r.corrected_bits == alice {
            ok += 1;
            worst = worst.max(r.bp_iterations);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        ok >= 99 && secs < 60.0,
        format!("{ok}/100 verified, max {worst} iterations, {secs:.2} s"),
    )
}

fn c8_pipeline() -> Outcome {
    let config = NetworkConfig::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for pair in demo_pairs() {
        let s = run_qkd_session(pair, &config, &QkdParams::default(), 8).map_err(|e| e.to_string())?;
        let r = &s.report;
        let m = s.alice.bits.len();
        let ones = s.alice.bits.iter().filter(|&&b| b == 1).count() as f64 / m as f64;
        let monobit = (ones - 0.5).abs() < 3.0 / (m as f64).sqrt();
        let pass = r.sifted_bits == 12_000
            && r.post_sample_bits == 9_600
            && (900..=2700).contains(&r.final_len)
            && m == r.final_len
            && s.alice.bits == s.bob.bits
            && monobit;
        ok &= pass;
        parts.push(format!(
            "{pair}: sifted {} → {} → verified {} ({}/{} blocks) → final {}",
            r.sifted_bits, r.post_sample_bits, r.verified_bits, r.blocks_ok, r.blocks_total, r.final_len
        ));
    }
    check(ok, parts.join("; "))
}

fn c9_secure_sum() -> Outcome {
    let ring = RingTopology::four_party();
    let mut keys = QkdKeys::new(NetworkConfig::default(), QkdParams::default(), 9);
    let run = run_protocol(&ring, &DEMO_INPUTS, 25, 30, &mut keys, TransportMode::Lockstep, "acceptance")
        .map_err(|e| e.to_string())?;
    let all = run.sums.len() == 30 && run.sums.iter().all(|s| s.t == 4_000_000);
    let mut varying = true;
    for p in ring.parties() {
        let xs: Vec<u64> = run.announcements.iter().filter(|a| &a.party == p).map(|a| a.x).collect();
        varying &= xs.len() == 30 && xs.windows(2).any(|w| w[0] != w[1]);
    }
    check(
        all && varying,
        format!(
            "t = {:?} over {} rounds, announcements vary: {varying}",
            run.sums.iter().map(|s| s.t).collect::<std::collections::BTreeSet<_>>(),
            run.sums.len()
        ),
    )
}

fn c10_telescoping() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut failures = 0;
    for trial in 0..10_000u64 {
        let parties: usize = rng.random_range(3..=8);
        let n: u32 = rng.random_range(1..=64);
        let m = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let inputs: Vec<u64> = (0..parties).map(|_| rng.random::<u64>() & m).collect();
        let pads: Vec<u64> = (0..parties).map(|_| rng.random::<u64>() & m).collect();
        let ring = RingTopology::new((0..parties).map(|i| format!("P{i}")).collect()).map_err(|e| e.to_string())?;
        let mut anns = Vec::with_capacity(parties);
        for i in 0..parties {
            let mut next = PadKey::new(pads[i], n).map_err(|e| e.to_string())?;
            let mut prev = PadKey::new(pads[(i + parties - 1) % parties], n).map_err(|e| e.to_string())?;
            anns.push(compute_announcement(&ring.parties()[i], trial, inputs[i], &mut next, &mut prev, n).map_err(|e| e.to_string())?);
        }
        let t = aggregate(&anns, &ring, n).map_err(|e| e.to_string())?.t;
        let oracle = (inputs.iter().map(|&v| u128::from(v)).sum::<u128>() % (1u128 << n)) as u64;
        failures += usize::from(t != oracle);
    }
    check(failures == 0, format!("{failures} failures in 10000 trials"))
}

fn c11_privacy() -> Outcome {
    let rounds = 100_000;
    let first = simulate_announcements(&[10, 20, 30, 40], 8, rounds, PadMode::Uniform, 111).map_err(|e| e.to_string())?;
    let second = simulate_announcements(&[200, 3, 77, 150], 8, rounds, PadMode::Uniform, 112).map_err(|e| e.to_string())?;
    let audit = privacy_audit(&first, &second, 8).map_err(|e| e.to_string())?;
    let broken = simulate_announcements(&[10, 20, 30, 40], 8, rounds, PadMode::Constant(0x5a), 113).map_err(|e| e.to_string())?;
    let broken_audit = privacy_audit(&broken, &second, 8).map_err(|e| e.to_string())?;
    let worst_broken = broken_audit
        .parties
        .iter()
        .map(|p| p.uniformity_p_first.max(p.two_sample_p))
        .fold(0.0, f64::max);
    check(
        audit.min_p() > 0.001 && worst_broken < 1e-6,
        format!("min p uniform pads {:.4}, max p constant pad {worst_broken:.2e}", audit.min_p()),
    )
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("readable output tree") {
            let path = entry.expect("directory entry").path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn c12_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (first, second) = (tmp.path().join("first"), tmp.path().join("second"));
    let spec = eanet_cli::RunSpec {
        command: Command::DemoPaper(DemoArgs {
            fringe_points: 16,
            fringe_pulses: 1_000_000,
            chsh_samples: 100_000,
            target_sifted: 12_000,
            rounds: 30,
            transport: TransportChoice::Lockstep,
        }),
        config: NetworkConfig::default(),
        seed: 2024,
    };
    execute(&spec, &first).map_err(|e| e.to_string())?;
    let manifest = RunManifest::load(&first.join(MANIFEST_FILE)).map_err(|e| e.to_string())?;
    let rerun = execute(&manifest.spec(), &second).map_err(|e| e.to_string())?;
    manifest.verify(&rerun.manifest).map_err(|e| e.to_string())?;
    let (a, b) = (read_tree(&first), read_tree(&second));
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    check(
        a.len() == b.len() && differing.is_empty() && a.len() == manifest.artifacts.len() + 1,
        format!("{} files, {} differ", a.len(), differing.len()),
    )
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 12] = [
        ("C1", "ideal CHSH", c1_ideal_chsh),
        ("C2", "Werner CHSH scaling", c2_werner_scaling),
        ("C3", "source fidelity calibration", c3_source_fidelity),
        ("C4", "pairwise fidelity bound and violation", c4_pairwise_bound),
        ("C5", "QBER at pair fidelity 0.925", c5_qber),
        ("C6", "sift rate", c6_sift_rate),
        ("C7", "LDPC operating point", c7_ldpc),
        ("C8", "key pipeline magnitudes", c8_pipeline),
        ("C9", "secure-sum four-party instance", c9_secure_sum),
        ("C10", "telescoping identity", c10_telescoping),
        ("C11", "one-time-pad privacy", c11_privacy),
        ("C12", "demo-paper determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {id} {name}: {detail} ({secs:.1} s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {id} {name}: {detail} ({secs:.1} s)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
