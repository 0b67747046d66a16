use eanet::network::NetworkConfig;
use eanet::qkd::QkdParams;
use eanet::secure_sum::*;
use proptest::prelude::*;

const DEMO_INPUTS: [u64; 4] = [55_406, 116_559, 988_150, 2_839_885];

fn oracle_sum(v: &[u64], n: u32) -> u64 {
    v.iter().fold(0u64, |acc, x| acc.wrapping_add(*x)) & ((1u64 << n) - 1)
}

#[test]
fn four_party_instance_sums_to_four_million() {
    assert_eq!(DEMO_INPUTS.iter().sum::<u64>(), 4_000_000);
    let ring = RingTopology::four_party();
    let run = run_protocol(&ring, &DEMO_INPUTS, 25, 30, &mut SeededKeys { seed: 7 }, TransportMode::Lockstep, "ring4")
        .unwrap();
    assert_eq!(run.sums.len(), 30);
    assert!(run.sums.iter().all(|s| s.t == 4_000_000));
    assert_eq!(run.announcements.len(), 120);
    for party in ring.parties() {
        let xs: Vec<u64> = run.announcements.iter().filter(|a| &a.party == party).map(|a| a.x).collect();
        let mut distinct = xs.clone();
        distinct.sort_unstable();
        distinct.dedup();
        assert!(distinct.len() > 1, "announcements of {party} never change");
    }
    assert!(!sum_wraps(&DEMO_INPUTS, 25));
}

#[test]
fn all_transports_agree() {
    let ring = RingTopology::four_party();
    let runs: Vec<_> = [TransportMode::Lockstep, TransportMode::Threads, TransportMode::Tcp]
        .into_iter()
        .map(|mode| run_protocol(&ring, &DEMO_INPUTS, 25, 10, &mut SeededKeys { seed: 3 }, mode, "s").unwrap())
        .collect();
    for r in &runs[1..] {
        assert_eq!(r.announcements, runs[0].announcements);
        assert_eq!(r.sums, runs[0].sums);
    }
}

#[test]
fn lockstep_transcripts_are_reproducible() {
    let ring = RingTopology::four_party();
    let a = run_protocol(&ring, &DEMO_INPUTS, 25, 5, &mut SeededKeys { seed: 1 }, TransportMode::Lockstep, "s").unwrap();
    let b = run_protocol(&ring, &DEMO_INPUTS, 25, 5, &mut SeededKeys { seed: 1 }, TransportMode::Lockstep, "s").unwrap();
    assert_eq!(a, b);
    assert!(a.transcripts[0].last().unwrap().ends_with("DONE"));
}

#[test]
fn zero_inputs_still_vary() {
    let ring = RingTopology::four_party();
    let run = run_protocol(&ring, &[0u64; 4], 25, 30, &mut SeededKeys { seed: 11 }, TransportMode::Lockstep, "z").unwrap();
    assert!(run.sums.iter().all(|s| s.t == 0));
    let first: Vec<u64> = run.announcements.iter().filter(|a| a.party == "A1").map(|a| a.x).collect();
    assert!(first.windows(2).any(|w| w[0] != w[1]));
}

#[test]
fn five_party_ring() {
    let ring = RingTopology::new((1..=5).map(|i| format!("P{i}")).collect()).unwrap();
    let inputs = [3u64, 1_000, 77, 123_456, 9];
    let run = run_protocol(&ring, &inputs, 20, 4, &mut SeededKeys { seed: 5 }, TransportMode::Threads, "five").unwrap();
    assert!(run.sums.iter().all(|s| s.t == oracle_sum(&inputs, 20)));
}

#[test]
fn wraparound_is_modular() {
    let ring = RingTopology::four_party();
    let inputs = [200u64, 100, 0, 0];
    assert!(sum_wraps(&inputs, 8));
    let run = run_protocol(&ring, &inputs, 8, 3, &mut SeededKeys { seed: 2 }, TransportMode::Lockstep, "w").unwrap();
    assert!(run.sums.iter().all(|s| s.t == 44));
}

#[test]
fn narrow_words_work() {
    let ring = RingTopology::four_party();
    let inputs = [1u16, 2, 3, 4];
    let run = run_protocol(&ring, &inputs, 4, 6, &mut SeededKeys { seed: 8 }, TransportMode::Lockstep, "u16").unwrap();
    assert!(run.sums.iter().all(|s| s.t == 10));
}

#[test]
fn insufficient_key_material_is_reported() {
    struct Short;
    impl KeySource for Short {
        fn link_key(&mut self, _: &str, _: &str, bits: usize) -> Result<(Vec<u8>, Vec<u8>), SecureSumError> {
            Ok((vec![0; bits - 1], vec![0; bits - 1]))
        }
    }
    let ring = RingTopology::four_party();
    let err = run_protocol(&ring, &DEMO_INPUTS, 25, 2, &mut Short, TransportMode::Lockstep, "s").unwrap_err();
    assert!(err.to_string().contains("key exhausted"), "{err}");
}

#[test]
fn key_files_feed_the_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let ring = RingTopology::four_party();
    let mut seeded = SeededKeys { seed: 4 };
    let files = FileKeys { dir: dir.path().to_path_buf() };
    for (i, j) in ring.links() {
        let (l, r) = (&ring.parties()[i], &ring.parties()[j]);
        let (key, _) = seeded.link_key(l, r, 250).unwrap();
        eanet::qkd::write_key_file(&files.path(l, r), &key).unwrap();
    }
    let from_files = run_protocol(&ring, &DEMO_INPUTS, 25, 10, &mut files.clone(), TransportMode::Lockstep, "f").unwrap();
    let direct = run_protocol(&ring, &DEMO_INPUTS, 25, 10, &mut SeededKeys { seed: 4 }, TransportMode::Lockstep, "f").unwrap();
    assert_eq!(from_files, direct);
    assert!(run_protocol(&ring, &DEMO_INPUTS, 25, 11, &mut files.clone(), TransportMode::Lockstep, "f").is_err());
}

#[test]
fn qkd_keys_drive_the_four_party_ring() {
    let mut keys = QkdKeys::new(NetworkConfig::default(), QkdParams::default(), 9);
    let ring = RingTopology::four_party();
    let run = run_protocol(&ring, &DEMO_INPUTS, 25, 30, &mut keys, TransportMode::Threads, "qkd").unwrap();
    assert!(run.sums.iter().all(|s| s.t == 4_000_000));
    assert_eq!(keys.reports.len(), 4);
    let bad = RingTopology::new(["A1", "A2", "B1"].map(String::from).to_vec()).unwrap();
    assert!(run_protocol(&bad, &[1u64, 2, 3], 25, 1, &mut keys, TransportMode::Lockstep, "x").is_err());
}

#[test]
fn one_time_pad_privacy() {
    let first = simulate_announcements(&[10, 20, 30, 40], 8, 100_000, PadMode::Uniform, 1).unwrap();
    let second = simulate_announcements(&[10, 200, 30, 40], 8, 100_000, PadMode::Uniform, 2).unwrap();
    let report = privacy_audit(&first, &second, 8).unwrap();
    assert!(report.min_p() > 0.001, "{report:?}");
    let broken = simulate_announcements(&[10, 20, 30, 40], 8, 100_000, PadMode::Constant(5), 3).unwrap();
    let report = privacy_audit(&broken, &second, 8).unwrap();
    assert!(report.parties.iter().all(|p| p.uniformity_p_first < 1e-6));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn telescoping_identity(
        n in 1u32..=64,
        raw in prop::collection::vec((any::<u64>(), any::<u64>()), 3..=8),
    ) {
        let m = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let inputs: Vec<u64> = raw.iter().map(|(v, _)| v & m).collect();
        let pads: Vec<u64> = raw.iter().map(|(_, p)| p & m).collect();
        let ring = RingTopology::new((0..inputs.len()).map(|i| format!("P{i}")).collect()).unwrap();
        let anns: Vec<_> = (0..inputs.len())
            .map(|i| {
                let mut next = PadKey::new(pads[i], n).unwrap();
                let mut prev = PadKey::new(pads[ring.prev(i)], n).unwrap();
                compute_announcement(&ring.parties()[i], 0, inputs[i], &mut next, &mut prev, n).unwrap()
            })
            .collect();
        let expected = inputs.iter().fold(0u64, |a, v| a.wrapping_add(*v)) & m;
        prop_assert_eq!(aggregate(&anns, &ring, n).unwrap().t, expected);
    }

    #[test]
    fn pads_are_single_use(bits in prop::collection::vec(0u8..2, 8..64), n in 1u32..8) {
        let mut key = KeyBuffer::new(bits.clone());
        let mut offset = 0;
        while offset + n as usize <= bits.len() {
            derive_pad::<u64>(&mut key, n, offset).unwrap();
            prop_assert!(derive_pad::<u64>(&mut key, n, offset).is_err());
            offset += n as usize;
        }
    }
}
