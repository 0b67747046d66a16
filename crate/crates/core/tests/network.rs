use eanet::network::*;
use proptest::prelude::*;

fn config(gen: f64, km_a: f64, km_b: f64) -> NetworkConfig {
    NetworkConfig {
        pair_gen_prob_per_pulse: gen,
        fiber_length_km: PerSide { a: km_a, b: km_b },
        ..NetworkConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn runs_are_deterministic(seed in any::<u64>(), a in 1u8..=8, b in 1u8..=8) {
        let cfg = config(0.2, 3.0, 7.0);
        let schedule = RoutingSchedule::single(UserPair::ports(a, b), 20_000);
        let first = run_slots(&cfg, &schedule, &SettingPolicy::E91, 20_000, seed).unwrap();
        let second = run_slots(&cfg, &schedule, &SettingPolicy::E91, 20_000, seed).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn record_rate_follows_the_loss_budget(gen in 0.01f64..0.5, km_a in 0.0f64..30.0, km_b in 0.0f64..30.0, seed in any::<u64>()) {
        let cfg = config(gen, km_a, km_b);
        let n = 200_000u64;
        let (recs, stats) = run_slots(&cfg, &RoutingSchedule::single(UserPair::ports(1, 2), n), &SettingPolicy::E91, n, seed).unwrap();
        let q = gen * transmittance(&cfg, Side::A) * transmittance(&cfg, Side::B);
        prop_assert!((expected_record_rate(&cfg) - q).abs() < 1e-15);
        let sigma = (n as f64 * q * (1.0 - q)).sqrt();
        prop_assert!((recs.len() as f64 - n as f64 * q).abs() <= 5.0 * sigma + 1.0);
        prop_assert_eq!(stats.records, recs.len() as u64);
        prop_assert_eq!(stats.slots, n);
    }

    #[test]
    fn split_runs_match_the_schedule(split in 1u64..9_999, seed in any::<u64>()) {
        let pairs = [UserPair::ports(1, 1), UserPair::ports(2, 2)];
        let schedule = RoutingSchedule::new(vec![
            ScheduleEntry { start: 0, end: split - 1, pair: pairs[0] },
            ScheduleEntry { start: split, end: 9_999, pair: pairs[1] },
        ]).unwrap();
        let (recs, _) = run_slots(&config(0.5, 0.0, 0.0), &schedule, &SettingPolicy::Chsh, 10_000, seed).unwrap();
        for r in &recs {
            prop_assert_eq!(Some(r.pair), schedule.route(r.slot));
        }
    }
}

#[test]
fn config_file_keys_match_fields() {
    let text = NetworkConfig::default().to_toml_string();
    for key in [
        "fiber_length_km",
        "attenuation_db_per_km",
        "switch_insertion_loss_db",
        "ports_per_side",
        "pulse_rate_hz",
        "pair_gen_prob_per_pulse",
        "source_fidelity",
        "source_phase_deg",
        "detector_efficiency",
        "dark_count_prob_per_slot",
        "residual_rotation",
    ] {
        assert!(text.contains(key), "{key} missing from\n{text}");
    }
    assert!(NetworkConfig::from_toml_str("fiber_length_kms = 3\n").is_err());
}
