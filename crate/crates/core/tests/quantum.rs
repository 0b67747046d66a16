use std::f64::consts::{PI, SQRT_2};

use eanet::quantum::*;
use eanet::{LocalUnitary, PairState};
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn assert_valid(state: &PairState) {
    let m = state.matrix();
    for i in 0..4 {
        for j in 0..4 {
            assert!((m[i][j] - m[j][i].conj()).norm() <= 1e-12, "not Hermitian at ({i},{j})");
        }
    }
    assert!((state.trace() - C::new(1.0, 0.0)).norm() <= 1e-12);
    assert!(state.eigenvalues().iter().all(|&e| e >= -1e-10), "{:?}", state.eigenvalues());
}

fn amplitudes() -> impl Strategy<Value = [C; 4]> {
    prop::array::uniform4((-1.0f64..1.0, -1.0f64..1.0)).prop_filter_map("nonzero", |raw| {
        let v = raw.map(|(re, im)| C::new(re, im));
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        (norm > 1e-3).then(|| v.map(|c| c / norm))
    })
}

fn qubit() -> impl Strategy<Value = [C; 2]> {
    (0.0..PI, 0.0..2.0 * PI).prop_map(|(t, ph)| [C::new((t / 2.0).cos(), 0.0), C::from_polar((t / 2.0).sin(), ph)])
}

fn unitary() -> impl Strategy<Value = LocalUnitary> {
    (0.0..PI, 0.0..2.0 * PI, 0.0..2.0 * PI, 0.0..2.0 * PI).prop_map(|(t, a, b, g)| {
        let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
        let ph = C::from_polar(1.0, g);
        let u = [
            [ph * C::from_polar(c, a), -ph * C::from_polar(s, -b)],
            [ph * C::from_polar(s, b), ph * C::from_polar(c, -a)],
        ];
        LocalUnitary::from_matrix(u).expect("SU(2) times a phase")
    })
}

fn mixed() -> impl Strategy<Value = PairState> {
    (amplitudes(), amplitudes(), 0.0f64..1.0).prop_map(|(a, b, w)| PairState::pure(a).mix(&PairState::pure(b), w))
}

// Expectation of (σ_a ⊗ σ_b) for the measured axes cos2θ·Z + sin2θ·Y, with
// Bob's sign flipped, summed the long way over the density matrix.
fn expectation_oracle(state: &PairState, ta: f64, tb: f64) -> f64 {
    let axis = |t: f64| -> [[C; 2]; 2] {
        let (z, y) = ((2.0 * t).cos(), (2.0 * t).sin());
        [[C::new(z, 0.0), C::new(0.0, -y)], [C::new(0.0, y), C::new(-z, 0.0)]]
    };
    let (a, b) = (axis(ta), axis(tb));
    let m = state.matrix();
    let mut acc = C::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            acc += a[i / 2][j / 2] * b[i % 2][j % 2] * m[j][i];
        }
    }
    -acc.re
}

#[test]
fn eom_examples() {
    let u = eom_unitary(PI / 4.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let expected = [[C::new(h, 0.0), C::new(0.0, -h)], [C::new(0.0, -h), C::new(h, 0.0)]];
    for (row, exp) in u.matrix().iter().zip(&expected) {
        for (x, y) in row.iter().zip(exp) {
            assert!((x - y).norm() < 1e-15);
        }
    }
    let id = eom_unitary(0.7).then_after(&eom_unitary(-0.7));
    assert!(id.matrix()[0][0].re > 1.0 - 1e-15 && id.matrix()[0][1].norm() < 1e-15);
}

#[test]
fn werner_calibration_matches_source_fidelity() {
    let singlet = ideal_pair_state(PI);
    let rho = werner_mix(&singlet, 0.9512).unwrap();
    assert!((fidelity(&rho, &singlet).unwrap() - 0.9512).abs() < 1e-12);
    assert_valid(&rho);
    assert!(werner_mix(&singlet, 0.2).is_err());
    assert!(werner_mix(&rho, 0.9).is_err());
}

#[test]
fn chsh_reference_states() {
    let angles = ChshAngles::standard();
    let singlet = ideal_pair_state(PI);
    assert!((chsh_analytic(&singlet, &angles) - 2.0 * SQRT_2).abs() < 1e-12);
    let w = werner_mix(&singlet, werner_fidelity(0.9349)).unwrap();
    assert!((chsh_analytic(&w, &angles) - 2.0 * SQRT_2 * 0.9349).abs() < 1e-12);
    // |HH⟩ has E(θa, θb) = −cos2θa·cos2θb under this sign convention.
    let one = C::new(1.0, 0.0);
    let zero = C::new(0.0, 0.0);
    let hh = PairState::pure([one, zero, zero, zero]);
    assert!((chsh_analytic(&hh, &angles) + SQRT_2).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn born_rule_is_normalized(state in mixed(), ta in -PI..PI, tb in -PI..PI) {
        assert_valid(&state);
        let d = born_probabilities(&state, ta, tb);
        prop_assert!((d.total() - 1.0).abs() <= 1e-12);
        prop_assert!(d.as_array().iter().all(|p| (0.0..=1.0).contains(p)));
        let e = d.raw_correlation();
        prop_assert!((-1.0..=1.0).contains(&e));
        prop_assert!((d.correlation() - expectation_oracle(&state, ta, tb)).abs() < 1e-10);
    }

    #[test]
    fn local_unitaries_preserve_invariants(state in mixed(), ua in unitary(), ub in unitary()) {
        prop_assert!(ua.is_unitary() && ub.is_unitary());
        let out = apply_local(&state, &ua, &ub);
        assert_valid(&out);
        let (before, after) = (state.eigenvalues(), out.eigenvalues());
        for (x, y) in before.iter().zip(after.iter()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        let back = apply_local(&out, &ua.adjoint(), &ub.adjoint());
        for (r1, r2) in back.matrix().iter().zip(state.matrix()) {
            for (x, y) in r1.iter().zip(r2) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ideal_state_has_no_hh_or_vv(phi in -10.0f64..10.0) {
        let s = ideal_pair_state(phi);
        assert_valid(&s);
        prop_assert!(s.matrix()[0][0].norm() == 0.0 && s.matrix()[3][3].norm() == 0.0);
        prop_assert!((fidelity(&s, &s).unwrap() - 1.0).abs() < 1e-12);
        let overlap = fidelity(&s, &ideal_pair_state(0.0)).unwrap();
        prop_assert!((overlap - (1.0 + phi.cos()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn werner_mix_hits_the_goal(f in 0.25f64..=1.0, amps in amplitudes()) {
        let target = PairState::pure(amps);
        let rho = werner_mix(&target, f).unwrap();
        assert_valid(&rho);
        prop_assert!((fidelity(&rho, &target).unwrap() - f).abs() < 1e-12);
        let mixed = PairState::maximally_mixed();
        prop_assert!((fidelity(&mixed, &target).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn product_states_obey_the_classical_bound(a in qubit(), b in qubit(), angles in prop::array::uniform4(-PI..PI)) {
        let amps = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
        let s = chsh_analytic(
            &PairState::pure(amps),
            &ChshAngles { a1: angles[0], a2: angles[1], b1: angles[2], b2: angles[3] },
        );
        prop_assert!(s.abs() <= 2.0 + 1e-10, "S = {s}");
    }

    #[test]
    fn tsirelson_bound(state in mixed(), angles in prop::array::uniform4(-PI..PI)) {
        let s = chsh_analytic(&state, &ChshAngles { a1: angles[0], a2: angles[1], b1: angles[2], b2: angles[3] });
        prop_assert!(s.abs() <= 2.0 * SQRT_2 + 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn werner_correlation_is_p_cos(p in 0.0f64..=1.0, ta in -PI..PI, tb in -PI..PI) {
        let w = werner_mix(&ideal_pair_state(PI), werner_fidelity(p)).unwrap();
        let e = born_probabilities(&w, ta, tb).correlation();
        prop_assert!((e - p * (2.0 * (ta - tb)).cos()).abs() < 1e-10);
        prop_assert!((e - expectation_oracle(&w, ta, tb)).abs() < 1e-10);
    }
}

#[test]
fn f32_core_agrees_with_f64() {
    let s32 = ideal_pair_state(std::f32::consts::PI);
    let s = chsh_analytic(&s32, &ChshAngles::<f32>::standard());
    assert!((f64::from(s) - 2.0 * SQRT_2).abs() < 1e-5);
}
