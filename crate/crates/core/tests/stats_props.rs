mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stochreach::dsl::TestSpecAst;
use stochreach::stats::{beta_posterior_mass, chernoff_samples, normal_quantile, replay, Hypothesis, Outcome, TestState};

fn spec() -> impl Strategy<Value = TestSpecAst> {
    prop_oneof![
        (0.2f64..0.8, 0.01f64..0.2).prop_map(|(theta, cost)| TestSpecAst::Lai { theta, cost }),
        (0.2f64..0.8, 2.0f64..100.0, 0.5f64..3.0, 0.5f64..3.0).prop_map(|(theta, t, alpha, beta)| TestSpecAst::Bft { theta, t, alpha, beta }),
        (0.3f64..0.7, 2.0f64..100.0, 0.5f64..3.0, 0.5f64..3.0, 0.01f64..0.2)
            .prop_map(|(theta, t, alpha, beta, delta)| TestSpecAst::Bfti { theta, t, alpha, beta, delta }),
        (0.3f64..0.7, 2.0f64..100.0, 0.01f64..0.2).prop_map(|(theta, t, delta)| TestSpecAst::Sprt { theta, t, delta }),
        (0.05f64..0.3, 0.5f64..0.99).prop_map(|(delta, coverage)| TestSpecAst::Chb { delta, coverage }),
        (0.02f64..0.2, 0.5f64..0.99, 0.5f64..3.0, 0.5f64..3.0).prop_map(|(delta, coverage, alpha, beta)| TestSpecAst::Best { delta, coverage, alpha, beta }),
        (1u64..200).prop_map(|n| TestSpecAst::Nsam { n }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn replay_matches_counts(s in spec(), verdicts in prop::collection::vec(any::<bool>(), 0..400)) {
        let st = replay(s, 0.95, verdicts.iter().copied());
        prop_assert!(st.succ <= st.n);
        prop_assert_eq!(&st, &TestState::from_counts(s, 0.95, st.succ, st.n));
        prop_assert_eq!(&st, &replay(s, 0.95, verdicts.iter().copied()));
    }

    #[test]
    fn estimates_are_ordered_intervals(s in spec(), verdicts in prop::collection::vec(any::<bool>(), 0..400)) {
        if let Outcome::Estimate { point, lo, hi, confidence } = replay(s, 0.95, verdicts).last() {
            prop_assert!(0.0 <= lo && lo <= point && point <= hi && hi <= 1.0);
            prop_assert!((0.0..=1.0).contains(&confidence));
        }
    }

    #[test]
    fn best_stops_with_enough_mass(delta in 0.02f64..0.2, coverage in 0.5f64..0.99, a in 0.5f64..3.0, b in 0.5f64..3.0, p in 0.0f64..1.0, seed: u64) {
        let s = TestSpecAst::Best { delta, coverage, alpha: a, beta: b };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let st = replay(s, 0.95, std::iter::repeat_with(|| rng.random::<f64>() < p).take(100_000));
        let Outcome::Estimate { lo, hi, .. } = st.last() else { panic!("no stop") };
        let (pa, pb) = (a + st.succ as f64, b + (st.n - st.succ) as f64);
        let mass = common::beta_cdf(hi, pa, pb) - common::beta_cdf(lo, pa, pb);
        prop_assert!(mass >= coverage - 1e-9, "mass {mass} < {coverage}");
    }

    #[test]
    fn beta_mass_matches_oracle(a in 0.5f64..300.0, b in 0.5f64..300.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let want = common::beta_cdf(hi, a, b) - common::beta_cdf(lo, a, b);
        prop_assert!((beta_posterior_mass(a, b, lo, hi) - want).abs() < 1e-10);
    }

    #[test]
    fn quantile_matches_oracle(p in 1e-6f64..(1.0 - 1e-6)) {
        prop_assert!((normal_quantile(p) - common::normal_quantile(p)).abs() < 1e-8);
    }

    #[test]
    fn nsam_interval_formula(n in 1u64..500, frac in 0.0f64..1.0, c in 0.5f64..0.999) {
        let succ = (frac * n as f64).floor() as u64;
        let st = TestState::from_counts(TestSpecAst::Nsam { n }, c, succ, n);
        let p = succ as f64 / n as f64;
        let eps = common::normal_quantile((c + 1.0) / 2.0) * (p * (1.0 - p) / n as f64).sqrt();
        let Outcome::Estimate { point, lo, hi, confidence } = st.last() else { panic!() };
        prop_assert_eq!(point, p);
        prop_assert_eq!(confidence, c);
        prop_assert!((lo - (p - eps).max(0.0)).abs() < 1e-9 && (hi - (p + eps).min(1.0)).abs() < 1e-9);
    }
}

#[test]
fn chernoff_grid() {
    for delta in [0.005, 0.01, 0.02, 0.05, 0.1, 0.2] {
        for coverage in [0.5, 0.8, 0.9, 0.95, 0.99, 0.999] {
            let n = chernoff_samples(delta, coverage);
            let need = (2.0f64 / (1.0 - coverage)).ln();
            // Smallest N with 2 N delta^2 >= ln(2 / (1 - coverage)).
            assert!(2.0 * n as f64 * delta * delta >= need * (1.0 - 1e-12));
            assert!(2.0 * (n - 1) as f64 * delta * delta < need);
        }
    }
    assert_eq!(chernoff_samples(0.01, 0.99), 26492);
}

#[test]
fn bayes_factor_monotone_in_successes() {
    for (alpha, beta) in [(1.0, 1.0), (0.5, 2.0), (3.0, 1.0)] {
        for theta in [0.1, 0.5, 0.9] {
            let s = TestSpecAst::Bft { theta, t: 1e300, alpha, beta };
            for n in 1..=30u64 {
                for succ in 0..n {
                    let f = |succ| TestState::from_counts(s, 0.95, succ, n).bayes_factor().unwrap();
                    assert!(f(succ + 1) >= f(succ), "n {n} succ {succ}");
                    // One more sample that is a success never lowers the factor either.
                    let g = TestState::from_counts(s, 0.95, succ + 1, n + 1).bayes_factor().unwrap();
                    assert!(g >= f(succ) || f(succ).is_infinite());
                }
            }
        }
    }
}

fn wrong_rate(p_true: f64, wrong: Hypothesis, seed: u64) -> f64 {
    let s = TestSpecAst::Sprt { theta: 0.5, t: 100.0, delta: 0.1 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wrong_count = 0;
    for _ in 0..1000 {
        let st = replay(s, 0.95, std::iter::repeat_with(|| rng.random::<f64>() < p_true).take(1_000_000));
        match st.last() {
            Outcome::Decided(h) if h == wrong => wrong_count += 1,
            Outcome::Decided(_) => {}
            o => panic!("{o:?}"),
        }
    }
    wrong_count as f64 / 1000.0
}

#[test]
fn sprt_operating_characteristics() {
    assert!(wrong_rate(0.4, Hypothesis::H1, 1) <= 0.01 + 0.02);
    assert!(wrong_rate(0.6, Hypothesis::H0, 2) <= 0.01 + 0.02);
}
