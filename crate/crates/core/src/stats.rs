//! Sequential hypothesis tests and estimators over a stream of Bernoulli
//! verdicts.

use std::fmt;

use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc_inv;
use thiserror::Error;

use crate::dsl::TestSpecAst;

/// Confidence of the NSAM interval when none is configured.
pub const DEFAULT_NSAM_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("update after the test has stopped")]
    UpdateAfterStop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::H0 => "H0",
            Hypothesis::H1 => "H1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Continue,
    Decided(Hypothesis),
    Estimate { point: f64, lo: f64, hi: f64, confidence: f64 },
}

impl Outcome {
    pub fn is_continue(&self) -> bool {
        matches!(self, Outcome::Continue)
    }

    /// Point estimate, or NaN when there is none.
    pub fn point(&self) -> f64 {
        match self {
            Outcome::Estimate { point, .. } => *point,
            _ => f64::NAN,
        }
    }
}

/// Accumulated evidence of one test. Everything beyond `succ` and `n` is
/// derived from them, so a state rebuilt from counts equals the folded one.
#[derive(Debug, Clone, PartialEq)]
pub struct TestState {
    pub spec: TestSpecAst,
    pub succ: u64,
    pub n: u64,
    /// Confidence of the NSAM interval.
    pub confidence: f64,
    /// Fixed sample size of CHB and NSAM.
    pub target: Option<u64>,
    last: Outcome,
}

/// Required CHB sample size `ceil(ln(2 / (1 - coverage)) / (2 delta^2))`.
pub fn chernoff_samples(delta: f64, coverage: f64) -> u64 {
    ((2.0 / (1.0 - coverage)).ln() / (2.0 * delta * delta)).ceil() as u64
}

/// Mass of Beta(alpha, beta) on `[lo, hi]`.
pub fn beta_posterior_mass(alpha: f64, beta: f64, lo: f64, hi: f64) -> f64 {
    let cdf = |x: f64| {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            beta_reg(alpha, beta, x)
        }
    };
    let upper = |x: f64| if x >= 1.0 { 0.0 } else { cdf_upper(alpha, beta, x) };
    // Subtract on the side with the smaller tail to keep precision.
    if hi <= 0.5 {
        (cdf(hi) - cdf(lo)).max(0.0)
    } else {
        (upper(lo) - upper(hi)).max(0.0)
    }
}

/// `P(p > x)` under Beta(alpha, beta), computed without cancellation.
fn cdf_upper(alpha: f64, beta: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        beta_reg(beta, alpha, 1.0 - x)
    }
}

fn cdf_lower(alpha: f64, beta: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        beta_reg(alpha, beta, x)
    }
}

pub fn beta_mean(alpha: f64, beta: f64) -> f64 {
    alpha / (alpha + beta)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// Bernoulli Kullback-Leibler divergence `KL(p || q)`.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// Interval of half-width `delta` around `mean`, shifted to stay in [0, 1].
pub fn centred_interval(mean: f64, delta: f64) -> (f64, f64) {
    if mean - delta < 0.0 {
        (0.0, (2.0 * delta).min(1.0))
    } else if mean + delta > 1.0 {
        ((1.0 - 2.0 * delta).max(0.0), 1.0)
    } else {
        (mean - delta, mean + delta)
    }
}

impl TestState {
    pub fn new(spec: TestSpecAst) -> TestState {
        TestState::with_confidence(spec, DEFAULT_NSAM_CONFIDENCE)
    }

    pub fn with_confidence(spec: TestSpecAst, confidence: f64) -> TestState {
        let target = match spec {
            TestSpecAst::Chb { delta, coverage } => Some(chernoff_samples(delta, coverage)),
            TestSpecAst::Nsam { n } => Some(n),
            _ => None,
        };
        TestState { spec, succ: 0, n: 0, confidence, target, last: Outcome::Continue }
    }

    /// State after observing `succ` successes in `n` samples.
    pub fn from_counts(spec: TestSpecAst, confidence: f64, succ: u64, n: u64) -> TestState {
        assert!(succ <= n, "succ {succ} exceeds n {n}");
        let mut st = TestState::with_confidence(spec, confidence);
        st.succ = succ;
        st.n = n;
        st.last = st.outcome();
        st
    }

    pub fn last(&self) -> Outcome {
        self.last
    }

    pub fn is_stopped(&self) -> bool {
        !self.last.is_continue()
    }

    /// Beta posterior parameters of the Bayesian tests.
    pub fn posterior(&self) -> Option<(f64, f64)> {
        let fails = (self.n - self.succ) as f64;
        match self.spec {
            TestSpecAst::Bft { alpha, beta, .. } | TestSpecAst::Bfti { alpha, beta, .. } | TestSpecAst::Best { alpha, beta, .. } => {
                Some((alpha + self.succ as f64, beta + fails))
            }
            _ => None,
        }
    }

    /// SPRT log-likelihood ratio of `theta + delta` against `theta - delta`.
    pub fn log_lambda(&self) -> Option<f64> {
        let TestSpecAst::Sprt { theta, delta, .. } = self.spec else {
            return None;
        };
        let (p0, p1) = (theta - delta, theta + delta);
        let fails = (self.n - self.succ) as f64;
        Some(self.succ as f64 * (p1 / p0).ln() + fails * ((1.0 - p1) / (1.0 - p0)).ln())
    }

    /// Posterior odds of H0 over prior odds of H0 (BFT and BFTI).
    pub fn bayes_factor(&self) -> Option<f64> {
        let (a, b) = self.posterior()?;
        let (h0_post, h1_post, h0_prior, h1_prior) = match self.spec {
            TestSpecAst::Bft { theta, alpha, beta, .. } => (
                cdf_upper(a, b, theta),
                cdf_lower(a, b, theta),
                cdf_upper(alpha, beta, theta),
                cdf_lower(alpha, beta, theta),
            ),
            TestSpecAst::Bfti { theta, alpha, beta, delta, .. } => (
                cdf_upper(a, b, theta + delta),
                cdf_lower(a, b, theta - delta),
                cdf_upper(alpha, beta, theta + delta),
                cdf_lower(alpha, beta, theta - delta),
            ),
            _ => return None,
        };
        Some((h0_post / h1_post) * (h1_prior / h0_prior))
    }

    /// Lai's statistic `n KL(succ / n, theta)`.
    pub fn lai_statistic(&self) -> Option<f64> {
        let TestSpecAst::Lai { theta, .. } = self.spec else {
            return None;
        };
        if self.n == 0 {
            return Some(0.0);
        }
        Some(self.n as f64 * bernoulli_kl(self.succ as f64 / self.n as f64, theta))
    }

    fn outcome(&self) -> Outcome {
        match self.spec {
            TestSpecAst::Sprt { t, .. } => {
                let l = self.log_lambda().unwrap();
                if l > t.ln() {
                    Outcome::Decided(Hypothesis::H1)
                } else if l < -t.ln() {
                    Outcome::Decided(Hypothesis::H0)
                } else {
                    Outcome::Continue
                }
            }
            TestSpecAst::Bft { t, .. } | TestSpecAst::Bfti { t, .. } => {
                let f = self.bayes_factor().unwrap();
                if f > t {
                    Outcome::Decided(Hypothesis::H0)
                } else if f < 1.0 / t {
                    Outcome::Decided(Hypothesis::H1)
                } else {
                    Outcome::Continue
                }
            }
            TestSpecAst::Lai { theta, cost } => {
                if self.n > 0 && self.lai_statistic().unwrap() >= (1.0 / cost).ln() {
                    let p = self.succ as f64 / self.n as f64;
                    Outcome::Decided(if p >= theta { Hypothesis::H1 } else { Hypothesis::H0 })
                } else {
                    Outcome::Continue
                }
            }
            TestSpecAst::Chb { delta, coverage } => {
                if self.n < self.target.unwrap() {
                    return Outcome::Continue;
                }
                let p = self.succ as f64 / self.n as f64;
                Outcome::Estimate { point: p, lo: (p - delta).max(0.0), hi: (p + delta).min(1.0), confidence: coverage }
            }
            TestSpecAst::Best { delta, coverage, .. } => {
                let (a, b) = self.posterior().unwrap();
                let mean = beta_mean(a, b);
                let (lo, hi) = centred_interval(mean, delta);
                let mass = beta_posterior_mass(a, b, lo, hi);
                if mass >= coverage {
                    Outcome::Estimate { point: mean, lo, hi, confidence: mass }
                } else {
                    Outcome::Continue
                }
            }
            TestSpecAst::Nsam { .. } => {
                if self.n < self.target.unwrap() {
                    return Outcome::Continue;
                }
                let (point, eps) = self.clt_interval();
                Outcome::Estimate { point, lo: (point - eps).max(0.0), hi: (point + eps).min(1.0), confidence: self.confidence }
            }
        }
    }

    /// Empirical mean and `Phi^-1((c + 1) / 2) sqrt(p (1 - p) / n)`.
    pub fn clt_interval(&self) -> (f64, f64) {
        if self.n == 0 {
            return (0.0, 0.0);
        }
        let p = self.succ as f64 / self.n as f64;
        let eps = normal_quantile((self.confidence + 1.0) / 2.0) * (p * (1.0 - p) / self.n as f64).sqrt();
        (p, eps)
    }

    pub fn update(&mut self, sat: bool) -> Result<Outcome, StatsError> {
        if self.is_stopped() {
            return Err(StatsError::UpdateAfterStop);
        }
        self.n += 1;
        self.succ += u64::from(sat);
        self.last = self.outcome();
        Ok(self.last)
    }

    /// Meaning of a decided hypothesis for this test.
    pub fn describe(&self, h: Hypothesis) -> String {
        match (self.spec, h) {
            (TestSpecAst::Sprt { theta, delta, .. }, Hypothesis::H0) => format!("p <= {}", theta - delta),
            (TestSpecAst::Sprt { theta, delta, .. }, Hypothesis::H1) => format!("p >= {}", theta + delta),
            (TestSpecAst::Bft { theta, .. }, Hypothesis::H0) => format!("p >= {theta}"),
            (TestSpecAst::Bft { theta, .. }, Hypothesis::H1) => format!("p < {theta}"),
            (TestSpecAst::Bfti { theta, delta, .. }, Hypothesis::H0) => format!("p >= {}", theta + delta),
            (TestSpecAst::Bfti { theta, delta, .. }, Hypothesis::H1) => format!("p <= {}", theta - delta),
            (TestSpecAst::Lai { theta, .. }, Hypothesis::H0) => format!("p < {theta}"),
            (TestSpecAst::Lai { theta, .. }, Hypothesis::H1) => format!("p >= {theta}"),
            _ => h.to_string(),
        }
    }
}

/// Folds a verdict sequence from a fresh state, stopping at the first
/// non-`Continue` outcome.
pub fn replay(spec: TestSpecAst, confidence: f64, verdicts: impl IntoIterator<Item = bool>) -> TestState {
    let mut st = TestState::with_confidence(spec, confidence);
    for v in verdicts {
        if st.update(v).expect("fold stops at the first decision") != Outcome::Continue {
            break;
        }
    }
    st
}

#[cfg(test)]
mod tests {
    use super::*;

    fn best() -> TestSpecAst {
        TestSpecAst::Best { delta: 0.01, coverage: 0.99, alpha: 1.0, beta: 1.0 }
    }

    #[test]
    fn init_values() {
        assert_eq!(TestState::new(best()).posterior(), Some((1.0, 1.0)));
        assert_eq!(TestState::new(TestSpecAst::Nsam { n: 100 }).target, Some(100));
        assert_eq!(TestState::new(TestSpecAst::Chb { delta: 0.01, coverage: 0.99 }).target, Some(26492));
    }

    #[test]
    fn best_all_successes() {
        let st = TestState::from_counts(best(), 0.95, 240, 240);
        let (a, b) = st.posterior().unwrap();
        assert_eq!((a, b), (241.0, 1.0));
        assert_eq!(format!("{:.3}", beta_mean(a, b)), "0.996");
        match st.last() {
            Outcome::Estimate { point, lo, hi, confidence } => {
                assert!((point - 241.0 / 242.0).abs() < 1e-15);
                assert_eq!((lo, hi), (0.98, 1.0));
                assert!(confidence >= 0.99);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn best_uniform_prior_stops_at_227_on_constant_streams() {
        let st = replay(best(), 0.95, std::iter::repeat(true));
        assert_eq!(st.n, 227);
        assert_eq!(format!("{:.3}", st.last().point()), "0.996");
        let st = replay(best(), 0.95, std::iter::repeat(false));
        assert_eq!(st.n, 227);
        assert_eq!(format!("{:.3}", st.last().point()), "0.004");
    }

    #[test]
    fn sprt_crosses_after_twelve_successes() {
        let mut st = TestState::new(TestSpecAst::Sprt { theta: 0.5, t: 100.0, delta: 0.1 });
        for i in 1..=100 {
            if let Outcome::Decided(h) = st.update(true).unwrap() {
                assert_eq!((h, i), (Hypothesis::H1, 12));
                assert_eq!(st.update(true), Err(StatsError::UpdateAfterStop));
                return;
            }
        }
        panic!("no decision");
    }

    #[test]
    fn nsam_mean() {
        let st = replay(TestSpecAst::Nsam { n: 4 }, 0.95, [true, false, true, false]);
        let Outcome::Estimate { point, lo, hi, confidence } = st.last() else { panic!() };
        assert_eq!(point, 0.5);
        let eps = 1.959963984540054 * (0.25f64 / 4.0).sqrt();
        assert!((hi - point - eps).abs() < 1e-9 && (point - lo - eps).abs() < 1e-9);
        assert_eq!(confidence, 0.95);
    }

    #[test]
    fn beta_mass_examples() {
        assert!((beta_posterior_mass(1.0, 1.0, 0.25, 0.75) - 0.5).abs() < 1e-12);
        assert!((beta_posterior_mass(2.0, 1.0, 0.0, 0.5) - 0.25).abs() < 1e-12);
        assert!((beta_mean(4.0, 3.0) - 4.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn quantile_examples() {
        assert!(normal_quantile(0.5).abs() < 1e-12);
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
        assert!((normal_quantile(0.8413447460685429) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn chb_stops_at_required_count() {
        let mut st = TestState::new(TestSpecAst::Chb { delta: 0.1, coverage: 0.9 });
        let need = chernoff_samples(0.1, 0.9);
        assert_eq!(need, 150);
        for _ in 1..need {
            assert_eq!(st.update(true).unwrap(), Outcome::Continue);
        }
        assert!(matches!(st.update(false).unwrap(), Outcome::Estimate { .. }));
        assert_eq!(st.n, need);
    }

    #[test]
    fn lai_decides_by_empirical_mean() {
        let st = replay(TestSpecAst::Lai { theta: 0.5, cost: 0.01 }, 0.95, std::iter::repeat(false));
        assert_eq!(st.last(), Outcome::Decided(Hypothesis::H0));
        // n ln 2 >= ln 100 first at n = 7.
        assert_eq!(st.n, 7);
        let st = replay(TestSpecAst::Lai { theta: 0.5, cost: 0.01 }, 0.95, std::iter::repeat(true));
        assert_eq!(st.last(), Outcome::Decided(Hypothesis::H1));
    }

    #[test]
    fn bayes_factor_tests_decide() {
        let bft = TestSpecAst::Bft { theta: 0.5, t: 100.0, alpha: 1.0, beta: 1.0 };
        assert_eq!(replay(bft, 0.95, std::iter::repeat(true)).last(), Outcome::Decided(Hypothesis::H0));
        assert_eq!(replay(bft, 0.95, std::iter::repeat(false)).last(), Outcome::Decided(Hypothesis::H1));
        let bfti = TestSpecAst::Bfti { theta: 0.5, t: 100.0, alpha: 1.0, beta: 1.0, delta: 0.05 };
        assert_eq!(replay(bfti, 0.95, std::iter::repeat(true)).last(), Outcome::Decided(Hypothesis::H0));
        assert_eq!(replay(bfti, 0.95, std::iter::repeat(false)).last(), Outcome::Decided(Hypothesis::H1));
    }

    #[test]
    fn degenerate_best_interval_is_shifted() {
        assert_eq!(centred_interval(0.002, 0.01), (0.0, 0.02));
        assert_eq!(centred_interval(0.999, 0.01), (0.98, 1.0));
    }
}
