//! Seeded, per-index random streams and sampling of random variables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::model::{Distribution, ModelError, RandomVariable, Sample};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_170_602;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("discrete distribution still has symbolic probabilities")]
    UnfoldedDiscreteExpression,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Generator for one sample index. The stream for `(seed, index)` does not
/// depend on any other index.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
    draws: u64,
}

impl RandomStream {
    pub fn for_index(seed: u64, index: u64) -> RandomStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        RandomStream { rng, draws: 0 }
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform in [0, 1).
    fn unit(&mut self) -> f64 {
        self.draws += 1;
        self.rng.random::<f64>()
    }

    fn standard_normal(&mut self) -> f64 {
        self.draws += 1;
        self.rng.sample(StandardNormal)
    }
}

pub fn draw(d: &Distribution, rs: &mut RandomStream) -> Result<f64, SamplerError> {
    Ok(match d {
        Distribution::Bernoulli(p) => {
            if rs.unit() < *p {
                1.0
            } else {
                0.0
            }
        }
        Distribution::Uniform(a, b) => (a + (b - a) * rs.unit()).clamp(*a, *b),
        Distribution::Normal(mu, sigma) => mu + sigma * rs.standard_normal(),
        Distribution::Exponential(rate) => -(1.0 - rs.unit()).ln() / rate,
        Distribution::Discrete(entries) => {
            let probs: Vec<f64> =
                entries.iter().map(|(_, p)| p.as_num()).collect::<Option<_>>().ok_or(SamplerError::UnfoldedDiscreteExpression)?;
            let u = rs.unit();
            let mut acc = 0.0;
            let mut last = None;
            for ((v, _), p) in entries.iter().zip(&probs) {
                if *p > 0.0 {
                    acc += p;
                    last = Some(*v);
                    if u < acc {
                        return Ok(*v);
                    }
                }
            }
            // Rounding left the cumulative sum just below one.
            last.unwrap_or(entries[0].0)
        }
    })
}

/// Draws every variable in order, resolving Discrete probabilities against the
/// values drawn so far. `rvs` must come from `extract_rvs`.
pub fn sample_all(rvs: &[RandomVariable], rs: &mut RandomStream) -> Result<Sample, SamplerError> {
    let mut s = Sample::new();
    for rv in rvs {
        let d = rv.distribution.resolve(&rv.name, &|n| s.get(n))?;
        let v = draw(&d, rs)?;
        debug_assert!(d.supports(v), "{} drew {v} outside its support", rv.name);
        s.push(rv.name.clone(), v);
    }
    Ok(s)
}
