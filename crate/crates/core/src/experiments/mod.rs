//! Monte Carlo experiments over pilot draws.
//!
//! Trial `i` of a run seeded with `seed` draws from `SimRng::derived(seed, i)`,
//! and results are reduced in trial order, so a run is bit-identical whether
//! trials execute sequentially or in parallel.

mod checks;
mod monte_carlo;
mod sweep;

pub use checks::{e2e_distortion_check, wishart_check, DistortionTarget, E2eResult, WishartCheck};
pub use monte_carlo::{mc_run, McSummary, MIN_TRIALS};
pub use sweep::{fit_inverse_decay, sweep_nt, DecayFit, SweepPoint, SweepResult};

use std::ops::Range;

use crate::error::{Error, Result};
use crate::numerics::{derive_seed, pairwise_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise runs sequentially.
    #[default]
    Parallel,
}

/// Runs `f(derive_seed(seed, i))` for `i in 0..trials`, returning results in trial order.
///
/// The first failure by trial index is reported, wrapped with its seed.
pub(crate) fn run_trials<T, F>(exec: Execution, trials: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    run_trial_range(exec, 0..trials, seed, f)
}

/// As `run_trials`, for the trial indices in `range`.
pub(crate) fn run_trial_range<T, F>(exec: Execution, range: Range<usize>, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let one = |i: usize| {
        let s = derive_seed(seed, i as u64);
        f(s).map_err(|e| (i, s, e))
    };
    let results: Vec<std::result::Result<T, (usize, u64, Error)>> = match exec {
        Execution::Sequential => range.map(one).collect(),
        Execution::Parallel => parallel_map(range, one),
    };
    results
        .into_iter()
        .map(|r| {
            r.map_err(|(index, seed, e)| Error::TrialFailed {
                index,
                seed,
                source: Box::new(e),
            })
        })
        .collect()
}

#[cfg(feature = "parallel")]
fn parallel_map<T: Send>(range: Range<usize>, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    range.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T: Send>(range: Range<usize>, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    range.map(f).collect()
}

/// Count, mean and sum of squared deviations of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub(crate) const EMPTY: Moments = Moments { n: 0, mean: 0.0, m2: 0.0 };

    pub(crate) fn from_samples(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self::EMPTY;
        }
        let mean = pairwise_sum(xs) / xs.len() as f64;
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        Moments {
            n: xs.len(),
            mean,
            m2: pairwise_sum(&dev),
        }
    }

    /// Pooled moments of two disjoint samples.
    pub(crate) fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        Moments {
            n,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta * delta * self.n as f64 * w,
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over √trials.
    pub stderr: f64,
    /// Samples that entered the mean.
    pub trials: usize,
    pub seed: u64,
    /// Fraction of draws with `D_mmse > (1 − ε) d`.
    pub violated_epsilon_fraction: f64,
    /// Draws excluded because d ≤ d_min.
    pub skipped: usize,
}

impl McEstimate {
    pub(crate) fn from_samples(xs: &[f64], seed: u64) -> Result<Self> {
        Self::from_moments(Moments::from_samples(xs), seed)
    }

    pub(crate) fn from_moments(m: Moments, seed: u64) -> Result<Self> {
        let n = m.n;
        if n < 2 {
            return Err(Error::PreconditionViolated(format!(
                "a Monte Carlo estimate needs at least 2 samples, got {n}"
            )));
        }
        let var = m.m2 / (n - 1) as f64;
        Ok(Self {
            mean: m.mean,
            stderr: (var / n as f64).sqrt(),
            trials: n,
            seed,
            violated_epsilon_fraction: 0.0,
            skipped: 0,
        })
    }

    /// `|mean − target| ≤ k · stderr`.
    pub fn within_sigma(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }

    /// `lo − k σ ≤ mean ≤ hi + k σ`; a missing side is unconstrained.
    pub fn within_band(&self, lo: Option<f64>, hi: Option<f64>, k: f64) -> bool {
        let slack = k * self.stderr;
        lo.is_none_or(|l| self.mean >= l - slack) && hi.is_none_or(|h| self.mean <= h + slack)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_of_known_samples() {
        let e = McEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0], 9).unwrap();
        assert_eq!(e.mean, 2.5);
        assert!((e.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!((e.trials, e.seed), (4, 9));
        assert!(McEstimate::from_samples(&[1.0], 0).is_err());
        assert!(e.within_sigma(2.5 + 2.0 * e.stderr, 3.0));
        assert!(!e.within_band(Some(5.0), None, 3.0));
        assert!(e.within_band(None, None, 0.0));
    }

    #[test]
    fn merged_moments_match_pooled() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let pooled = Moments::from_samples(&xs);
        let merged = xs
            .chunks(64)
            .map(Moments::from_samples)
            .fold(Moments::EMPTY, Moments::merge);
        assert_eq!(merged.n, pooled.n);
        assert!((merged.mean - pooled.mean).abs() < 1e-13);
        assert!((merged.m2 - pooled.m2).abs() < 1e-9 * pooled.m2);
    }

    #[test]
    fn trial_order_is_preserved() {
        let seq = run_trials(Execution::Sequential, 50, 3, |s| Ok(s)).unwrap();
        let par = run_trials(Execution::Parallel, 50, 3, |s| Ok(s)).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq[7], derive_seed(3, 7));
    }

    #[test]
    fn failures_carry_index_and_seed() {
        let bad = derive_seed(1, 4);
        let err = run_trials(Execution::Parallel, 10, 1, |s| {
            if s == bad {
                Err(Error::SingularSystem)
            } else {
                Ok(())
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::TrialFailed { index: 4, seed, .. } if seed == bad));
    }
}
