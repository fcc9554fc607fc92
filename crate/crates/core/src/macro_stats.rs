//! N-pair batches and the macroscopic observables `A`, `B`, `B'`.
//!
//! Every batch draws from its own ChaCha stream derived from
//! `(seed, strategy, batch index)`, so parallel generation is reproducible
//! regardless of scheduling.

use std::io::{self, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{cell_signs, TripleCoupling};
use crate::error::{check_range, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Strategy {
    AlwaysA,
    AlwaysAprime,
}

impl Strategy {
    pub const BOTH: [Strategy; 2] = [Strategy::AlwaysA, Strategy::AlwaysAprime];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::AlwaysA => "ALWAYS_A",
            Strategy::AlwaysAprime => "ALWAYS_APRIME",
        }
    }

    fn stream_bit(self) -> u64 {
        match self {
            Strategy::AlwaysA => 0,
            Strategy::AlwaysAprime => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub n_pairs: usize,
    pub alice_strategy: Strategy,
    pub seed: u64,
}

impl BatchConfig {
    pub fn new(n_pairs: usize, alice_strategy: Strategy, seed: u64) -> Result<Self> {
        if n_pairs == 0 {
            return Err(Error::Precondition("a batch needs at least one pair".into()));
        }
        Ok(Self {
            n_pairs,
            alice_strategy,
            seed,
        })
    }
}

/// Additive Gaussian readout noise on `B` and `B'`, independent per value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel { sigma: 0.0 };

    pub fn new(sigma: f64) -> Result<Self> {
        check_range("sigma", sigma, 0.0, f64::MAX)?;
        Ok(Self { sigma })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroObservation {
    pub a_mean: f64,
    pub b_mean: f64,
    pub bp_mean: f64,
    pub noisy_b: f64,
    pub noisy_bp: f64,
}

/// RNG for one batch.
pub fn batch_rng(seed: u64, strategy: Strategy, batch_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch_index << 1 | strategy.stream_bit());
    rng
}

/// Pre-built sampler for one coupling.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    cells: WeightedIndex<f64>,
    noise: Option<Normal<f64>>,
    n_pairs: usize,
}

impl BatchSampler {
    pub fn new(coupling: &TripleCoupling, n_pairs: usize, noise: NoiseModel) -> Result<Self> {
        if n_pairs == 0 {
            return Err(Error::Precondition("a batch needs at least one pair".into()));
        }
        let cells = WeightedIndex::new(coupling.pmf.iter().map(|&p| p.max(0.0)))
            .map_err(|e| Error::InvalidPmf(e.to_string()))?;
        let noise = if noise.sigma > 0.0 {
            Some(Normal::new(0.0, noise.sigma).map_err(|e| Error::Precondition(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            cells,
            noise,
            n_pairs,
        })
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> MacroObservation {
        let (mut sa, mut sb, mut sbp) = (0i64, 0i64, 0i64);
        for _ in 0..self.n_pairs {
            let (i, j, jp) = cell_signs(self.cells.sample(rng));
            sa += i;
            sb += j;
            sbp += jp;
        }
        let n = self.n_pairs as f64;
        let (a_mean, b_mean, bp_mean) = (sa as f64 / n, sb as f64 / n, sbp as f64 / n);
        let (noisy_b, noisy_bp) = match &self.noise {
            Some(d) => (b_mean + d.sample(rng), bp_mean + d.sample(rng)),
            None => (b_mean, bp_mean),
        };
        MacroObservation {
            a_mean,
            b_mean,
            bp_mean,
            noisy_b,
            noisy_bp,
        }
    }
}

fn selected<'a>(
    k_a: &'a TripleCoupling,
    k_ap: &'a TripleCoupling,
    strategy: Strategy,
) -> &'a TripleCoupling {
    match strategy {
        Strategy::AlwaysA => k_a,
        Strategy::AlwaysAprime => k_ap,
    }
}

/// One batch (index 0 of the configured seed).
pub fn sample_batch(
    k_a: &TripleCoupling,
    k_ap: &TripleCoupling,
    cfg: &BatchConfig,
    noise: NoiseModel,
) -> Result<MacroObservation> {
    let sampler = BatchSampler::new(selected(k_a, k_ap, cfg.alice_strategy), cfg.n_pairs, noise)?;
    Ok(sampler.sample(&mut batch_rng(cfg.seed, cfg.alice_strategy, 0)))
}

/// Batches `0..count` in index order, generated in parallel.
pub fn sample_batches(
    k_a: &TripleCoupling,
    k_ap: &TripleCoupling,
    cfg: &BatchConfig,
    noise: NoiseModel,
    count: usize,
) -> Result<Vec<MacroObservation>> {
    let sampler = BatchSampler::new(selected(k_a, k_ap, cfg.alice_strategy), cfg.n_pairs, noise)?;
    Ok((0..count as u64)
        .into_par_iter()
        .map(|idx| sampler.sample(&mut batch_rng(cfg.seed, cfg.alice_strategy, idx)))
        .collect())
}

/// Exact law of `A = 1 - 2n/N` for `N` fair ±1 outcomes, ordered from
/// `A = -1` up to `A = 1`.
pub fn a_distribution(n_pairs: usize) -> Result<Vec<(f64, f64)>> {
    if n_pairs == 0 {
        return Err(Error::Precondition("N must be at least 1".into()));
    }
    let n = n_pairs;
    let ln2 = std::f64::consts::LN_2;
    let mut ln_fact = vec![0.0f64; n + 1];
    for k in 1..=n {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    // n counts -1 outcomes; iterate from n = N (A = -1) down to 0.
    Ok((0..=n)
        .rev()
        .map(|minus| {
            let a = 1.0 - 2.0 * minus as f64 / n as f64;
            let ln_p = ln_fact[n] - ln_fact[minus] - ln_fact[n - minus] - n as f64 * ln2;
            (a, ln_p.exp())
        })
        .collect())
}

/// `(B+B')² + (B-B')² - 2B² - 2B'²` on the noiseless means.
pub fn parallelogram_check(obs: &MacroObservation) -> f64 {
    let (b, bp) = (obs.b_mean, obs.bp_mean);
    (b + bp).powi(2) + (b - bp).powi(2) - 2.0 * b * b - 2.0 * bp * bp
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// `(estimate - expected) / std_error`; zero when both agree exactly.
    pub z_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSquareReport {
    pub expected: f64,
    pub b: MomentEstimate,
    pub bp: MomentEstimate,
}

pub const MIN_MEAN_SQUARE_SAMPLES: usize = 100;

fn moment(values: impl Iterator<Item = f64> + Clone, expected: f64) -> MomentEstimate {
    let e = empirical_iter(values).expect("checked nonempty");
    let std_error = e.variance.map_or(0.0, |v| (v / e.count as f64).sqrt());
    let diff = e.mean - expected;
    let z_score = if diff == 0.0 {
        0.0
    } else if std_error == 0.0 {
        diff.signum() * f64::INFINITY
    } else {
        diff / std_error
    };
    MomentEstimate {
        estimate: e.mean,
        std_error,
        z_score,
    }
}

/// Estimates `<B²>` and `<B'²>` and compares both with `1/N`.
pub fn mean_square_check(samples: &[MacroObservation], n_pairs: usize) -> Result<MeanSquareReport> {
    if samples.len() < MIN_MEAN_SQUARE_SAMPLES {
        return Err(Error::Precondition(format!(
            "mean-square check needs at least {MIN_MEAN_SQUARE_SAMPLES} batches, got {}",
            samples.len()
        )));
    }
    if n_pairs == 0 {
        return Err(Error::Precondition("N must be at least 1".into()));
    }
    let expected = 1.0 / n_pairs as f64;
    Ok(MeanSquareReport {
        expected,
        b: moment(samples.iter().map(|o| o.b_mean * o.b_mean), expected),
        bp: moment(samples.iter().map(|o| o.bp_mean * o.bp_mean), expected),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    pub samples: Vec<f64>,
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance; `None` for a single sample.
    pub variance: Option<f64>,
}

impl EmpiricalDistribution {
    /// Standard error of the variance estimate under a normal approximation
    /// using the sample fourth central moment.
    pub fn variance_std_error(&self) -> Option<f64> {
        let var = self.variance?;
        let n = self.count as f64;
        let m4 = self.samples.iter().map(|x| (x - self.mean).powi(4)).sum::<f64>() / n;
        Some(((m4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt())
    }
}

struct Summary {
    count: usize,
    mean: f64,
    variance: Option<f64>,
}

fn empirical_iter(values: impl Iterator<Item = f64> + Clone) -> Option<Summary> {
    let (count, sum) = values.clone().fold((0usize, 0.0), |(c, s), x| (c + 1, s + x));
    if count == 0 {
        return None;
    }
    let mean = sum / count as f64;
    let variance = (count > 1)
        .then(|| values.map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64);
    Some(Summary {
        count,
        mean,
        variance,
    })
}

pub fn empirical(samples: Vec<f64>) -> Result<EmpiricalDistribution> {
    let s = empirical_iter(samples.iter().copied())
        .ok_or_else(|| Error::Precondition("empirical distribution of no samples".into()))?;
    Ok(EmpiricalDistribution {
        count: s.count,
        mean: s.mean,
        variance: s.variance,
        samples,
    })
}

/// One row of the batch CSV dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchRecord {
    pub batch_index: u64,
    pub strategy: Strategy,
    pub n_pairs: usize,
    pub observation: MacroObservation,
    pub seed: u64,
}

pub const BATCH_CSV_HEADER: &str = "batch_index,strategy,N,A,B,Bprime,noisyB,noisyBprime,seed";

/// Formats with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_batch_csv<W: Write>(mut w: W, records: &[BatchRecord]) -> io::Result<()> {
    writeln!(w, "{BATCH_CSV_HEADER}")?;
    for r in records {
        let o = &r.observation;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.batch_index,
            r.strategy.label(),
            r.n_pairs,
            fmt_f64(o.a_mean),
            fmt_f64(o.b_mean),
            fmt_f64(o.bp_mean),
            fmt_f64(o.noisy_b),
            fmt_f64(o.noisy_bp),
            r.seed
        )?;
    }
    Ok(())
}
