//! Alice signals by measuring `a` on every pair or `a'` on every pair; Bob
//! tries to tell the two apart from his readouts of `B` and `B'`.
//!
//! Bob's data for one batch is `(noisy B, noisy B')`. Three detectors turn
//! groups of batches into guesses, and [`exact_tv_distance`] gives the
//! total-variation distance between the two per-batch observation laws,
//! which caps the advantage of any per-batch decision at `(1 + TV)/2`.

use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::box_model::CorrelationTable;
use crate::coupling::{table_extremal_couplings, TripleCoupling};
use crate::error::{check_range, Error, Result};
use crate::macro_stats::{
    batch_rng, BatchSampler, MacroObservation, NoiseModel, Strategy,
};

/// Largest `N` accepted by [`exact_tv_distance`].
pub const MAX_EXACT_TV_PAIRS: usize = 12;

/// Largest `N` for which the lattice law is enumerated at all.
pub const MAX_LATTICE_PAIRS: usize = 2048;

pub const DEFAULT_GROUP_SIZE: usize = 20;

/// Interval width below which an interval around 0.5 counts as evidence of
/// no signal.
pub const DEFAULT_RESOLUTION: f64 = 0.02;

const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Detector {
    CovarianceSign,
    PostselectExtremes,
    Likelihood,
}

impl Detector {
    pub fn short_name(self) -> &'static str {
        match self {
            Detector::CovarianceSign => "cov",
            Detector::PostselectExtremes => "postselect",
            Detector::Likelihood => "lr",
        }
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cov" | "COVARIANCE_SIGN" => Ok(Detector::CovarianceSign),
            "postselect" | "POSTSELECT_EXTREMES" => Ok(Detector::PostselectExtremes),
            "lr" | "LIKELIHOOD" => Ok(Detector::Likelihood),
            other => Err(Error::Precondition(format!(
                "unknown detector {other:?}; expected cov, postselect or lr"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n_pairs: usize,
    /// Batches simulated per strategy.
    pub repetitions: usize,
    pub noise: NoiseModel,
    pub detector: Detector,
    pub postselect_threshold: f64,
    /// Batches per decision.
    pub group_size: usize,
    /// Maximal interval width for a NO_SIGNALLING verdict.
    pub resolution: f64,
}

impl ProtocolConfig {
    pub fn new(
        n_pairs: usize,
        repetitions: usize,
        noise: NoiseModel,
        detector: Detector,
    ) -> Result<Self> {
        Self {
            n_pairs,
            repetitions,
            noise,
            detector,
            postselect_threshold: 1.0,
            group_size: DEFAULT_GROUP_SIZE.min(repetitions.max(1)),
            resolution: DEFAULT_RESOLUTION,
        }
        .validated()
    }

    pub fn with_group_size(mut self, group_size: usize) -> Result<Self> {
        self.group_size = group_size;
        self.validated()
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        self.postselect_threshold = threshold;
        self.validated()
    }

    pub fn with_resolution(mut self, resolution: f64) -> Result<Self> {
        self.resolution = resolution;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.n_pairs == 0 {
            return Err(Error::Precondition("N must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Precondition("repetitions must be at least 1".into()));
        }
        if self.group_size == 0 || self.group_size > self.repetitions {
            return Err(Error::Precondition(format!(
                "group size {} must lie in 1..={}",
                self.group_size, self.repetitions
            )));
        }
        check_range("sigma", self.noise.sigma, 0.0, f64::MAX)?;
        if !(self.postselect_threshold > 0.0 && self.postselect_threshold <= 1.0) {
            return Err(Error::Domain {
                name: "postselect threshold",
                value: self.postselect_threshold,
                lo: 0.0,
                hi: 1.0,
            });
        }
        check_range("resolution", self.resolution, f64::MIN_POSITIVE, 1.0)?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Signalling,
    NoSignalling,
    Inconclusive,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Signalling => "SIGNALLING",
            Verdict::NoSignalling => "NO_SIGNALLING",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignallingReport {
    /// Fraction of decisions naming Alice's actual strategy.
    pub advantage: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Batches that entered a decision.
    pub n_used: usize,
    pub decisions: usize,
    pub verdict: Verdict,
    /// Independent decisions a majority vote needs to err with probability
    /// at most 1%, by Hoeffding's inequality.
    pub suggested_repetitions: Option<u64>,
}

impl SignallingReport {
    pub fn std_error(&self) -> f64 {
        if self.decisions == 0 {
            return f64::INFINITY;
        }
        (self.advantage * (1.0 - self.advantage) / self.decisions as f64).sqrt()
    }
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

pub fn verdict_for(ci_low: f64, ci_high: f64, resolution: f64) -> Verdict {
    if ci_low > 0.5 {
        Verdict::Signalling
    } else if ci_low <= 0.5 && 0.5 <= ci_high && ci_high - ci_low < resolution {
        Verdict::NoSignalling
    } else {
        Verdict::Inconclusive
    }
}

/// Hoeffding count `ln(1/δ) / (2 (adv - 1/2)²)`.
pub fn suggested_repetitions(advantage: f64, delta: f64) -> Option<u64> {
    let edge = advantage - 0.5;
    (edge > 0.0).then(|| ((1.0 / delta).ln() / (2.0 * edge * edge)).ceil() as u64)
}

/// Best single-decision success probability for two equiprobable
/// hypotheses at total-variation distance `tv`.
pub fn optimal_advantage(tv: f64) -> Result<f64> {
    check_range("total variation", tv, 0.0, 1.0)?;
    Ok((1.0 + tv) / 2.0)
}

/// Batches per decision for a likelihood-ratio vote to err with probability
/// at most `target_error`, from the Bhattacharyya bound
/// `P_err <= ½ BC^g` with `BC <= √(1 - TV²)`.
pub fn group_size_for(tv: f64, target_error: f64) -> Result<usize> {
    check_range("total variation", tv, 0.0, 1.0)?;
    check_range("target error", target_error, f64::MIN_POSITIVE, 0.5)?;
    if tv >= 1.0 {
        return Ok(1);
    }
    if tv <= 0.0 {
        return Err(Error::Precondition("identical laws cannot be told apart".into()));
    }
    let per_batch = -(1.0 - tv * tv).ln() / 2.0;
    Ok(((1.0 / (2.0 * target_error)).ln() / per_batch).ceil().max(1.0) as usize)
}

/// Guesses `AlwaysA` iff `B` and `B'` covary positively across the group.
///
/// Groups of two or more use the sample covariance; a single batch uses the
/// product `B·B'` (the covariance about the known zero means). A zero
/// covariance is read as `AlwaysA`.
pub fn detector_covariance_sign(observations: &[MacroObservation]) -> Result<Strategy> {
    let n = observations.len();
    let cov = match n {
        0 => return Err(Error::Precondition("covariance of an empty group".into())),
        1 => observations[0].noisy_b * observations[0].noisy_bp,
        _ => {
            let mb = observations.iter().map(|o| o.noisy_b).sum::<f64>() / n as f64;
            let mbp = observations.iter().map(|o| o.noisy_bp).sum::<f64>() / n as f64;
            observations
                .iter()
                .map(|o| (o.noisy_b - mb) * (o.noisy_bp - mbp))
                .sum::<f64>()
                / (n - 1) as f64
        }
    };
    Ok(if cov >= 0.0 {
        Strategy::AlwaysA
    } else {
        Strategy::AlwaysAprime
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostselectOutcome {
    /// `None` when no batch survives.
    pub guess: Option<Strategy>,
    pub n_surviving: usize,
}

/// Keeps batches with `|B| >= t` and `|B'| >= t` and guesses `AlwaysA` iff
/// at least half of them have `B` and `B'` of equal sign.
pub fn detector_postselect(observations: &[MacroObservation], threshold: f64) -> PostselectOutcome {
    let (mut agree, mut survivors) = (0usize, 0usize);
    for o in observations {
        if o.noisy_b.abs() >= threshold && o.noisy_bp.abs() >= threshold {
            survivors += 1;
            if (o.noisy_b > 0.0) == (o.noisy_bp > 0.0) {
                agree += 1;
            }
        }
    }
    let guess = (survivors > 0).then(|| {
        if 2 * agree >= survivors {
            Strategy::AlwaysA
        } else {
            Strategy::AlwaysAprime
        }
    });
    PostselectOutcome {
        guess,
        n_surviving: survivors,
    }
}

/// Exact law of `(B, B')` for one batch, `probs[kb * (N+1) + kbp]` where
/// `kb`, `kbp` count the `-1` outcomes; `B = 1 - 2 kb / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeLaw {
    pub n_pairs: usize,
    pub probs: Vec<f64>,
}

impl LatticeLaw {
    pub fn new(coupling: &TripleCoupling, n_pairs: usize) -> Result<Self> {
        if n_pairs == 0 || n_pairs > MAX_LATTICE_PAIRS {
            return Err(Error::Precondition(format!(
                "lattice law needs 1 <= N <= {MAX_LATTICE_PAIRS}, got {n_pairs}"
            )));
        }
        let pair = coupling.bob_pair_law();
        let side = n_pairs + 1;
        let mut cur = vec![0.0; side * side];
        cur[0] = 1.0;
        for m in 0..n_pairs {
            let mut next = vec![0.0; side * side];
            for kb in 0..=m {
                for kbp in 0..=m {
                    let p = cur[kb * side + kbp];
                    if p == 0.0 {
                        continue;
                    }
                    for (j, row) in pair.iter().enumerate() {
                        for (jp, &q) in row.iter().enumerate() {
                            if q > 0.0 {
                                next[(kb + j) * side + kbp + jp] += p * q;
                            }
                        }
                    }
                }
            }
            cur = next;
        }
        Ok(Self {
            n_pairs,
            probs: cur,
        })
    }

    pub fn side(&self) -> usize {
        self.n_pairs + 1
    }

    pub fn value(&self, k: usize) -> f64 {
        1.0 - 2.0 * k as f64 / self.n_pairs as f64
    }

    pub fn prob(&self, kb: usize, kbp: usize) -> f64 {
        self.probs[kb * self.side() + kbp]
    }

    /// Lattice index of a value, if it lies on the lattice.
    pub fn index_of(&self, v: f64) -> Option<usize> {
        let k = self.n_pairs as f64 * (1.0 - v) / 2.0;
        let r = k.round();
        ((k - r).abs() < 1e-9 && (0.0..=self.n_pairs as f64).contains(&r)).then_some(r as usize)
    }

    /// `(B, B', probability)` for every point with positive mass.
    pub fn support(&self) -> Vec<(f64, f64, f64)> {
        let side = self.side();
        (0..side * side)
            .filter(|&k| self.probs[k] > 0.0)
            .map(|k| (self.value(k / side), self.value(k % side), self.probs[k]))
            .collect()
    }
}

fn discrete_tv(p: &LatticeLaw, q: &LatticeLaw) -> f64 {
    0.5 * p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
}

/// Grid steps per noise standard deviation in the TV quadrature.
const TV_STEPS_PER_SIGMA: f64 = 32.0;
/// Half-width of the quadrature window beyond `[-1, 1]`, in units of sigma.
const TV_WINDOW_SIGMAS: f64 = 10.0;

/// TV between the two lattice laws each convolved with an isotropic
/// Gaussian of standard deviation `sigma`, by midpoint quadrature.
pub(crate) fn smoothed_tv(p: &LatticeLaw, q: &LatticeLaw, sigma: f64, steps_per_sigma: f64) -> f64 {
    let side = p.side();
    let diff: Vec<f64> = p.probs.iter().zip(&q.probs).map(|(a, b)| a - b).collect();
    let h = sigma / steps_per_sigma;
    let lo = -1.0 - TV_WINDOW_SIGMAS * sigma;
    let m = ((2.0 + 2.0 * TV_WINDOW_SIGMAS * sigma) / h).ceil() as usize;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let values: Vec<f64> = (0..side).map(|k| p.value(k)).collect();
    // kernel[t][k] = density of N(values[k], sigma²) at grid point t
    let kernel: Vec<Vec<f64>> = (0..m)
        .map(|t| {
            let x = lo + (t as f64 + 0.5) * h;
            values
                .iter()
                .map(|&u| {
                    let z = (x - u) / sigma;
                    norm * (-0.5 * z * z).exp()
                })
                .collect()
        })
        .collect();
    // row_mix[t][l] = Σ_k kernel[t][k] diff[k][l]
    let row_mix: Vec<Vec<f64>> = kernel
        .par_iter()
        .map(|g| {
            let mut out = vec![0.0; side];
            for (kb, &w) in g.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (l, o) in out.iter_mut().enumerate() {
                    *o += w * diff[kb * side + l];
                }
            }
            out
        })
        .collect();
    let total: f64 = row_mix
        .par_iter()
        .map(|r| {
            kernel
                .iter()
                .map(|g| r.iter().zip(g).map(|(a, b)| a * b).sum::<f64>().abs())
                .sum::<f64>()
        })
        .sum();
    0.5 * total * h * h
}

/// Total-variation distance between Bob's per-batch observation laws under
/// the two strategies.
///
/// With `sigma = 0` this is an exact sum over the `(N+1)²` lattice points.
/// With noise the lattice laws are smoothed by the Gaussian kernel and the
/// distance integrated numerically to about 1e-5 (the kink of `|p - q|`
/// limits the midpoint rule to second order); when the kernel is so narrow that
/// neighbouring lattice points cannot overlap (`sigma <= 1/(12N)`) the
/// lattice value is exact to far below double precision.
pub fn exact_tv_distance(
    k_a: &TripleCoupling,
    k_ap: &TripleCoupling,
    n_pairs: usize,
    noise: NoiseModel,
) -> Result<f64> {
    if n_pairs == 0 || n_pairs > MAX_EXACT_TV_PAIRS {
        return Err(Error::Precondition(format!(
            "exact TV enumeration needs 1 <= N <= {MAX_EXACT_TV_PAIRS}, got {n_pairs}"
        )));
    }
    check_range("sigma", noise.sigma, 0.0, f64::MAX)?;
    let p = LatticeLaw::new(k_a, n_pairs)?;
    let q = LatticeLaw::new(k_ap, n_pairs)?;
    let tv = if noise.sigma <= 1.0 / (12.0 * n_pairs as f64) {
        discrete_tv(&p, &q)
    } else {
        smoothed_tv(&p, &q, noise.sigma, TV_STEPS_PER_SIGMA)
    };
    Ok(tv.clamp(0.0, 1.0))
}

/// Likelihood-ratio test against the exact per-batch laws.
#[derive(Debug, Clone)]
pub struct LikelihoodDetector {
    law_a: LatticeLaw,
    law_ap: LatticeLaw,
    sigma: f64,
}

impl LikelihoodDetector {
    pub fn new(
        k_a: &TripleCoupling,
        k_ap: &TripleCoupling,
        n_pairs: usize,
        noise: NoiseModel,
    ) -> Result<Self> {
        Ok(Self {
            law_a: LatticeLaw::new(k_a, n_pairs)?,
            law_ap: LatticeLaw::new(k_ap, n_pairs)?,
            sigma: noise.sigma,
        })
    }

    fn log_density(&self, law: &LatticeLaw, o: &MacroObservation) -> f64 {
        if self.sigma == 0.0 {
            return match (law.index_of(o.noisy_b), law.index_of(o.noisy_bp)) {
                (Some(kb), Some(kbp)) => law.prob(kb, kbp).ln(),
                _ => f64::NEG_INFINITY,
            };
        }
        let side = law.side();
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        let ex: Vec<f64> = (0..side).map(|k| -(o.noisy_b - law.value(k)).powi(2) * inv).collect();
        let ey: Vec<f64> = (0..side).map(|k| -(o.noisy_bp - law.value(k)).powi(2) * inv).collect();
        let mut terms = Vec::with_capacity(side * side);
        for (kb, &lx) in ex.iter().enumerate() {
            for (kbp, &ly) in ey.iter().enumerate() {
                let p = law.prob(kb, kbp);
                if p > 0.0 {
                    terms.push(p.ln() + lx + ly);
                }
            }
        }
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return max;
        }
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }

    /// `ln p_a(o) - ln p_a'(o)`; infinite when one law excludes `o`.
    pub fn log_ratio(&self, o: &MacroObservation) -> f64 {
        let la = self.log_density(&self.law_a, o);
        let lap = self.log_density(&self.law_ap, o);
        if la == lap {
            0.0
        } else {
            la - lap
        }
    }

    /// Sum of log ratios over the group; ties go to `AlwaysA`.
    pub fn guess(&self, observations: &[MacroObservation]) -> Strategy {
        let mut total = 0.0;
        for o in observations {
            let r = self.log_ratio(o);
            total += r;
            if total.is_nan() {
                total = 0.0;
            }
        }
        if total >= 0.0 {
            Strategy::AlwaysA
        } else {
            Strategy::AlwaysAprime
        }
    }
}

/// Simulates `repetitions` batches under each strategy, groups them, and
/// scores the configured detector.
pub fn run_protocol(
    k_a: &TripleCoupling,
    k_ap: &TripleCoupling,
    cfg: &ProtocolConfig,
    seed: u64,
) -> Result<SignallingReport> {
    let cfg = cfg.validated()?;
    let likelihood = match cfg.detector {
        Detector::Likelihood => Some(LikelihoodDetector::new(k_a, k_ap, cfg.n_pairs, cfg.noise)?),
        _ => None,
    };
    let groups = cfg.repetitions / cfg.group_size;
    let mut correct = 0usize;
    let mut decisions = 0usize;
    let mut used = 0usize;
    for strategy in Strategy::BOTH {
        let coupling = match strategy {
            Strategy::AlwaysA => k_a,
            Strategy::AlwaysAprime => k_ap,
        };
        let sampler = BatchSampler::new(coupling, cfg.n_pairs, cfg.noise)?;
        let tallies: Vec<(usize, usize, usize)> = (0..groups)
            .into_par_iter()
            .map(|g| {
                let obs: Vec<MacroObservation> = (0..cfg.group_size)
                    .map(|k| {
                        let idx = (g * cfg.group_size + k) as u64;
                        sampler.sample(&mut batch_rng(seed, strategy, idx))
                    })
                    .collect();
                let (guess, n_used) = match cfg.detector {
                    Detector::CovarianceSign => (
                        Some(detector_covariance_sign(&obs).expect("nonempty group")),
                        obs.len(),
                    ),
                    Detector::PostselectExtremes => {
                        let out = detector_postselect(&obs, cfg.postselect_threshold);
                        (out.guess, out.n_surviving)
                    }
                    Detector::Likelihood => (
                        Some(likelihood.as_ref().expect("built above").guess(&obs)),
                        obs.len(),
                    ),
                };
                match guess {
                    Some(s) => (usize::from(s == strategy), 1, n_used),
                    None => (0, 0, n_used),
                }
            })
            .collect();
        for (c, d, u) in tallies {
            correct += c;
            decisions += d;
            used += u;
        }
    }
    let (advantage, (ci_low, ci_high)) = if decisions == 0 {
        (0.5, (0.0, 1.0))
    } else {
        (
            correct as f64 / decisions as f64,
            wilson_interval(correct, decisions),
        )
    };
    let verdict = if decisions == 0 {
        Verdict::Inconclusive
    } else {
        verdict_for(ci_low, ci_high, cfg.resolution)
    };
    Ok(SignallingReport {
        advantage,
        ci_low,
        ci_high,
        n_used: used,
        decisions,
        verdict,
        suggested_repetitions: suggested_repetitions(advantage, 0.01),
    })
}

/// Detector settings shared by every cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub detector: Detector,
    pub postselect_threshold: f64,
    pub group_size: usize,
    pub resolution: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            detector: Detector::CovarianceSign,
            postselect_threshold: 1.0,
            group_size: 1,
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// `C(a,b)` of the swept table; the family parameter for `(C, C, C, -C)`.
    pub c: f64,
    pub n_pairs: usize,
    pub repetitions: usize,
    pub sigma: f64,
    pub detector: Detector,
    pub group_size: usize,
    /// Seed handed to [`run_protocol`] for this cell.
    pub seed: u64,
    pub report: SignallingReport,
    /// Per-batch TV, when `N` is small enough to enumerate.
    pub exact_tv: Option<f64>,
}

impl SweepRow {
    /// `(1 + TV)/2` when it bounds this row's decisions: one batch per
    /// decision and every batch decided (no post-selection).
    pub fn advantage_ceiling(&self) -> Option<f64> {
        if self.group_size != 1 || self.detector == Detector::PostselectExtremes {
            return None;
        }
        self.exact_tv.map(|tv| (1.0 + tv) / 2.0)
    }
}

/// Seed of sweep cell `k`, a splitmix64 step away from the run seed.
pub fn cell_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs the protocol on every `(N, R, sigma)` cell with the table's
/// scalar-extremal couplings.
pub fn resource_sweep(
    table: &CorrelationTable,
    n_list: &[usize],
    r_list: &[usize],
    sigma_list: &[f64],
    settings: &SweepSettings,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if n_list.is_empty() || r_list.is_empty() || sigma_list.is_empty() {
        return Err(Error::Precondition("sweep lists must be nonempty".into()));
    }
    let (k_a, k_ap) = table_extremal_couplings(table)?;
    let mut rows = Vec::new();
    let mut cell = 0u64;
    for &n in n_list {
        for &sigma in sigma_list {
            let noise = NoiseModel::new(sigma)?;
            let exact_tv = if n <= MAX_EXACT_TV_PAIRS {
                Some(exact_tv_distance(&k_a, &k_ap, n, noise)?)
            } else {
                None
            };
            for &r in r_list {
                let cfg = ProtocolConfig {
                    n_pairs: n,
                    repetitions: r,
                    noise,
                    detector: settings.detector,
                    postselect_threshold: settings.postselect_threshold,
                    group_size: settings.group_size.min(r),
                    resolution: settings.resolution,
                };
                let row_seed = cell_seed(seed, cell);
                let report = run_protocol(&k_a, &k_ap, &cfg, row_seed)?;
                cell += 1;
                rows.push(SweepRow {
                    c: table.c_ab,
                    n_pairs: n,
                    repetitions: r,
                    sigma,
                    detector: settings.detector,
                    group_size: cfg.group_size,
                    seed: row_seed,
                    report,
                    exact_tv,
                });
            }
        }
    }
    Ok(rows)
}

pub const SWEEP_CSV_HEADER: &str = "C,N,R,sigma,detector,advantage,ci_low,ci_high,n_used,verdict";

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.c,
            r.n_pairs,
            r.repetitions,
            r.sigma,
            r.detector.short_name(),
            r.report.advantage,
            r.report.ci_low,
            r.report.ci_high,
            r.report.n_used,
            r.report.verdict.label()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::make_scalar_extremal_couplings;

    fn obs(b: f64, bp: f64) -> MacroObservation {
        MacroObservation {
            a_mean: 0.0,
            b_mean: b,
            bp_mean: bp,
            noisy_b: b,
            noisy_bp: bp,
        }
    }

    #[test]
    fn optimal_advantage_examples() {
        assert_eq!(optimal_advantage(0.0).unwrap(), 0.5);
        assert_eq!(optimal_advantage(1.0).unwrap(), 1.0);
        assert!((optimal_advantage(0.3).unwrap() - 0.65).abs() < 1e-15);
        assert!(optimal_advantage(1.5).is_err());
    }

    #[test]
    fn covariance_detector_examples() {
        let corr = [obs(0.5, 0.5), obs(-0.25, -0.25), obs(1.0, 1.0)];
        assert_eq!(detector_covariance_sign(&corr).unwrap(), Strategy::AlwaysA);
        let anti = [obs(0.5, -0.5), obs(-0.25, 0.25), obs(1.0, -1.0)];
        assert_eq!(detector_covariance_sign(&anti).unwrap(), Strategy::AlwaysAprime);
        let same = [obs(0.3, -0.7); 4];
        assert_eq!(detector_covariance_sign(&same).unwrap(), Strategy::AlwaysA);
        assert!(detector_covariance_sign(&[]).is_err());
    }

    #[test]
    fn postselect_detector_examples() {
        let group = [obs(1.0, 1.0), obs(-1.0, -1.0), obs(0.5, 0.5), obs(1.0, -0.2)];
        let out = detector_postselect(&group, 1.0);
        assert_eq!(out.n_surviving, 2);
        assert_eq!(out.guess, Some(Strategy::AlwaysA));
        let out = detector_postselect(&[obs(1.0, -1.0)], 1.0);
        assert_eq!(out.guess, Some(Strategy::AlwaysAprime));
        let out = detector_postselect(&[obs(0.2, 0.2)], 1.0);
        assert_eq!((out.guess, out.n_surviving), (None, 0));
    }

    #[test]
    fn lattice_law_of_pr_couplings() {
        let (ka, kap) = make_scalar_extremal_couplings(1.0).unwrap();
        let la = LatticeLaw::new(&ka, 8).unwrap();
        for (b, bp, _) in la.support() {
            assert_eq!(b, bp);
        }
        let lap = LatticeLaw::new(&kap, 8).unwrap();
        for (b, bp, _) in lap.support() {
            assert_eq!(b, -bp);
        }
        assert!((la.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(la.index_of(0.25), Some(3));
        assert_eq!(la.index_of(0.3), None);
    }

    #[test]
    fn tv_precondition_and_identity() {
        let (ka, kap) = make_scalar_extremal_couplings(0.9).unwrap();
        assert!(exact_tv_distance(&ka, &kap, 13, NoiseModel::NONE).is_err());
        assert_eq!(exact_tv_distance(&ka, &ka, 6, NoiseModel::NONE).unwrap(), 0.0);
        let noisy = NoiseModel::new(0.2).unwrap();
        assert!(exact_tv_distance(&kap, &kap, 6, noisy).unwrap() < 1e-12);
    }

    #[test]
    fn pr_tv_counts_the_shared_origin() {
        // Even N: both laws put C(N, N/2)/2^N on B = B' = 0.
        let (ka, kap) = make_scalar_extremal_couplings(1.0).unwrap();
        let tv = exact_tv_distance(&ka, &kap, 4, NoiseModel::NONE).unwrap();
        assert!((tv - (1.0 - 6.0 / 16.0)).abs() < 1e-15);
        // Odd N: disjoint supports.
        assert_eq!(exact_tv_distance(&ka, &kap, 3, NoiseModel::NONE).unwrap(), 1.0);
    }

    #[test]
    fn quadrature_is_converged() {
        let (ka, kap) = make_scalar_extremal_couplings(0.8).unwrap();
        let p = LatticeLaw::new(&ka, 6).unwrap();
        let q = LatticeLaw::new(&kap, 6).unwrap();
        for sigma in [0.05, 0.2, 1.0] {
            let coarse = smoothed_tv(&p, &q, sigma, TV_STEPS_PER_SIGMA);
            let fine = smoothed_tv(&p, &q, sigma, 4.0 * TV_STEPS_PER_SIGMA);
            assert!((coarse - fine).abs() < 1e-5, "sigma {sigma}: {coarse} vs {fine}");
        }
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let (lo, hi) = wilson_interval(990, 1000);
        assert!(lo < 0.99 && 0.99 < hi);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
        let (lo, hi) = wilson_interval(10, 10);
        assert!(lo > 0.6 && hi == 1.0);
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(verdict_for(0.51, 0.6, 0.02), Verdict::Signalling);
        assert_eq!(verdict_for(0.495, 0.505, 0.02), Verdict::NoSignalling);
        assert_eq!(verdict_for(0.4, 0.6, 0.02), Verdict::Inconclusive);
        assert_eq!(verdict_for(0.3, 0.35, 0.02), Verdict::Inconclusive);
    }

    #[test]
    fn config_validation() {
        let noise = NoiseModel::new(0.1).unwrap();
        assert!(ProtocolConfig::new(0, 10, noise, Detector::Likelihood).is_err());
        assert!(ProtocolConfig::new(4, 0, noise, Detector::Likelihood).is_err());
        let cfg = ProtocolConfig::new(4, 10, noise, Detector::Likelihood).unwrap();
        assert_eq!(cfg.group_size, 10);
        assert!(cfg.with_threshold(0.0).is_err());
        assert!(cfg.with_group_size(11).is_err());
        assert_eq!("lr".parse::<Detector>().unwrap(), Detector::Likelihood);
        assert!("bogus".parse::<Detector>().is_err());
    }

    #[test]
    fn group_size_guidance() {
        assert_eq!(group_size_for(1.0, 0.01).unwrap(), 1);
        let g = group_size_for(0.5, 0.005).unwrap();
        // ½ (1 - 0.25)^{g/2} <= 0.005
        assert!(0.5 * 0.75f64.powf(g as f64 / 2.0) <= 0.005);
        assert!(0.5 * 0.75f64.powf((g - 1) as f64 / 2.0) > 0.005);
        assert!(group_size_for(0.0, 0.01).is_err());
    }

    #[test]
    fn single_repetition_is_inconclusive() {
        let (ka, kap) = make_scalar_extremal_couplings(1.0).unwrap();
        let cfg = ProtocolConfig::new(8, 1, NoiseModel::new(0.1).unwrap(), Detector::Likelihood)
            .unwrap();
        let r = run_protocol(&ka, &kap, &cfg, 3).unwrap();
        assert_eq!(r.decisions, 2);
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn postselect_without_survivors_is_inconclusive() {
        let (ka, kap) = make_scalar_extremal_couplings(0.5).unwrap();
        let cfg = ProtocolConfig::new(40, 20, NoiseModel::NONE, Detector::PostselectExtremes)
            .unwrap()
            .with_group_size(1)
            .unwrap();
        let r = run_protocol(&ka, &kap, &cfg, 1).unwrap();
        assert_eq!((r.n_used, r.decisions, r.verdict), (0, 0, Verdict::Inconclusive));
    }
}
