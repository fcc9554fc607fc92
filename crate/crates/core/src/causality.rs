//! From the variance budget of `B ± B'` to the bound `|CHSH| <= 2√2`.
//!
//! Write `x = C(a,b) + C(a,b')` and `y = C(a',b) - C(a',b')`. Causality in
//! the classical limit requires `x² + y² <= 4`, and `|x + y| <= √(2x² + 2y²)`
//! turns that into `|CHSH| = |x + y| <= 2√2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::box_model::{chsh, CorrelationTable, EXACT_TOL, TSIRELSON_BOUND};
use crate::coupling::{coupling_bounds, per_pair_variance, Combination, TripleCoupling};
use crate::error::{Error, Result};

/// Right-hand side of the causality condition.
pub const CAUSALITY_RHS: f64 = 4.0;

fn sum_term(t: &CorrelationTable) -> f64 {
    t.c_ab + t.c_abp
}

fn diff_term(t: &CorrelationTable) -> f64 {
    t.c_apb - t.c_apbp
}

fn check_pairs(n_pairs: usize) -> Result<f64> {
    if n_pairs == 0 {
        Err(Error::Precondition("N must be at least 1".into()))
    } else {
        Ok(n_pairs as f64)
    }
}

/// `[C(a,b) + C(a,b')]/√N`, the smallest possible `Δ_a(B+B')`. Tables are
/// expected to be sign-aligned (see [`align_signs`]); otherwise the value is
/// negative and only its magnitude is meaningful.
pub fn variance_lower_bound_a(table: &CorrelationTable, n_pairs: usize) -> Result<f64> {
    Ok(sum_term(table) / check_pairs(n_pairs)?.sqrt())
}

/// `[C(a',b) - C(a',b')]/√N`, the smallest possible `Δ_a'(B-B')`.
pub fn variance_lower_bound_ap(table: &CorrelationTable, n_pairs: usize) -> Result<f64> {
    Ok(diff_term(table) / check_pairs(n_pairs)?.sqrt())
}

/// `[Δ_a(B+B')]² + [Δ_a'(B-B')]²` against the total `4/N` available to
/// `Δ_a'(B+B')² + Δ_a'(B-B')²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceBudget {
    pub n_pairs: usize,
    pub total: f64,
    pub delta_a_sum_sq: f64,
    pub delta_ap_diff_sq: f64,
}

impl VarianceBudget {
    /// Both spreads at their binomial lower bounds.
    pub fn at_lower_bounds(table: &CorrelationTable, n_pairs: usize) -> Result<Self> {
        let la = variance_lower_bound_a(table, n_pairs)?;
        let lap = variance_lower_bound_ap(table, n_pairs)?;
        Ok(Self {
            n_pairs,
            total: CAUSALITY_RHS / n_pairs as f64,
            delta_a_sum_sq: la * la,
            delta_ap_diff_sq: lap * lap,
        })
    }

    /// Spreads produced by i.i.d. scalar pairs drawn from the couplings.
    pub fn from_couplings(
        k_a: &TripleCoupling,
        k_ap: &TripleCoupling,
        n_pairs: usize,
    ) -> Result<Self> {
        let n = check_pairs(n_pairs)?;
        Ok(Self {
            n_pairs,
            total: CAUSALITY_RHS / n,
            delta_a_sum_sq: per_pair_variance(k_a, Combination::Sum) / n,
            delta_ap_diff_sq: per_pair_variance(k_ap, Combination::Difference) / n,
        })
    }

    /// Variance of `B + B'` under `a'` implied by the budget identity,
    /// `4/N - [Δ_a'(B-B')]²`.
    pub fn implied_ap_sum_sq(&self) -> f64 {
        self.total - self.delta_ap_diff_sq
    }

    /// Equal spreads of `B + B'` under both settings: the substituted form
    /// `[Δ_a(B+B')]² + [Δ_a'(B-B')]² = 4/N` holds.
    pub fn is_balanced(&self, tol: f64) -> bool {
        (self.delta_a_sum_sq - self.implied_ap_sum_sq()).abs() <= tol
    }

    pub fn within_total(&self) -> bool {
        self.delta_a_sum_sq + self.delta_ap_diff_sq <= self.total + 1e-9
    }
}

/// `Var(B+B') + Var(B-B') - 4/N` for one coupling, through per-pair variances.
pub fn budget_identity_residual(k: &TripleCoupling, n_pairs: usize) -> Result<f64> {
    let n = check_pairs(n_pairs)?;
    let sum = per_pair_variance(k, Combination::Sum) / n;
    let diff = per_pair_variance(k, Combination::Difference) / n;
    Ok(sum + diff - CAUSALITY_RHS / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausalityVerdict {
    pub ok: bool,
    pub lhs: f64,
    pub margin: f64,
}

pub fn causality_lhs(table: &CorrelationTable) -> f64 {
    sum_term(table).powi(2) + diff_term(table).powi(2)
}

pub fn causality_condition(table: &CorrelationTable) -> CausalityVerdict {
    let lhs = causality_lhs(table);
    CausalityVerdict {
        ok: lhs <= CAUSALITY_RHS + EXACT_TOL,
        lhs,
        margin: CAUSALITY_RHS - lhs,
    }
}

pub fn tsirelson_check(table: &CorrelationTable) -> bool {
    chsh(table).abs() <= TSIRELSON_BOUND + EXACT_TOL
}

/// Checks `|x + y| <= √(2x² + 2y²)` and, when the causality condition holds,
/// that the table respects the bound. Returns a description of the first
/// broken link.
pub fn check_implication_chain(table: &CorrelationTable) -> std::result::Result<(), String> {
    let (x, y) = (sum_term(table), diff_term(table));
    let s = chsh(table).abs();
    let envelope = (2.0 * x * x + 2.0 * y * y).sqrt();
    if s > envelope + EXACT_TOL {
        return Err(format!("|x + y| = {s} exceeds √(2x² + 2y²) = {envelope}"));
    }
    if causality_condition(table).ok && !tsirelson_check(table) {
        return Err(format!("causality holds but |CHSH| = {s} exceeds 2√2"));
    }
    Ok(())
}

/// Exchanges the roles of `b` and `b'`.
pub fn flip_bob_labels(table: &CorrelationTable) -> CorrelationTable {
    CorrelationTable {
        c_ab: table.c_abp,
        c_abp: table.c_ab,
        c_apb: table.c_apbp,
        c_apbp: table.c_apb,
    }
}

/// Relabels outcomes so that `x >= 0` (negating Bob's outcomes) and `y >= 0`
/// (exchanging `b` and `b'`). Neither step changes `x² + y²`.
pub fn align_signs(table: &CorrelationTable) -> CorrelationTable {
    let mut t = *table;
    if sum_term(&t) < 0.0 {
        t = CorrelationTable {
            c_ab: -t.c_ab,
            c_abp: -t.c_abp,
            c_apb: -t.c_apb,
            c_apbp: -t.c_apbp,
        };
    }
    if diff_term(&t) < 0.0 {
        t = flip_bob_labels(&t);
    }
    t
}

/// The correlation at which the scalar-addition spreads of `B + B'` under
/// `a` and `a'` coincide.
///
/// Under `a` the smallest per-pair `Var(b+b')` is `4C`; under `a'` the
/// largest is `4(1 - C)`. Both are linear in `C`, so the crossing is found
/// from the exact LP values at `C = 0` and `C = 1`.
pub fn critical_c_scalar() -> f64 {
    let gap = |c: f64| {
        let under_a = coupling_bounds(c, c).expect("valid targets").min_var_sum;
        let under_ap = coupling_bounds(c, -c).expect("valid targets").max_var_sum;
        under_a - under_ap
    };
    let (g0, g1) = (gap(0.0), gap(1.0));
    g0 / (g0 - g1)
}

/// Observables `c = ±|x|` and `c' = ±|y|`, each perfectly correlated with
/// Alice's outcome for its setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VectorAdditionModel {
    pub c_magnitude: f64,
    pub cp_magnitude: f64,
}

impl VectorAdditionModel {
    pub fn c_values(&self) -> [f64; 2] {
        [self.c_magnitude, -self.c_magnitude]
    }

    pub fn cp_values(&self) -> [f64; 2] {
        [self.cp_magnitude, -self.cp_magnitude]
    }

    /// `Δ_a(B+B')` when `B + B'` is the mean of `c_m = a_m |x|`.
    pub fn sum_spread(&self, n_pairs: usize) -> Result<f64> {
        Ok(self.c_magnitude / check_pairs(n_pairs)?.sqrt())
    }

    /// `Δ_a'(B-B')` when `B - B'` is the mean of `c'_m = a'_m |y|`.
    pub fn diff_spread(&self, n_pairs: usize) -> Result<f64> {
        Ok(self.cp_magnitude / check_pairs(n_pairs)?.sqrt())
    }

    /// Whether both spreads sit exactly at the binomial lower bounds.
    pub fn saturates_bounds(&self, table: &CorrelationTable, n_pairs: usize) -> Result<bool> {
        let la = variance_lower_bound_a(table, n_pairs)?;
        let lap = variance_lower_bound_ap(table, n_pairs)?;
        Ok((self.sum_spread(n_pairs)? - la).abs() <= EXACT_TOL
            && (self.diff_spread(n_pairs)? - lap).abs() <= EXACT_TOL)
    }
}

/// Requires a sign-aligned table (`x >= 0`, `y >= 0`).
pub fn vector_addition_model(table: &CorrelationTable) -> Result<VectorAdditionModel> {
    let (x, y) = (sum_term(table), diff_term(table));
    if x < 0.0 || y < 0.0 {
        return Err(Error::Precondition(format!(
            "table not sign-aligned (x = {x}, y = {y}); apply align_signs first"
        )));
    }
    Ok(VectorAdditionModel {
        c_magnitude: x,
        cp_magnitude: y,
    })
}

/// Largest `|x + y|` when `c` and `c'` may only take the scalar sums
/// `{0, ±2}` and the causality condition holds.
pub fn scalar_addition_max_chsh() -> f64 {
    const VALUES: [f64; 3] = [-2.0, 0.0, 2.0];
    VALUES
        .iter()
        .flat_map(|&x| VALUES.iter().map(move |&y| (x, y)))
        .filter(|(x, y)| x * x + y * y <= CAUSALITY_RHS)
        .map(|(x, y)| (x + y).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub x: f64,
    pub y: f64,
    pub chsh: f64,
    pub causality_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierReport {
    pub resolution: usize,
    pub rhs: f64,
    pub max_chsh_under_causality: f64,
    pub argmax_table: CorrelationTable,
    pub x: f64,
    pub y: f64,
    pub grid: Vec<FrontierPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricPoint {
    pub c: f64,
    pub chsh: f64,
    pub causality_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricFrontierReport {
    pub resolution: usize,
    pub critical_c: f64,
    pub max_chsh: f64,
    pub grid: Vec<SymmetricPoint>,
}

pub const MIN_RESOLUTION: usize = 10;

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < MIN_RESOLUTION {
        Err(Error::Precondition(format!(
            "scan resolution must be at least {MIN_RESOLUTION}, got {resolution}"
        )))
    } else {
        Ok(())
    }
}

/// Largest feasible `y` for a given `x` under `x² + y² <= rhs`, `|y| <= 2`.
fn best_y(x: f64, rhs: f64) -> Option<f64> {
    let room = rhs - x * x;
    (room >= 0.0).then(|| room.sqrt().min(2.0))
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > 1e-13 {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    (lo + hi) / 2.0
}

/// Maximizes `|CHSH|` over tables meeting the causality condition.
///
/// `CHSH = x + y` and the condition only involves `(x, y)`, with
/// `|x|, |y| <= 2` from the table ranges; the scan runs over `x`, takes the
/// best feasible `y`, and refines the best grid cell by golden-section search.
/// By the symmetry `(x, y) -> (-x, -y)` the maximum of `x + y` is the
/// maximum of `|x + y|`.
pub fn frontier_scan(resolution: usize) -> Result<FrontierReport> {
    frontier_scan_with_rhs(resolution, CAUSALITY_RHS)
}

/// [`frontier_scan`] with `x² + y² <= rhs` in place of the causality bound.
pub fn frontier_scan_with_rhs(resolution: usize, rhs: f64) -> Result<FrontierReport> {
    check_resolution(resolution)?;
    if !(rhs.is_finite() && rhs >= 0.0) {
        return Err(Error::Precondition(format!("rhs must be nonnegative, got {rhs}")));
    }
    let step = 4.0 / (resolution - 1) as f64;
    let grid: Vec<FrontierPoint> = (0..resolution)
        .into_par_iter()
        .filter_map(|k| {
            let x = -2.0 + step * k as f64;
            best_y(x, rhs).map(|y| FrontierPoint {
                x,
                y,
                chsh: x + y,
                causality_margin: rhs - x * x - y * y,
            })
        })
        .collect();
    if grid.is_empty() {
        return Err(Error::Infeasible(format!("no table satisfies x² + y² <= {rhs}")));
    }
    // Ties resolve to the smallest x, which is the lexicographically
    // smallest argmax table.
    let best = grid
        .iter()
        .enumerate()
        .fold(0, |b, (k, p)| if p.chsh > grid[b].chsh { k } else { b });
    let lo = (grid[best].x - step).max(-2.0);
    let hi = (grid[best].x + step).min(2.0);
    let objective = |x: f64| best_y(x, rhs).map_or(f64::NEG_INFINITY, |y| x + y);
    let refined = golden_max(objective, lo, hi);
    let (x, y) = if objective(refined) >= grid[best].chsh {
        (refined, best_y(refined, rhs).expect("feasible"))
    } else {
        (grid[best].x, grid[best].y)
    };
    Ok(FrontierReport {
        resolution,
        rhs,
        max_chsh_under_causality: x + y,
        argmax_table: CorrelationTable {
            c_ab: x / 2.0,
            c_abp: x / 2.0,
            c_apb: y / 2.0,
            c_apbp: -y / 2.0,
        },
        x,
        y,
        grid,
    })
}

/// Largest `C` in the family `(C, C, C, -C)` meeting the causality condition.
pub fn symmetric_frontier(resolution: usize) -> Result<SymmetricFrontierReport> {
    check_resolution(resolution)?;
    let feasible = |c: f64| {
        causality_condition(&CorrelationTable {
            c_ab: c,
            c_abp: c,
            c_apb: c,
            c_apbp: -c,
        })
        .ok
    };
    let step = 1.0 / (resolution - 1) as f64;
    let grid: Vec<SymmetricPoint> = (0..resolution)
        .into_par_iter()
        .map(|k| {
            let c = step * k as f64;
            SymmetricPoint {
                c,
                chsh: 4.0 * c,
                causality_margin: CAUSALITY_RHS - 8.0 * c * c,
            }
        })
        .collect();
    let last = grid.iter().rposition(|p| feasible(p.c)).expect("C = 0 is feasible");
    let mut lo = grid[last].c;
    let mut hi = grid.get(last + 1).map_or(lo, |p| p.c);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(SymmetricFrontierReport {
        resolution,
        critical_c: lo,
        max_chsh: 4.0 * lo,
        grid,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicationReport {
    pub tested: usize,
    /// Tables meeting the causality condition but exceeding `2√2`.
    pub counterexamples: usize,
    /// Tables within `2√2` that nevertheless break the causality condition.
    pub witnesses: usize,
    pub first_counterexample: Option<CorrelationTable>,
    pub first_witness: Option<CorrelationTable>,
}

/// Samples tables uniformly from `[-1, 1]⁴` and tallies both directions of
/// the implication.
pub fn implication_search(samples: usize, seed: u64) -> ImplicationReport {
    const CHUNK: usize = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<ImplicationReport> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let count = CHUNK.min(samples - chunk * CHUNK);
            let mut part = ImplicationReport {
                tested: count,
                counterexamples: 0,
                witnesses: 0,
                first_counterexample: None,
                first_witness: None,
            };
            for _ in 0..count {
                let t = CorrelationTable {
                    c_ab: rng.random_range(-1.0..=1.0),
                    c_abp: rng.random_range(-1.0..=1.0),
                    c_apb: rng.random_range(-1.0..=1.0),
                    c_apbp: rng.random_range(-1.0..=1.0),
                };
                let causal = causality_condition(&t).ok;
                let bounded = tsirelson_check(&t);
                if causal && !bounded {
                    part.counterexamples += 1;
                    part.first_counterexample.get_or_insert(t);
                }
                if bounded && !causal {
                    part.witnesses += 1;
                    part.first_witness.get_or_insert(t);
                }
            }
            part
        })
        .collect();
    parts.into_iter().fold(
        ImplicationReport {
            tested: 0,
            counterexamples: 0,
            witnesses: 0,
            first_counterexample: None,
            first_witness: None,
        },
        |mut acc, p| {
            acc.tested += p.tested;
            acc.counterexamples += p.counterexamples;
            acc.witnesses += p.witnesses;
            acc.first_counterexample = acc.first_counterexample.or(p.first_counterexample);
            acc.first_witness = acc.first_witness.or(p.first_witness);
            acc
        },
    )
}

/// Every identity `verify-bounds` asserts for one table; returns the failures.
pub fn invariant_failures(table: &CorrelationTable, n_pairs: usize) -> Result<Vec<String>> {
    let mut failures = Vec::new();
    if let Err(e) = check_implication_chain(table) {
        failures.push(e);
    }
    let lhs = causality_lhs(table);
    let flipped = causality_lhs(&flip_bob_labels(table));
    if (lhs - flipped).abs() > EXACT_TOL {
        failures.push(format!("exchanging b and b' changed the causality lhs: {lhs} vs {flipped}"));
    }
    let aligned = align_signs(table);
    if (causality_lhs(&aligned) - lhs).abs() > EXACT_TOL {
        failures.push("sign alignment changed the causality lhs".into());
    }
    let model = vector_addition_model(&aligned)?;
    if !model.saturates_bounds(&aligned, n_pairs)? {
        failures.push("vector-addition model misses the binomial lower bounds".into());
    }
    let budget = VarianceBudget::at_lower_bounds(&aligned, n_pairs)?;
    if budget.within_total() != causality_condition(table).ok
        && (budget.delta_a_sum_sq + budget.delta_ap_diff_sq - budget.total).abs() > 1e-9
    {
        failures.push("variance budget and causality condition disagree".into());
    }
    Ok(failures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::box_model::QUANTUM_C;
    use crate::coupling::make_scalar_extremal_couplings;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn lower_bound_examples() {
        let pr = CorrelationTable::pr();
        let q = CorrelationTable::quantum();
        let z = CorrelationTable::zero();
        assert_eq!(variance_lower_bound_a(&pr, 4).unwrap(), 1.0);
        assert_eq!(variance_lower_bound_a(&z, 4).unwrap(), 0.0);
        assert!(close(variance_lower_bound_a(&q, 1).unwrap(), 2f64.sqrt()));
        assert_eq!(variance_lower_bound_ap(&pr, 4).unwrap(), 1.0);
        assert_eq!(variance_lower_bound_ap(&z, 9).unwrap(), 0.0);
        assert!(close(variance_lower_bound_ap(&q, 1).unwrap(), 2f64.sqrt()));
        assert!(variance_lower_bound_a(&pr, 0).is_err());
    }

    #[test]
    fn causality_examples() {
        let v = causality_condition(&CorrelationTable::pr());
        assert!(!v.ok);
        assert_eq!((v.lhs, v.margin), (8.0, -4.0));
        let v = causality_condition(&CorrelationTable::quantum());
        assert!(v.ok);
        assert!(v.margin.abs() < 1e-12);
        let v = causality_condition(&CorrelationTable::tilted(0.5).unwrap());
        assert!(v.ok);
        assert_eq!(v.margin, 2.0);
    }

    #[test]
    fn tsirelson_examples() {
        assert!(tsirelson_check(&CorrelationTable::quantum()));
        assert!(!tsirelson_check(&CorrelationTable::pr()));
        assert!(tsirelson_check(&CorrelationTable::tilted(0.70).unwrap()));
        assert!(!tsirelson_check(&CorrelationTable::tilted(0.71).unwrap()));
    }

    #[test]
    fn flip_examples() {
        let pr = CorrelationTable::pr();
        let f = flip_bob_labels(&pr);
        assert_eq!(f.to_array(), [1.0, 1.0, -1.0, 1.0]);
        assert_eq!(causality_lhs(&f), causality_lhs(&pr));
        let t = CorrelationTable::tilted(0.3).unwrap();
        assert_eq!(flip_bob_labels(&t).to_array(), [0.3, 0.3, -0.3, 0.3]);
        assert_eq!(flip_bob_labels(&flip_bob_labels(&t)), t);
    }

    #[test]
    fn align_signs_makes_both_terms_nonnegative() {
        let t = CorrelationTable::new(-0.4, -0.1, 0.2, 0.6).unwrap();
        let a = align_signs(&t);
        assert!(sum_term(&a) >= 0.0 && diff_term(&a) >= 0.0);
        assert!(close(causality_lhs(&a), causality_lhs(&t)));
        assert!(vector_addition_model(&t).is_err());
    }

    #[test]
    fn critical_c_is_one_half() {
        assert_eq!(critical_c_scalar(), 0.5);
        let a = coupling_bounds(0.5, 0.5).unwrap();
        let ap = coupling_bounds(0.5, -0.5).unwrap();
        assert!(close(a.min_var_sum, 2.0) && close(ap.max_var_sum, 2.0));
        assert!(critical_c_scalar() < QUANTUM_C);
    }

    #[test]
    fn vector_model_examples() {
        let q = CorrelationTable::quantum();
        let m = vector_addition_model(&q).unwrap();
        assert!(close(m.c_values()[0], 2f64.sqrt()) && close(m.c_values()[1], -(2f64.sqrt())));
        assert!(close(m.cp_values()[0], 2f64.sqrt()));
        for n in [1, 4, 100] {
            assert!(m.saturates_bounds(&q, n).unwrap());
        }
        let z = vector_addition_model(&CorrelationTable::zero()).unwrap();
        assert_eq!((z.c_magnitude, z.cp_magnitude), (0.0, 0.0));
        // Scalar sums in {0, ±2} leave only local values of |CHSH|.
        assert_eq!(scalar_addition_max_chsh(), 2.0);
    }

    #[test]
    fn budget_identity_for_couplings() {
        for c in [0.0, 0.25, 0.5, QUANTUM_C, 1.0] {
            let (ka, kap) = make_scalar_extremal_couplings(c).unwrap();
            for n in [1, 7, 64] {
                assert!(budget_identity_residual(&ka, n).unwrap().abs() < 1e-12);
                assert!(budget_identity_residual(&kap, n).unwrap().abs() < 1e-12);
            }
        }
        // PR scalar couplings overdraw the budget: 4/N + 4/N > 4/N.
        let (ka, kap) = make_scalar_extremal_couplings(1.0).unwrap();
        let b = VarianceBudget::from_couplings(&ka, &kap, 8).unwrap();
        assert!(!b.within_total());
        assert!(close(b.delta_a_sum_sq, 0.5));
    }

    #[test]
    fn budget_at_bounds_balances_for_quantum() {
        let b = VarianceBudget::at_lower_bounds(&CorrelationTable::quantum(), 10).unwrap();
        assert!(b.within_total());
        assert!(b.is_balanced(1e-12));
        assert!(close(b.total, 0.4));
    }

    #[test]
    fn frontier_examples() {
        let r = frontier_scan(10_000).unwrap();
        assert!((r.max_chsh_under_causality - TSIRELSON_BOUND).abs() < 1e-6);
        assert!((r.x - 2f64.sqrt()).abs() < 1e-6 && (r.y - 2f64.sqrt()).abs() < 1e-6);
        let s = symmetric_frontier(1000).unwrap();
        assert!((s.critical_c - QUANTUM_C).abs() < 1e-6);
        let relaxed = frontier_scan_with_rhs(100, 8.0).unwrap();
        assert!((relaxed.max_chsh_under_causality - 4.0).abs() < 1e-12);
        assert!(frontier_scan(5).is_err());
    }

    #[test]
    fn implication_search_finds_witness_only() {
        let r = implication_search(50_000, 1);
        assert_eq!(r.tested, 50_000);
        assert_eq!(r.counterexamples, 0);
        assert!(r.witnesses > 0);
        let w = r.first_witness.unwrap();
        assert!(tsirelson_check(&w) && !causality_condition(&w).ok);
        assert_eq!(implication_search(50_000, 1), r);
    }

    #[test]
    fn verify_invariants_hold_for_reference_tables() {
        for t in [
            CorrelationTable::pr(),
            CorrelationTable::quantum(),
            CorrelationTable::zero(),
            CorrelationTable::new(-0.9, 0.2, 0.4, 0.95).unwrap(),
        ] {
            assert!(invariant_failures(&t, 5).unwrap().is_empty(), "{t:?}");
        }
    }
}
