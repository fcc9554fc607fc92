//! Per-pair counterfactual couplings of Alice's outcome with both of Bob's
//! possible outcomes.
//!
//! For a fixed Alice setting `x` a [`TripleCoupling`] is a law on
//! `(i, j, j')` where `j` and `j'` are the values Bob would see for `b` and
//! `b'`. The feasible couplings form a polytope cut out by six linear
//! equalities (normalization, two target correlations, three uniform
//! marginals); extremal couplings are found by exact vertex enumeration.

use std::sync::OnceLock;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::box_model::{AliceSetting, CorrelationTable, Outcome};
use crate::error::{check_range, Error, Result};
use crate::lp::{to_f64, to_rational, BasisEnumerator, Sense};

/// Tolerance used when checking couplings produced by the LP.
pub const COUPLING_TOL: f64 = 1e-9;

/// Cell order: `(i, j, j')` lexicographic with `+1` before `-1`.
pub fn cell_index(i: Outcome, j: Outcome, jp: Outcome) -> usize {
    4 * i.index() + 2 * j.index() + jp.index()
}

/// Signs `(i, j, j')` of cell `k`.
pub fn cell_signs(k: usize) -> (i64, i64, i64) {
    let s = |bit: usize| if k >> bit & 1 == 0 { 1 } else { -1 };
    (s(2), s(1), s(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleCoupling {
    pub alice_setting: AliceSetting,
    pub pmf: [f64; 8],
}

impl TripleCoupling {
    pub fn prob(&self, i: Outcome, j: Outcome, jp: Outcome) -> f64 {
        self.pmf[cell_index(i, j, jp)]
    }

    fn expect(&self, f: impl Fn(i64, i64, i64) -> f64) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let (i, j, jp) = cell_signs(k);
                p * f(i, j, jp)
            })
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.pmf.iter().sum()
    }

    /// Correlation of Alice's outcome with `b`.
    pub fn correlation_b(&self) -> f64 {
        self.expect(|i, j, _| (i * j) as f64)
    }

    /// Correlation of Alice's outcome with `b'`.
    pub fn correlation_bp(&self) -> f64 {
        self.expect(|i, _, jp| (i * jp) as f64)
    }

    /// Means of `i`, `j`, `j'`.
    pub fn means(&self) -> [f64; 3] {
        [
            self.expect(|i, _, _| i as f64),
            self.expect(|_, j, _| j as f64),
            self.expect(|_, _, jp| jp as f64),
        ]
    }

    pub fn disagreement(&self) -> f64 {
        self.expect(|_, j, jp| if j != jp { 1.0 } else { 0.0 })
    }

    pub fn agreement(&self) -> f64 {
        self.expect(|_, j, jp| if j == jp { 1.0 } else { 0.0 })
    }

    /// Joint law of `(b, b')` indexed `[j][j']`, Alice's outcome summed out.
    pub fn bob_pair_law(&self) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for (k, &p) in self.pmf.iter().enumerate() {
            out[(k >> 1) & 1][k & 1] += p;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Objective {
    MinDisagree,
    MaxDisagree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Combination {
    Sum,
    Difference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingBounds {
    pub min_disagree: f64,
    pub max_disagree: f64,
    pub min_var_sum: f64,
    pub max_var_sum: f64,
}

fn coupling_polytope() -> &'static BasisEnumerator {
    static POLY: OnceLock<BasisEnumerator> = OnceLock::new();
    POLY.get_or_init(|| {
        let rows: [fn(i64, i64, i64) -> i64; 6] = [
            |_, _, _| 1,
            |i, j, _| i * j,
            |i, _, jp| i * jp,
            |i, _, _| i,
            |_, j, _| j,
            |_, _, jp| jp,
        ];
        let matrix: Vec<Vec<i64>> = rows
            .iter()
            .map(|f| {
                (0..8)
                    .map(|k| {
                        let (i, j, jp) = cell_signs(k);
                        f(i, j, jp)
                    })
                    .collect()
            })
            .collect();
        BasisEnumerator::new(&matrix)
    })
}

const CONSTRAINT_NAMES: [&str; 6] = [
    "normalization",
    "correlation(i, b)",
    "correlation(i, b')",
    "uniform marginal of i",
    "uniform marginal of b",
    "uniform marginal of b'",
];

fn targets_rhs(c_xb: f64, c_xbp: f64) -> Result<Vec<BigRational>> {
    check_range("target correlation with b", c_xb, -1.0, 1.0)?;
    check_range("target correlation with b'", c_xbp, -1.0, 1.0)?;
    Ok(vec![
        BigRational::one(),
        to_rational(c_xb),
        to_rational(c_xbp),
        BigRational::zero(),
        BigRational::zero(),
        BigRational::zero(),
    ])
}

fn disagreement_objective() -> Vec<BigRational> {
    (0..8)
        .map(|k| {
            let (_, j, jp) = cell_signs(k);
            if j != jp {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        })
        .collect()
}

fn solve(c_xb: f64, c_xbp: f64, objective: Objective) -> Result<crate::lp::LpOptimum> {
    let rhs = targets_rhs(c_xb, c_xbp)?;
    let sense = match objective {
        Objective::MinDisagree => Sense::Minimize,
        Objective::MaxDisagree => Sense::Maximize,
    };
    coupling_polytope()
        .optimize(&rhs, &disagreement_objective(), sense)
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "no coupling meets {} together with targets ({c_xb}, {c_xbp})",
                CONSTRAINT_NAMES.join(", ")
            ))
        })
}

/// Coupling optimizing `P(b != b')` for the target correlations
/// `C(x, b) = c_xb`, `C(x, b') = c_xbp`.
///
/// When several vertices are optimal the returned coupling is their
/// centroid, which is optimal as well and is invariant under the symmetries
/// the vertex set has.
pub fn extremal_coupling(
    alice_setting: AliceSetting,
    c_xb: f64,
    c_xbp: f64,
    objective: Objective,
) -> Result<TripleCoupling> {
    let opt = solve(c_xb, c_xbp, objective)?;
    let centroid = opt.centroid();
    let pmf: [f64; 8] = std::array::from_fn(|k| to_f64(&centroid[k]));
    Ok(TripleCoupling { alice_setting, pmf })
}

pub fn coupling_bounds(c_xb: f64, c_xbp: f64) -> Result<CouplingBounds> {
    let min_disagree = to_f64(&solve(c_xb, c_xbp, Objective::MinDisagree)?.value);
    let max_disagree = to_f64(&solve(c_xb, c_xbp, Objective::MaxDisagree)?.value);
    // Zero means and ±1 values: Var(b + b') = 4 P(b = b').
    Ok(CouplingBounds {
        min_disagree,
        max_disagree,
        min_var_sum: 4.0 * (1.0 - max_disagree),
        max_var_sum: 4.0 * (1.0 - min_disagree),
    })
}

/// Fréchet-type closed form for the same bounds: conditioned on Alice's
/// outcome, `b` and `b'` agree with it with probabilities `(1 + c)/2`.
pub fn closed_form_bounds(c_xb: f64, c_xbp: f64) -> Result<CouplingBounds> {
    check_range("target correlation with b", c_xb, -1.0, 1.0)?;
    check_range("target correlation with b'", c_xbp, -1.0, 1.0)?;
    let min_disagree = (c_xb - c_xbp).abs() / 2.0;
    let max_disagree = 1.0 - (c_xb + c_xbp).abs() / 2.0;
    Ok(CouplingBounds {
        min_disagree,
        max_disagree,
        min_var_sum: 4.0 * (1.0 - max_disagree),
        max_var_sum: 4.0 * (1.0 - min_disagree),
    })
}

/// The two scalar-addition couplings of the critical-C argument for the
/// symmetric family: under `a` the targets `(C, C)` with `b`, `b'` differing
/// as often as possible; under `a'` the targets `(C, -C)` with `b`, `b'`
/// agreeing as often as possible.
pub fn make_scalar_extremal_couplings(c: f64) -> Result<(TripleCoupling, TripleCoupling)> {
    check_range("C", c, 0.0, 1.0)?;
    let under_a = extremal_coupling(AliceSetting::A, c, c, Objective::MaxDisagree)?;
    let under_ap = extremal_coupling(AliceSetting::APrime, c, -c, Objective::MinDisagree)?;
    Ok((under_a, under_ap))
}

/// Same construction for an arbitrary table: `(C(a,b), C(a,b'))` with
/// maximal disagreement under `a`, `(C(a',b), C(a',b'))` with maximal
/// agreement under `a'`.
pub fn table_extremal_couplings(
    table: &CorrelationTable,
) -> Result<(TripleCoupling, TripleCoupling)> {
    let under_a = extremal_coupling(AliceSetting::A, table.c_ab, table.c_abp, Objective::MaxDisagree)?;
    let under_ap = extremal_coupling(
        AliceSetting::APrime,
        table.c_apb,
        table.c_apbp,
        Objective::MinDisagree,
    )?;
    Ok((under_a, under_ap))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub ok: bool,
    /// `(constraint, |residual|)`, one entry per invariant.
    pub residuals: Vec<(String, f64)>,
}

impl CouplingReport {
    pub fn residual(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|(n, _)| n == name).map(|&(_, r)| r)
    }
}

pub fn validate_coupling(k: &TripleCoupling, targets: (f64, f64), tol: f64) -> CouplingReport {
    let negative = k.pmf.iter().fold(0.0_f64, |acc, &p| acc.max(-p));
    let above_one = k.pmf.iter().fold(0.0_f64, |acc, &p| acc.max(p - 1.0));
    let [mi, mj, mjp] = k.means();
    let residuals = vec![
        ("probability range".to_owned(), negative.max(above_one)),
        ("normalization".to_owned(), (k.total_mass() - 1.0).abs()),
        ("correlation(i, b)".to_owned(), (k.correlation_b() - targets.0).abs()),
        ("correlation(i, b')".to_owned(), (k.correlation_bp() - targets.1).abs()),
        ("uniform marginal of i".to_owned(), (mi / 2.0).abs()),
        ("uniform marginal of b".to_owned(), (mj / 2.0).abs()),
        ("uniform marginal of b'".to_owned(), (mjp / 2.0).abs()),
    ];
    let ok = residuals.iter().all(|&(_, r)| r <= tol);
    CouplingReport { ok, residuals }
}

/// `Var(b + b')` or `Var(b - b')` with `b`, `b'` as scalar ±1 values.
pub fn per_pair_variance(k: &TripleCoupling, combination: Combination) -> f64 {
    let sign = match combination {
        Combination::Sum => 1,
        Combination::Difference => -1,
    };
    let mean = k.expect(|_, j, jp| (j + sign * jp) as f64);
    let second = k.expect(|_, j, jp| ((j + sign * jp) * (j + sign * jp)) as f64);
    second - mean * mean
}
