//! Two-party boxes with binary inputs and ±1 outputs.
//!
//! A [`BipartiteBox`] stores the full conditional law `p(i, j | x, y)`;
//! a [`CorrelationTable`] keeps only the four correlators. Locality of a
//! table is decided by the eight CHSH expressions and cross-checked against
//! exact membership in the hull of the deterministic strategies.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::lp::{to_rational, BasisEnumerator};

/// Tolerance for algebraic identities on probabilities.
pub const EXACT_TOL: f64 = 1e-12;

/// The quantum-optimal correlation `√2/2` for the symmetric family.
pub const QUANTUM_C: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Local bound on |CHSH|.
pub const LOCAL_BOUND: f64 = 2.0;

/// Quantum (Tsirelson) bound on |CHSH|.
pub const TSIRELSON_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn from_value(v: i32) -> Result<Self> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            _ => Err(Error::Domain {
                name: "outcome",
                value: v as f64,
                lo: -1.0,
                hi: 1.0,
            }),
        }
    }

    pub fn value(self) -> i32 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn sign(self) -> f64 {
        self.value() as f64
    }

    /// Position in tables ordered `+1` before `-1`.
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

/// Alice measures either `a` or `a'` on each pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AliceSetting {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "a'")]
    APrime,
}

/// Bob measures either `b` or `b'` on each pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BobSetting {
    #[serde(rename = "b")]
    B,
    #[serde(rename = "b'")]
    BPrime,
}

impl AliceSetting {
    pub const BOTH: [AliceSetting; 2] = [AliceSetting::A, AliceSetting::APrime];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            AliceSetting::A => "a",
            AliceSetting::APrime => "a'",
        }
    }
}

impl BobSetting {
    pub const BOTH: [BobSetting; 2] = [BobSetting::B, BobSetting::BPrime];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            BobSetting::B => "b",
            BobSetting::BPrime => "b'",
        }
    }
}

/// The four correlators `C(a,b), C(a,b'), C(a',b), C(a',b')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub c_ab: f64,
    pub c_abp: f64,
    pub c_apb: f64,
    pub c_apbp: f64,
}

impl CorrelationTable {
    pub fn new(c_ab: f64, c_abp: f64, c_apb: f64, c_apbp: f64) -> Result<Self> {
        Ok(Self {
            c_ab: check_range("C(a,b)", c_ab, -1.0, 1.0)?,
            c_abp: check_range("C(a,b')", c_abp, -1.0, 1.0)?,
            c_apb: check_range("C(a',b)", c_apb, -1.0, 1.0)?,
            c_apbp: check_range("C(a',b')", c_apbp, -1.0, 1.0)?,
        })
    }

    /// The symmetric family `(C, C, C, -C)`.
    pub fn tilted(c: f64) -> Result<Self> {
        Self::new(c, c, c, -c)
    }

    pub fn pr() -> Self {
        Self::tilted(1.0).expect("unit correlation")
    }

    pub fn quantum() -> Self {
        Self::tilted(QUANTUM_C).expect("quantum correlation")
    }

    pub fn zero() -> Self {
        Self::tilted(0.0).expect("zero correlation")
    }

    pub fn from_array(c: [f64; 4]) -> Result<Self> {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.c_ab, self.c_abp, self.c_apb, self.c_apbp]
    }

    pub fn get(&self, x: AliceSetting, y: BobSetting) -> f64 {
        self.to_array()[2 * x.index() + y.index()]
    }

    /// Convex combination `alpha * self + (1 - alpha) * other`.
    pub fn mix(&self, alpha: f64, other: &Self) -> Self {
        let a = self.to_array();
        let b = other.to_array();
        let c: [f64; 4] = std::array::from_fn(|k| alpha * a[k] + (1.0 - alpha) * b[k]);
        Self {
            c_ab: c[0],
            c_abp: c[1],
            c_apb: c[2],
            c_apbp: c[3],
        }
    }
}

/// `C(a,b) + C(a,b') + C(a',b) - C(a',b')`, signed.
pub fn chsh(table: &CorrelationTable) -> f64 {
    table.c_ab + table.c_abp + table.c_apb - table.c_apbp
}

/// The eight CHSH expressions: one minus sign placed on each of the four
/// terms, each taken with both overall signs.
pub fn chsh_variants(table: &CorrelationTable) -> [f64; 8] {
    let c = table.to_array();
    let total: f64 = c.iter().sum();
    let mut out = [0.0; 8];
    for k in 0..4 {
        let s = total - 2.0 * c[k];
        out[2 * k] = s;
        out[2 * k + 1] = -s;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Locality {
    Local,
    Nonlocal,
}

pub fn classify_locality(table: &CorrelationTable) -> Locality {
    let worst = chsh_variants(table)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    if worst <= LOCAL_BOUND + EXACT_TOL {
        Locality::Local
    } else {
        Locality::Nonlocal
    }
}

fn deterministic_hull() -> &'static BasisEnumerator {
    static HULL: OnceLock<BasisEnumerator> = OnceLock::new();
    HULL.get_or_init(|| {
        // One column per deterministic strategy (i_a, i_a', j_b, j_b'):
        // rows are the four correlators i_x * j_y followed by normalization.
        let mut columns: Vec<[i64; 5]> = Vec::with_capacity(16);
        for s in 0..16u32 {
            let bit = |k: u32| if s >> k & 1 == 0 { 1i64 } else { -1 };
            let (ia, iap, jb, jbp) = (bit(0), bit(1), bit(2), bit(3));
            let col = [ia * jb, ia * jbp, iap * jb, iap * jbp, 1];
            // Globally flipped strategies share a table; keep one copy.
            if !columns.contains(&col) {
                columns.push(col);
            }
        }
        let matrix: Vec<Vec<i64>> = (0..5)
            .map(|r| columns.iter().map(|c| c[r]).collect())
            .collect();
        BasisEnumerator::new(&matrix)
    })
}

/// Exact membership of the table in the convex hull of the correlation
/// tables of the sixteen deterministic local strategies.
pub fn in_local_hull(table: &CorrelationTable) -> bool {
    let mut rhs: Vec<_> = table.to_array().iter().map(|&c| to_rational(c)).collect();
    rhs.push(to_rational(1.0));
    deterministic_hull().is_feasible(&rhs)
}

/// Classification via [`in_local_hull`]; used to cross-check
/// [`classify_locality`].
pub fn classify_locality_lp(table: &CorrelationTable) -> Locality {
    if in_local_hull(table) {
        Locality::Local
    } else {
        Locality::Nonlocal
    }
}

/// `p₊ = (1 + C)/2` and `p₋ = (1 - C)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementProbs {
    p_plus: f64,
    correlation: f64,
}

impl AgreementProbs {
    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn p_minus(&self) -> f64 {
        1.0 - self.p_plus
    }

    pub fn correlation(&self) -> f64 {
        self.correlation
    }
}

pub fn agreement_probabilities(c: f64) -> Result<AgreementProbs> {
    check_range("C", c, -1.0, 1.0)?;
    Ok(AgreementProbs {
        p_plus: (1.0 + c) / 2.0,
        correlation: c,
    })
}

/// Conditional law `p(i, j | x, y)` indexed `[x][y][i][j]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipartiteBox {
    pmf: [[[[f64; 2]; 2]; 2]; 2],
}

/// Largest one-party marginal shift caused by the remote party's setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoSignallingReport {
    pub ok: bool,
    pub max_deviation: f64,
}

impl BipartiteBox {
    /// Validates ranges and per-setting normalization. No-signalling is not
    /// enforced here; see [`check_no_signalling`].
    pub fn from_pmf(pmf: [[[[f64; 2]; 2]; 2]; 2]) -> Result<Self> {
        for x in AliceSetting::BOTH {
            for y in BobSetting::BOTH {
                let block = &pmf[x.index()][y.index()];
                let mut total = 0.0;
                for row in block {
                    for &p in row {
                        if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                            return Err(Error::InvalidPmf(format!(
                                "probability {p} for ({}, {}) outside [0, 1]",
                                x.label(),
                                y.label()
                            )));
                        }
                        total += p;
                    }
                }
                if (total - 1.0).abs() > EXACT_TOL {
                    return Err(Error::InvalidPmf(format!(
                        "probabilities for ({}, {}) sum to {total}",
                        x.label(),
                        y.label()
                    )));
                }
            }
        }
        Ok(Self { pmf })
    }

    /// `p(i, j | x, y) = (1 + i j C(x, y)) / 4`: uniform marginals, given
    /// correlators.
    pub fn isotropic(table: &CorrelationTable) -> Self {
        let mut pmf = [[[[0.0; 2]; 2]; 2]; 2];
        for x in AliceSetting::BOTH {
            for y in BobSetting::BOTH {
                let c = table.get(x, y);
                for i in Outcome::BOTH {
                    for j in Outcome::BOTH {
                        pmf[x.index()][y.index()][i.index()][j.index()] =
                            (1.0 + (i.value() * j.value()) as f64 * c) / 4.0;
                    }
                }
            }
        }
        Self { pmf }
    }

    pub fn prob(&self, x: AliceSetting, y: BobSetting, i: Outcome, j: Outcome) -> f64 {
        self.pmf[x.index()][y.index()][i.index()][j.index()]
    }

    pub fn pmf(&self) -> &[[[[f64; 2]; 2]; 2]; 2] {
        &self.pmf
    }

    /// `P(i = +1 | x, y)`.
    pub fn alice_plus(&self, x: AliceSetting, y: BobSetting) -> f64 {
        let b = &self.pmf[x.index()][y.index()];
        b[0][0] + b[0][1]
    }

    /// `P(j = +1 | x, y)`.
    pub fn bob_plus(&self, x: AliceSetting, y: BobSetting) -> f64 {
        let b = &self.pmf[x.index()][y.index()];
        b[0][0] + b[1][0]
    }

    pub fn correlation(&self, x: AliceSetting, y: BobSetting) -> f64 {
        let b = &self.pmf[x.index()][y.index()];
        b[0][0] + b[1][1] - b[0][1] - b[1][0]
    }

    pub fn correlations(&self) -> CorrelationTable {
        CorrelationTable {
            c_ab: self.correlation(AliceSetting::A, BobSetting::B),
            c_abp: self.correlation(AliceSetting::A, BobSetting::BPrime),
            c_apb: self.correlation(AliceSetting::APrime, BobSetting::B),
            c_apbp: self.correlation(AliceSetting::APrime, BobSetting::BPrime),
        }
    }
}

pub fn make_pr_box() -> BipartiteBox {
    BipartiteBox::isotropic(&CorrelationTable::pr())
}

pub fn make_tilted_box(c: f64) -> Result<BipartiteBox> {
    Ok(BipartiteBox::isotropic(&CorrelationTable::tilted(c)?))
}

/// Deterministic strategy: Alice answers `i_a` / `i_ap`, Bob `j_b` / `j_bp`.
pub fn make_local_deterministic(
    i_a: Outcome,
    i_ap: Outcome,
    j_b: Outcome,
    j_bp: Outcome,
) -> BipartiteBox {
    let mut pmf = [[[[0.0; 2]; 2]; 2]; 2];
    for (x, i) in [(AliceSetting::A, i_a), (AliceSetting::APrime, i_ap)] {
        for (y, j) in [(BobSetting::B, j_b), (BobSetting::BPrime, j_bp)] {
            pmf[x.index()][y.index()][i.index()][j.index()] = 1.0;
        }
    }
    BipartiteBox { pmf }
}

pub fn check_no_signalling(bx: &BipartiteBox, tol: f64) -> NoSignallingReport {
    let mut dev: f64 = 0.0;
    for x in AliceSetting::BOTH {
        dev = dev.max(
            (bx.alice_plus(x, BobSetting::B) - bx.alice_plus(x, BobSetting::BPrime)).abs(),
        );
    }
    for y in BobSetting::BOTH {
        dev = dev.max(
            (bx.bob_plus(AliceSetting::A, y) - bx.bob_plus(AliceSetting::APrime, y)).abs(),
        );
    }
    NoSignallingReport {
        ok: dev <= tol,
        max_deviation: dev,
    }
}

const ALICE_LABELS: [&str; 2] = ["a", "a'"];
const BOB_LABELS: [&str; 2] = ["b", "b'"];

#[derive(Serialize, Deserialize)]
struct BoxJson {
    settings: [[String; 2]; 2],
    pmf: [[f64; 4]; 4],
}

impl Serialize for BipartiteBox {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut rows = [[0.0; 4]; 4];
        for x in 0..2 {
            for y in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        rows[2 * x + y][2 * i + j] = self.pmf[x][y][i][j];
                    }
                }
            }
        }
        BoxJson {
            settings: [
                ALICE_LABELS.map(str::to_owned),
                BOB_LABELS.map(str::to_owned),
            ],
            pmf: rows,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BipartiteBox {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = BoxJson::deserialize(d)?;
        if raw.settings[0] != ALICE_LABELS || raw.settings[1] != BOB_LABELS {
            return Err(serde::de::Error::custom(
                "settings must be [[\"a\",\"a'\"],[\"b\",\"b'\"]]",
            ));
        }
        let mut pmf = [[[[0.0; 2]; 2]; 2]; 2];
        for (row, probs) in raw.pmf.iter().enumerate() {
            for (col, &p) in probs.iter().enumerate() {
                pmf[row / 2][row % 2][col / 2][col % 2] = p;
            }
        }
        BipartiteBox::from_pmf(pmf).map_err(serde::de::Error::custom)
    }
}
