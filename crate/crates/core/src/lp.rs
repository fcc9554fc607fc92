//! Exact linear programming over small standard-form polytopes.
//!
//! Feasible sets here are `{x >= 0 : M x = b}` with an integer matrix `M` of
//! full row rank and at most a few dozen columns. Every vertex is a basic
//! feasible solution, so the polytope is handled by enumerating all square
//! column subsets once, caching their exact inverses, and evaluating each
//! against a rational right-hand side. No pivoting tolerances are involved.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Converts a finite `f64` to the rational number it represents exactly.
pub fn to_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("representable rational")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
struct Basis {
    columns: Vec<usize>,
    inverse: Vec<Vec<BigRational>>,
}

/// All nonsingular bases of an integer constraint matrix, with exact inverses.
#[derive(Debug, Clone)]
pub struct BasisEnumerator {
    rows: usize,
    cols: usize,
    bases: Vec<Basis>,
}

/// Optimum of a linear objective together with every vertex attaining it.
#[derive(Debug, Clone)]
pub struct LpOptimum {
    pub value: BigRational,
    pub vertices: Vec<Vec<BigRational>>,
}

impl LpOptimum {
    /// Average of all optimal vertices; optimal by convexity.
    pub fn centroid(&self) -> Vec<BigRational> {
        let k = BigRational::from_integer(BigInt::from(self.vertices.len()));
        let n = self.vertices[0].len();
        (0..n)
            .map(|c| {
                self.vertices
                    .iter()
                    .fold(BigRational::zero(), |acc, v| acc + &v[c])
                    / &k
            })
            .collect()
    }
}

impl BasisEnumerator {
    pub fn new(matrix: &[Vec<i64>]) -> Self {
        let rows = matrix.len();
        let cols = matrix.first().map_or(0, Vec::len);
        assert!(rows <= cols, "more constraints than variables");
        let mut bases = Vec::new();
        for columns in combinations(cols, rows) {
            let square: Vec<Vec<BigRational>> = (0..rows)
                .map(|r| {
                    columns
                        .iter()
                        .map(|&c| BigRational::from_integer(BigInt::from(matrix[r][c])))
                        .collect()
                })
                .collect();
            if let Some(inverse) = invert(square) {
                bases.push(Basis { columns, inverse });
            }
        }
        Self { rows, cols, bases }
    }

    pub fn basis_count(&self) -> usize {
        self.bases.len()
    }

    fn basic_solution(&self, basis: &Basis, rhs: &[BigRational]) -> Option<Vec<BigRational>> {
        let mut x = vec![BigRational::zero(); self.cols];
        for (r, &col) in basis.columns.iter().enumerate() {
            let v = basis.inverse[r]
                .iter()
                .zip(rhs)
                .fold(BigRational::zero(), |acc, (m, b)| acc + m * b);
            if v.is_negative() {
                return None;
            }
            x[col] = v;
        }
        Some(x)
    }

    /// Distinct vertices of `{x >= 0 : M x = rhs}`.
    pub fn vertices(&self, rhs: &[BigRational]) -> Vec<Vec<BigRational>> {
        assert_eq!(rhs.len(), self.rows);
        let mut out: Vec<Vec<BigRational>> = Vec::new();
        for basis in &self.bases {
            if let Some(x) = self.basic_solution(basis, rhs) {
                if !out.contains(&x) {
                    out.push(x);
                }
            }
        }
        out
    }

    pub fn is_feasible(&self, rhs: &[BigRational]) -> bool {
        assert_eq!(rhs.len(), self.rows);
        self.bases
            .iter()
            .any(|b| self.basic_solution(b, rhs).is_some())
    }

    /// Returns `None` when the polytope is empty.
    pub fn optimize(
        &self,
        rhs: &[BigRational],
        objective: &[BigRational],
        sense: Sense,
    ) -> Option<LpOptimum> {
        assert_eq!(objective.len(), self.cols);
        let mut best: Option<LpOptimum> = None;
        for x in self.vertices(rhs) {
            let value = x
                .iter()
                .zip(objective)
                .fold(BigRational::zero(), |acc, (a, b)| acc + a * b);
            match &mut best {
                None => best = Some(LpOptimum { value, vertices: vec![x] }),
                Some(cur) => {
                    let better = match sense {
                        Sense::Maximize => value > cur.value,
                        Sense::Minimize => value < cur.value,
                    };
                    if better {
                        *cur = LpOptimum { value, vertices: vec![x] };
                    } else if value == cur.value {
                        cur.vertices.push(x);
                    }
                }
            }
        }
        best
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Gauss-Jordan inverse; `None` if singular.
fn invert(mut a: Vec<Vec<BigRational>>) -> Option<Vec<Vec<BigRational>>> {
    let n = a.len();
    let mut inv: Vec<Vec<BigRational>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| if r == c { BigRational::one() } else { BigRational::zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].clone();
        for c in 0..n {
            a[col][c] = &a[col][c] / &p;
            inv[col][c] = &inv[col][c] / &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..n {
                    let da = &f * &a[col][c];
                    let di = &f * &inv[col][c];
                    a[r][c] -= da;
                    inv[r][c] -= di;
                }
            }
        }
    }
    Some(inv)
}
