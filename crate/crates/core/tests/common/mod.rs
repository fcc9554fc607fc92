#![allow(dead_code)]

use superquantum::coupling::cell_signs;

/// Solves `m x = rhs` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                let pivot_row = m[col].clone();
                for (x, p) in m[r][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

/// Smallest and largest `P(b != b')` over couplings with uniform marginals
/// and correlations `(c1, c2)`, by gridding the two free cells `(+,+,+)`
/// and `(-,-,-)` at step `h` and solving the six constraints for the rest.
pub fn brute_force_disagreement(c1: f64, c2: f64, h: f64) -> Option<(f64, f64)> {
    let free = [0usize, 7];
    let others: Vec<usize> = (0..8).filter(|k| !free.contains(k)).collect();
    let row = |k: usize| -> [f64; 6] {
        let (i, j, jp) = cell_signs(k);
        let (i, j, jp) = (i as f64, j as f64, jp as f64);
        [1.0, i * j, i * jp, i, j, jp]
    };
    let target = [1.0, c1, c2, 0.0, 0.0, 0.0];
    let m: Vec<Vec<f64>> = (0..6).map(|r| others.iter().map(|&k| row(k)[r]).collect()).collect();
    // the remaining cells are affine in (q0, q7)
    let base = solve_dense(m.clone(), target.to_vec())?;
    let d0 = solve_dense(m.clone(), row(0).iter().map(|v| -v).collect())?;
    let d7 = solve_dense(m, row(7).iter().map(|v| -v).collect())?;
    let steps = (1.0 / h).round() as usize;
    let mut best: Option<(f64, f64)> = None;
    for s in 0..=steps {
        for t in 0..=steps {
            let (q0, q7) = (s as f64 * h, t as f64 * h);
            if q0 + q7 > 1.0 + 1e-12 {
                continue;
            }
            let x: Vec<f64> = (0..6).map(|r| base[r] + q0 * d0[r] + q7 * d7[r]).collect();
            if x.iter().any(|&v| v < -1e-9) {
                continue;
            }
            let mut pmf = [0.0; 8];
            pmf[0] = q0;
            pmf[7] = q7;
            for (&k, &v) in others.iter().zip(&x) {
                pmf[k] = v;
            }
            let dis: f64 = (0..8)
                .filter(|&k| {
                    let (_, j, jp) = cell_signs(k);
                    j != jp
                })
                .map(|k| pmf[k])
                .sum();
            best = Some(match best {
                None => (dis, dis),
                Some((lo, hi)) => (lo.min(dis), hi.max(dis)),
            });
        }
    }
    best
}

pub fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Noiseless TV between the PR strategies: `B = B'` against `B = -B'` with
/// `B` binomial, overlapping only at `B = B' = 0`.
pub fn pr_tv_oracle(n: u64) -> f64 {
    if n % 2 == 1 {
        1.0
    } else {
        1.0 - binomial(n, n / 2) / 2f64.powi(n as i32)
    }
}

/// Composite Simpson rule on `[lo, hi]` with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for k in 1..n {
        s += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

pub fn gaussian(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// TV between two discrete laws on the plane smoothed by isotropic Gaussian
/// noise, by a tensor Simpson rule.
pub fn noisy_tv_oracle(p: &[(f64, f64, f64)], q: &[(f64, f64, f64)], sigma: f64, n: usize) -> f64 {
    let (lo, hi) = (-1.0 - 9.0 * sigma, 1.0 + 9.0 * sigma);
    let density = |law: &[(f64, f64, f64)], x: f64, y: f64| {
        law.iter()
            .map(|&(u, v, w)| w * gaussian(x, u, sigma) * gaussian(y, v, sigma))
            .sum::<f64>()
    };
    0.5 * simpson(
        |x| simpson(|y| (density(p, x, y) - density(q, x, y)).abs(), lo, hi, n),
        lo,
        hi,
        n,
    )
}

/// `P(|u + sigma Z| >= t)` by integrating the Gaussian density.
pub fn gaussian_outside(u: f64, t: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return if u.abs() >= t { 1.0 } else { 0.0 };
    }
    let inside = simpson(|x| gaussian(x, u, sigma), -t, t, 4000);
    1.0 - inside
}

pub fn random_table(rng: &mut impl rand::Rng) -> superquantum::CorrelationTable {
    superquantum::CorrelationTable::new(
        rng.random_range(-1.0..=1.0),
        rng.random_range(-1.0..=1.0),
        rng.random_range(-1.0..=1.0),
        rng.random_range(-1.0..=1.0),
    )
    .unwrap()
}
