//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use superquantum::box_model::{classify_locality, classify_locality_lp, AliceSetting, Locality};
use superquantum::causality::{critical_c_scalar, frontier_scan, implication_search, symmetric_frontier};
use superquantum::coupling::{
    closed_form_bounds, coupling_bounds, extremal_coupling, make_scalar_extremal_couplings,
    per_pair_variance, Combination, Objective,
};
use superquantum::macro_stats::{
    mean_square_check, parallelogram_check, sample_batches, BatchConfig, NoiseModel, Strategy,
};
use superquantum::signalling::{
    exact_tv_distance, resource_sweep, run_protocol, Detector, ProtocolConfig, SweepSettings,
};
use superquantum::CorrelationTable;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_pr_signalling() -> Outcome {
    let start = Instant::now();
    let (ka, kap) = make_scalar_extremal_couplings(1.0).unwrap();
    let cfg = ProtocolConfig::new(16, 20_000, NoiseModel::new(0.1).unwrap(), Detector::CovarianceSign)
        .unwrap();
    let r = run_protocol(&ka, &kap, &cfg, 2024).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        r.advantage >= 0.99 && r.ci_low > 0.5 && secs < 10.0,
        format!(
            "advantage {:.4}, CI [{:.4}, {:.4}], {} decisions of {} batches, {secs:.2}s",
            r.advantage, r.ci_low, r.ci_high, r.decisions, cfg.group_size
        ),
    )
}

fn c2_scalar_critical_point() -> Outcome {
    let (ka, kap) = make_scalar_extremal_couplings(0.5).unwrap();
    let worst_tv = (1..=12)
        .map(|n| exact_tv_distance(&ka, &kap, n, NoiseModel::NONE).unwrap())
        .fold(0.0, f64::max);
    let cfg = ProtocolConfig::new(8, 100_000, NoiseModel::new(0.1).unwrap(), Detector::CovarianceSign)
        .unwrap()
        .with_group_size(1)
        .unwrap();
    let r = run_protocol(&ka, &kap, &cfg, 77).unwrap();
    let se = (0.25 / r.decisions as f64).sqrt();
    let z = (r.advantage - 0.5) / se;
    let critical = critical_c_scalar();
    outcome(
        worst_tv == 0.0 && z.abs() <= 3.0 && critical == 0.5,
        format!(
            "max TV over N<=12 = {worst_tv}, advantage {:.5} (z = {z:.2}), critical C = {critical}",
            r.advantage
        ),
    )
}

fn c3_tsirelson_endpoint() -> Outcome {
    let r = frontier_scan(10_000).unwrap();
    let s = symmetric_frontier(10_000).unwrap();
    let root2 = 2f64.sqrt();
    let dmax = (r.max_chsh_under_causality - 2.0 * root2).abs();
    let dx = (r.x - root2).abs().max((r.y - root2).abs());
    let dc = (s.critical_c - root2 / 2.0).abs();
    outcome(
        dmax <= 1e-6 && dx <= 1e-6 && dc <= 1e-6,
        format!("|max - 2√2| = {dmax:.2e}, |(x,y) - (√2,√2)| = {dx:.2e}, |C - √2/2| = {dc:.2e}"),
    )
}

fn c4_implication_suite() -> Outcome {
    let start = Instant::now();
    let r = implication_search(1_000_000, 4);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        r.tested == 1_000_000 && r.counterexamples == 0 && r.witnesses >= 1 && secs < 30.0,
        format!(
            "{} tables, {} counterexamples, {} witnesses, {secs:.2}s",
            r.tested, r.counterexamples, r.witnesses
        ),
    )
}

fn c5_variance_algebra() -> Outcome {
    let (ka, kap) = make_scalar_extremal_couplings(1.0).unwrap();
    let mut worst_para = 0.0f64;
    for strategy in Strategy::BOTH {
        let cfg = BatchConfig::new(16, strategy, 5).unwrap();
        let obs = sample_batches(&ka, &kap, &cfg, NoiseModel::NONE, 500_000).unwrap();
        worst_para = obs.iter().map(|o| parallelogram_check(o).abs()).fold(worst_para, f64::max);
    }
    let (qa, qap) = make_scalar_extremal_couplings(std::f64::consts::FRAC_1_SQRT_2).unwrap();
    let mut worst_z = 0.0f64;
    for n in [10, 100] {
        let cfg = BatchConfig::new(n, Strategy::AlwaysA, 6).unwrap();
        let obs = sample_batches(&qa, &qap, &cfg, NoiseModel::NONE, 100_000).unwrap();
        let m = mean_square_check(&obs, n).unwrap();
        worst_z = worst_z.max(m.b.z_score.abs()).max(m.bp.z_score.abs());
    }
    let mut worst_budget = 0.0f64;
    for k in 0..=20 {
        let c = -1.0 + 0.1 * k as f64;
        for (t, setting) in [((c, c), AliceSetting::A), ((c, -c), AliceSetting::APrime)] {
            for obj in [Objective::MinDisagree, Objective::MaxDisagree] {
                let cp = extremal_coupling(setting, t.0, t.1, obj).unwrap();
                let total = per_pair_variance(&cp, Combination::Sum)
                    + per_pair_variance(&cp, Combination::Difference);
                worst_budget = worst_budget.max((total - 4.0).abs());
            }
        }
    }
    outcome(
        worst_para <= 1e-12 && worst_z <= 5.0 && worst_budget <= 1e-12,
        format!(
            "parallelogram residual {worst_para:.1e} over 10^6 batches, worst |z| for <B²> {worst_z:.2}, budget residual {worst_budget:.1e}"
        ),
    )
}

fn c6_coupling_bounds() -> Outcome {
    let mut worst_closed = 0.0f64;
    for k in 0..=10 {
        let c = 0.1 * k as f64;
        let a = extremal_coupling(AliceSetting::A, c, c, Objective::MaxDisagree).unwrap();
        let ap = extremal_coupling(AliceSetting::APrime, c, -c, Objective::MinDisagree).unwrap();
        worst_closed = worst_closed
            .max((a.disagreement() - (1.0 - c)).abs())
            .max((ap.agreement() - (1.0 - c)).abs());
        for t in [(c, c), (c, -c)] {
            let lp = coupling_bounds(t.0, t.1).unwrap();
            let cf = closed_form_bounds(t.0, t.1).unwrap();
            worst_closed = worst_closed
                .max((lp.min_disagree - cf.min_disagree).abs())
                .max((lp.max_disagree - cf.max_disagree).abs());
        }
    }
    let mut worst_grid = 0.0f64;
    for c in [0.0, 0.25, 0.5, 0.75, 1.0] {
        for t in [(c, c), (c, -c)] {
            let lp = coupling_bounds(t.0, t.1).unwrap();
            let (lo, hi) = common::brute_force_disagreement(t.0, t.1, 1e-3).unwrap();
            worst_grid = worst_grid
                .max((lp.min_disagree - lo).abs())
                .max((lp.max_disagree - hi).abs());
        }
    }
    outcome(
        // the grid misses 1/16-vertices by half a step: the gap is 2e-3 up to rounding
        worst_closed <= 1e-9 && worst_grid <= 2e-3 + 1e-12,
        format!("LP vs closed form {worst_closed:.1e}, LP vs grid oracle {worst_grid:.1e}"),
    )
}

fn c7_postselection() -> Outcome {
    let (ka, kap) = make_scalar_extremal_couplings(1.0).unwrap();
    let n_batches = 1usize << 20;
    let obs_a = sample_batches(
        &ka,
        &kap,
        &BatchConfig::new(10, Strategy::AlwaysA, 8).unwrap(),
        NoiseModel::NONE,
        n_batches,
    )
    .unwrap();
    let both_up = obs_a.iter().filter(|o| o.noisy_b >= 1.0 && o.noisy_bp >= 1.0).count();
    let mixed = obs_a.iter().filter(|o| o.noisy_b >= 1.0 && o.noisy_bp <= -1.0).count();
    let p = 2f64.powi(-10);
    let se = (p * (1.0 - p) / n_batches as f64).sqrt();
    let z = (both_up as f64 / n_batches as f64 - p) / se;
    outcome(
        z.abs() <= 5.0 && mixed == 0,
        format!("{both_up} of 2^20 batches with B = B' = 1 (expected 1024, z = {z:.2}), {mixed} with B = 1, B' = -1"),
    )
}

fn c8_detector_ceiling() -> Outcome {
    let mut checked = 0;
    let mut worst = (f64::NEG_INFINITY, String::new());
    let mut failures = Vec::new();
    for detector in [Detector::CovarianceSign, Detector::Likelihood] {
        let settings = SweepSettings {
            detector,
            group_size: 1,
            ..SweepSettings::default()
        };
        for c in [0.0, 0.5, 0.75, std::f64::consts::FRAC_1_SQRT_2, 1.0] {
            let table = CorrelationTable::tilted(c).unwrap();
            let rows =
                resource_sweep(&table, &[1, 4, 8, 12], &[4000], &[0.0, 0.05, 0.2, 0.5], &settings, 9)
                    .unwrap();
            for row in rows {
                let ceiling = row.advantage_ceiling().unwrap();
                let se = (ceiling * (1.0 - ceiling) / row.report.decisions as f64).sqrt();
                let excess = (row.report.advantage - ceiling) / se.max(f64::MIN_POSITIVE);
                let label = format!("{} C={c:.3} N={} sigma={}", detector.short_name(), row.n_pairs, row.sigma);
                checked += 1;
                if ceiling < 1.0 && excess > worst.0 {
                    worst = (excess, label.clone());
                }
                if row.report.advantage > ceiling + 3.0 * se {
                    failures.push(label);
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{checked} configurations, largest excess over the ceiling {:.2} SE ({}){}",
            worst.0,
            worst.1,
            if failures.is_empty() { String::new() } else { format!("; failed: {failures:?}") }
        ),
    )
}

fn c9_locality() -> Outcome {
    let mut grid_ok = true;
    for k in 0..=1000 {
        let c = k as f64 / 1000.0;
        let expect = if c <= 0.5 + 1e-12 { Locality::Local } else { Locality::Nonlocal };
        let t = CorrelationTable::tilted(c).unwrap();
        grid_ok &= classify_locality(&t) == expect && classify_locality_lp(&t) == expect;
    }
    // The classifier's tolerance is 1e-12 on CHSH = 4C, i.e. 2.5e-13 on C;
    // probe either side of that band.
    for (c, expect) in [
        (0.5 + 2e-13, Locality::Local),
        (0.5 + 2e-12, Locality::Nonlocal),
        (0.51, Locality::Nonlocal),
    ] {
        grid_ok &= classify_locality(&CorrelationTable::tilted(c).unwrap()) == expect;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let disagreements = (0..1000)
        .filter(|_| {
            let t = common::random_table(&mut rng);
            classify_locality(&t) != classify_locality_lp(&t)
        })
        .count();
    outcome(
        grid_ok && disagreements == 0,
        format!("tilted threshold at 0.5 {}, {disagreements} disagreements on 1000 random tables",
            if grid_ok { "confirmed" } else { "violated" }),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 PR-box signalling", c1_pr_signalling),
        ("2 scalar-model critical point", c2_scalar_critical_point),
        ("3 Tsirelson endpoint", c3_tsirelson_endpoint),
        ("4 implication suite", c4_implication_suite),
        ("5 variance algebra", c5_variance_algebra),
        ("6 coupling bounds", c6_coupling_bounds),
        ("7 post-selection statistics", c7_postselection),
        ("8 detector optimality ceiling", c8_detector_ceiling),
        ("9 locality classifier", c9_locality),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run();
        println!(
            "[{}] criterion {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of 9 criteria pass", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
