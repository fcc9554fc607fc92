//! Alice picks `a` or `a'` for every pair of a batch; Bob reads noisy B, B'.
//! With PR correlations the two strategies give B = B' and B = -B', which
//! Bob can tell apart.
//!
//! ```bash
//! cargo run --release --example pr_box_signalling
//! ```

use superquantum::coupling::make_scalar_extremal_couplings;
use superquantum::macro_stats::NoiseModel;
use superquantum::signalling::{
    exact_tv_distance, group_size_for, optimal_advantage, run_protocol, Detector, ProtocolConfig,
};

fn main() -> superquantum::Result<()> {
    let (k_a, k_ap) = make_scalar_extremal_couplings(1.0)?;
    let n = 16;
    for sigma in [0.05, 0.1, 0.2] {
        let noise = NoiseModel::new(sigma)?;
        let tv = exact_tv_distance(&k_a, &k_ap, n.min(12), noise)?;
        println!(
            "sigma {sigma}: per-batch TV (N = 12) {tv:.4}, best single-batch advantage {:.4}, batches per decision for 1% error {}",
            optimal_advantage(tv)?,
            group_size_for(tv, 0.01)?
        );
        for detector in [Detector::CovarianceSign, Detector::Likelihood] {
            let cfg = ProtocolConfig::new(n, 20_000, noise, detector)?;
            let r = run_protocol(&k_a, &k_ap, &cfg, 7)?;
            println!(
                "  {:<11} advantage {:.4} CI [{:.4}, {:.4}] {}",
                detector.short_name(),
                r.advantage,
                r.ci_low,
                r.ci_high,
                r.verdict.label()
            );
        }
    }
    Ok(())
}
