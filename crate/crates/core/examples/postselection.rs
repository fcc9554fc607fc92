//! Keeping only batches with |B| = |B'| = 1: under `a` the survivors all have
//! B = B', under `a'` all have B = -B'. A batch survives with probability
//! 2^-N under either strategy, not 2^-2N.
//!
//! ```bash
//! cargo run --release --example postselection
//! ```

use superquantum::coupling::make_scalar_extremal_couplings;
use superquantum::macro_stats::{sample_batches, BatchConfig, NoiseModel, Strategy};
use superquantum::signalling::{detector_postselect, run_protocol, Detector, ProtocolConfig};

fn main() -> superquantum::Result<()> {
    let (k_a, k_ap) = make_scalar_extremal_couplings(1.0)?;
    let n = 10;
    let batches = 1 << 20;
    for strategy in Strategy::BOTH {
        let cfg = BatchConfig::new(n, strategy, 3)?;
        let obs = sample_batches(&k_a, &k_ap, &cfg, NoiseModel::NONE, batches)?;
        let count = |f: &dyn Fn(f64, f64) -> bool| obs.iter().filter(|o| f(o.b_mean, o.bp_mean)).count();
        let out = detector_postselect(&obs, 1.0);
        println!(
            "{}: (1, 1) {}  (1, -1) {}  (-1, 1) {}  (-1, -1) {}  survivors {} (expected {:.0}), guess {:?}",
            strategy.label(),
            count(&|b, bp| b == 1.0 && bp == 1.0),
            count(&|b, bp| b == 1.0 && bp == -1.0),
            count(&|b, bp| b == -1.0 && bp == 1.0),
            count(&|b, bp| b == -1.0 && bp == -1.0),
            out.n_surviving,
            2.0 * batches as f64 / 2f64.powi(n as i32),
            out.guess
        );
    }

    let cfg = ProtocolConfig::new(n, 1 << 16, NoiseModel::NONE, Detector::PostselectExtremes)?
        .with_group_size(1)?;
    let r = run_protocol(&k_a, &k_ap, &cfg, 4)?;
    println!(
        "per-batch post-selection: {} of {} decided, advantage {:.4} among them",
        r.decisions,
        2 << 16,
        r.advantage
    );
    Ok(())
}
