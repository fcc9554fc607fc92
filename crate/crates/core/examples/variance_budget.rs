//! Spreads of the macroscopic means B + B' and B - B' against the fixed
//! budget Var(B + B') + Var(B - B') = 4/N.
//!
//! ```bash
//! cargo run --release --example variance_budget
//! ```

use superquantum::causality::{
    align_signs, causality_condition, variance_lower_bound_a, variance_lower_bound_ap,
    vector_addition_model, VarianceBudget,
};
use superquantum::coupling::table_extremal_couplings;
use superquantum::macro_stats::{
    empirical, mean_square_check, sample_batches, BatchConfig, NoiseModel, Strategy,
};
use superquantum::CorrelationTable;

fn main() -> superquantum::Result<()> {
    let n = 25;
    for t in [CorrelationTable::tilted(0.5)?, CorrelationTable::quantum(), CorrelationTable::pr()] {
        let t = align_signs(&t);
        let budget = VarianceBudget::at_lower_bounds(&t, n)?;
        println!(
            "table {:?}\n  bounds Δ_a(B+B') >= {:.4}, Δ_a'(B-B') >= {:.4}; squares sum {:.4} of {:.4}; causal: {}",
            t.to_array(),
            variance_lower_bound_a(&t, n)?,
            variance_lower_bound_ap(&t, n)?,
            budget.delta_a_sum_sq + budget.delta_ap_diff_sq,
            budget.total,
            causality_condition(&t).ok
        );
        let model = vector_addition_model(&t)?;
        println!("  vector addition saturates the bounds: {}", model.saturates_bounds(&t, n)?);

        let (k_a, k_ap) = table_extremal_couplings(&t)?;
        let cfg = BatchConfig::new(n, Strategy::AlwaysA, 1)?;
        let obs = sample_batches(&k_a, &k_ap, &cfg, NoiseModel::NONE, 50_000)?;
        let spread = empirical(obs.iter().map(|o| o.b_mean + o.bp_mean).collect())?;
        let ms = mean_square_check(&obs, n)?;
        println!(
            "  scalar pairs: Δ_a(B+B') = {:.4}, <B²> = {:.5} (1/N = {:.5})",
            spread.variance.unwrap().sqrt(),
            ms.b.estimate,
            ms.expected
        );
    }
    Ok(())
}
