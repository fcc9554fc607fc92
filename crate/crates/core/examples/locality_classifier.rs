//! Which correlation tables a local hidden-variable model can produce.
//!
//! ```bash
//! cargo run --example locality_classifier
//! ```

use superquantum::box_model::{
    chsh, chsh_variants, classify_locality, classify_locality_lp, make_pr_box, make_tilted_box,
    CorrelationTable,
};

fn main() -> superquantum::Result<()> {
    println!("{:>6} {:>8} {:>10} {:>10}", "C", "CHSH", "variants", "hull LP");
    for c in [0.0, 0.25, 0.5, 0.6, std::f64::consts::FRAC_1_SQRT_2, 0.9, 1.0] {
        let t = CorrelationTable::tilted(c)?;
        println!(
            "{c:>6.3} {:>8.4} {:>10?} {:>10?}",
            chsh(&t),
            classify_locality(&t),
            classify_locality_lp(&t)
        );
    }

    // The box behind a table: p(i, j | x, y) = (1 + i j C(x, y)) / 4.
    let pr = make_pr_box();
    println!("\nPR box as JSON:\n{}", serde_json::to_string_pretty(&pr).unwrap());

    let quantum = make_tilted_box(std::f64::consts::FRAC_1_SQRT_2)?;
    let worst = chsh_variants(&quantum.correlations())
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    println!("largest CHSH variant of the quantum box: {worst:.6}");
    Ok(())
}
