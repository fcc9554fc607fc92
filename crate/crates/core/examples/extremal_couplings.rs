//! Joint laws of Alice's outcome with both of Bob's counterfactual outcomes.
//!
//! Under `a` the targets are `(C, C)` and `b`, `b'` disagree as often as
//! they can; under `a'` the targets are `(C, -C)` and they agree as often as
//! they can. Both extremes equal `1 - C`.
//!
//! ```bash
//! cargo run --example extremal_couplings
//! ```

use superquantum::coupling::{
    cell_signs, closed_form_bounds, coupling_bounds, make_scalar_extremal_couplings,
    validate_coupling, COUPLING_TOL,
};

fn main() -> superquantum::Result<()> {
    println!("{:>5} {:>14} {:>14} {:>8}", "C", "P_a(b != b')", "P_a'(b = b')", "1 - C");
    for k in 0..=10 {
        let c = k as f64 / 10.0;
        let (under_a, under_ap) = make_scalar_extremal_couplings(c)?;
        println!(
            "{c:>5.1} {:>14.6} {:>14.6} {:>8.3}",
            under_a.disagreement(),
            under_ap.agreement(),
            1.0 - c
        );
    }

    let (under_a, _) = make_scalar_extremal_couplings(0.8)?;
    println!("\ncells of the C = 0.8 coupling under a:");
    for (k, p) in under_a.pmf.iter().enumerate() {
        let (i, j, jp) = cell_signs(k);
        println!("  i={i:+} b={j:+} b'={jp:+}  {p:.4}");
    }
    let report = validate_coupling(&under_a, (0.8, 0.8), COUPLING_TOL);
    println!("constraints hold: {}", report.ok);

    let lp = coupling_bounds(0.3, -0.6)?;
    let cf = closed_form_bounds(0.3, -0.6)?;
    println!("\ntargets (0.3, -0.6): LP {lp:?}\n                     closed form {cf:?}");
    Ok(())
}
