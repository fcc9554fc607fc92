//! Largest CHSH value compatible with x² + y² <= 4.
//!
//! ```bash
//! cargo run --release --example tsirelson_frontier
//! ```

use superquantum::causality::{
    frontier_scan, frontier_scan_with_rhs, implication_search, symmetric_frontier,
};

fn main() -> superquantum::Result<()> {
    let plane = frontier_scan(10_000)?;
    println!(
        "max CHSH {:.10} (2√2 = {:.10}) at x = {:.8}, y = {:.8}",
        plane.max_chsh_under_causality,
        2.0 * 2f64.sqrt(),
        plane.x,
        plane.y
    );
    println!("argmax table {:?}", plane.argmax_table.to_array());

    let sym = symmetric_frontier(10_000)?;
    println!("symmetric family: critical C = {:.12}", sym.critical_c);

    let relaxed = frontier_scan_with_rhs(1_000, 8.0)?;
    println!("with x² + y² <= 8: max CHSH {:.6}", relaxed.max_chsh_under_causality);

    let search = implication_search(1_000_000, 1);
    println!(
        "{} random tables: {} break the implication, {} obey |CHSH| <= 2√2 but not the condition",
        search.tested, search.counterexamples, search.witnesses
    );
    if let Some(t) = search.first_witness {
        println!("  e.g. {:?}", t.to_array());
    }
    Ok(())
}
