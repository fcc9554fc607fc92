//! In the scalar model Bob's data stop depending on Alice's setting exactly
//! where the two extremal disagreement rates meet, 1 - C = C.
//!
//! ```bash
//! cargo run --release --example critical_c_scalar
//! ```

use superquantum::causality::critical_c_scalar;
use superquantum::coupling::make_scalar_extremal_couplings;
use superquantum::macro_stats::NoiseModel;
use superquantum::signalling::exact_tv_distance;

fn main() -> superquantum::Result<()> {
    println!("critical C = {}", critical_c_scalar());
    println!("\nper-batch total variation, sigma = 0");
    print!("{:>6}", "C \\ N");
    let ns = [1, 2, 4, 8, 12];
    for n in ns {
        print!("{n:>9}");
    }
    println!();
    for k in 0..=10 {
        let c = k as f64 / 10.0;
        let (k_a, k_ap) = make_scalar_extremal_couplings(c)?;
        print!("{c:>6.1}");
        for n in ns {
            print!("{:>9.5}", exact_tv_distance(&k_a, &k_ap, n, NoiseModel::NONE)?);
        }
        println!();
    }
    Ok(())
}
