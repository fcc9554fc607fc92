//! Driving the `superquantum` commands from code, with a TOML config.
//!
//! ```bash
//! cargo run --release --example command_line
//! ```

use superquantum::cli::{run_from_args, SignallingRun};

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "seed = 42\n\n[simulate]\nC = [0.5, 1.0]\nN = 16\nreps = 4000\nsigma = 0.1\n",
    )
    .expect("write config");
    let runs = dir.path().join("runs");
    std::fs::create_dir(&runs).expect("runs dir");
    let report = runs.join("signalling.json");

    let code = run_from_args([
        "superquantum",
        "--config",
        config.to_str().unwrap(),
        "simulate-signalling",
        "--out",
        report.to_str().unwrap(),
    ]);
    println!("simulate-signalling exit code {code}");
    let run: SignallingRun =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    for row in &run.rows {
        println!("  C = {}: {}", row.c, row.report.verdict.label());
    }

    let code = run_from_args(["superquantum", "verify-bounds", "--preset", "quantum"]);
    println!("verify-bounds exit code {code}");

    let code = run_from_args(["superquantum", "verify-bounds", "--table", "1.5,0,0,0"]);
    println!("malformed table exit code {code}");

    let export = dir.path().join("export");
    let code = run_from_args([
        "superquantum",
        "export",
        "--runs",
        runs.to_str().unwrap(),
        "--out",
        export.to_str().unwrap(),
    ]);
    println!("export exit code {code}");
    for entry in std::fs::read_dir(&export).unwrap() {
        println!("  {}", entry.unwrap().file_name().to_string_lossy());
    }
}
