//! The `superquantum` command line.
//!
//! Parameters come from an optional TOML file (`--config`) and are
//! overridden by flags. Every report is written atomically; JSON reports
//! carry `schema_version` and `kind`.
//!
//! ```toml
//! seed = 7
//!
//! [simulate]
//! C = [0.5, 1.0]      # scalar or list; lists are swept
//! N = 16
//! reps = 20000
//! sigma = [0.05, 0.1]
//! detector = "cov"    # cov | postselect | lr
//! threshold = 1.0
//! group_size = 20
//!
//! [table]
//! entries = [0.7071, 0.7071, 0.7071, -0.7071]   # or C = 0.7, or preset = "pr"
//! N = 16
//!
//! [scan]
//! resolution = 10000
//! symmetric = false
//!
//! [couplings]
//! C = 0.8              # or targets = [c1, c2]
//!
//! [export]
//! runs = "runs"
//! ```
//!
//! Exit codes: 0 success, 1 a verified invariant failed, 2 invalid
//! configuration, 3 I/O failure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::box_model::{chsh, classify_locality, AliceSetting, CorrelationTable, Locality};
use crate::causality::{
    causality_condition, frontier_scan_with_rhs, invariant_failures, symmetric_frontier,
    tsirelson_check, variance_lower_bound_a, variance_lower_bound_ap, FrontierReport,
    SymmetricFrontierReport, VarianceBudget, CAUSALITY_RHS, MIN_RESOLUTION,
};
use crate::coupling::{
    cell_signs, coupling_bounds, extremal_coupling, table_extremal_couplings, validate_coupling,
    CouplingBounds, CouplingReport, Objective, TripleCoupling, COUPLING_TOL,
};
use crate::error::Error;
use crate::macro_stats::{
    sample_batches, write_batch_csv, BatchConfig, BatchRecord, NoiseModel, Strategy,
};
use crate::signalling::{
    cell_seed, resource_sweep, write_sweep_csv, Detector, LatticeLaw, SweepRow, SweepSettings,
    DEFAULT_GROUP_SIZE, DEFAULT_RESOLUTION,
};

pub const SCHEMA_VERSION: &str = "1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Largest `N` for which `export` writes an exact lattice histogram.
pub const MAX_HISTOGRAM_PAIRS: usize = 256;

#[derive(Debug, Parser)]
#[command(name = "superquantum", version, about = "No-signalling boxes and macroscopic signalling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML file with parameters; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (a directory for `export`); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate Alice's two strategies and score Bob's detector.
    SimulateSignalling(SimulateArgs),
    /// Check the variance bounds and causality condition for one table.
    VerifyBounds(TableArgs),
    /// Maximize CHSH under the causality condition.
    ScanFrontier(ScanArgs),
    /// Extremal couplings and coupling bounds for correlation targets.
    Couplings(CouplingArgs),
    /// Turn stored signalling reports into plot-ready CSV.
    Export(ExportArgs),
}

#[derive(Debug, Default, Args)]
pub struct SimulateArgs {
    /// Symmetric-family parameter(s) C of the table (C, C, C, -C).
    #[arg(long = "C", value_delimiter = ',', allow_hyphen_values = true)]
    pub c: Option<Vec<f64>>,
    /// Pairs per batch.
    #[arg(long = "N", value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Batches per strategy.
    #[arg(long, value_delimiter = ',')]
    pub reps: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    #[arg(long, value_parser = ["cov", "postselect", "lr"])]
    pub detector: Option<String>,
    /// Post-selection threshold on |B| and |B'|.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Batches per decision.
    #[arg(long)]
    pub group_size: Option<usize>,
    /// Dump the first configuration's batches here.
    #[arg(long)]
    pub batches_csv: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct TableArgs {
    /// C(a,b),C(a,b'),C(a',b),C(a',b').
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub table: Option<Vec<f64>>,
    /// Symmetric-family table (C, C, C, -C).
    #[arg(long = "C", allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long, value_parser = ["pr", "quantum", "zero"])]
    pub preset: Option<String>,
    /// Pairs per batch for the variance bounds.
    #[arg(long = "N")]
    pub n: Option<usize>,
}

#[derive(Debug, Default, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Scan the family (C, C, C, -C) instead of the (x, y) plane.
    #[arg(long)]
    pub symmetric: bool,
    /// Right-hand side of x² + y² <= rhs.
    #[arg(long)]
    pub rhs: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct CouplingArgs {
    /// Targets (C, C) under a and (C, -C) under a'.
    #[arg(long = "C", allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// One pair of targets (C(i,b), C(i,b')), both extremes.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub targets: Option<Vec<f64>>,
}

#[derive(Debug, Default, Args)]
pub struct ExportArgs {
    /// Directory of JSON reports from earlier runs.
    #[arg(long)]
    pub runs: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub simulate: SimulateSection,
    pub table: TableSection,
    pub scan: ScanSection,
    pub couplings: CouplingSection,
    pub export: ExportSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    #[serde(rename = "C")]
    pub c: Option<OneOrMany<f64>>,
    #[serde(rename = "N")]
    pub n: Option<OneOrMany<usize>>,
    pub reps: Option<OneOrMany<usize>>,
    pub sigma: Option<OneOrMany<f64>>,
    pub detector: Option<String>,
    pub threshold: Option<f64>,
    pub group_size: Option<usize>,
    pub resolution: Option<f64>,
    pub batches_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableSection {
    pub entries: Option<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub preset: Option<String>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub resolution: Option<usize>,
    pub symmetric: Option<bool>,
    pub rhs: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingSection {
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub targets: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportSection {
    pub runs: Option<PathBuf>,
}

/// Why a command stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Every invalid field, one message each.
    Config(Vec<String>),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(problems) => {
                writeln!(f, "invalid configuration:")?;
                for p in problems {
                    writeln!(f, "  - {p}")?;
                }
                Ok(())
            }
            CliError::Io(msg) => writeln!(f, "I/O error: {msg}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::config(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::config(format!("config {}: {}", path.display(), e.message())))
}

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.flush().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(value).expect("reports serialize");
    s.push(b'\n');
    s
}

/// Options shared by every command after merging file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Globals {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Globals {
    fn resolved_seed(&self) -> u64 {
        let seed = self.seed.unwrap_or_else(rand::random);
        eprintln!("seed: {seed}");
        seed
    }
}

/// Parses `args` (program name first) and runs the command; returns the
/// exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprint!("{e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> CliResult<i32> {
    let file = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    let globals = Globals {
        seed: cli.seed.or(file.seed),
        out: cli.out.clone().or(file.out.clone()),
        format: cli.format.or(file.format),
    };
    match cli.command {
        Command::SimulateSignalling(a) => cmd_simulate_signalling(&a, &file.simulate, &globals),
        Command::VerifyBounds(a) => cmd_verify_bounds(&a, &file.table, &globals),
        Command::ScanFrontier(a) => cmd_scan_frontier(&a, &file.scan, &globals),
        Command::Couplings(a) => cmd_couplings(&a, &file.couplings, &globals),
        Command::Export(a) => cmd_export(&a, &file.export, &globals),
    }
}

/// `simulate-signalling` output: one row per `(C, N, R, sigma)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignallingRun {
    pub schema_version: String,
    pub kind: String,
    pub seed: u64,
    pub settings: SweepSettings,
    pub rows: Vec<SweepRow>,
}

/// Fully validated `simulate-signalling` parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatePlan {
    pub c: Vec<f64>,
    pub n: Vec<usize>,
    pub reps: Vec<usize>,
    pub sigma: Vec<f64>,
    pub settings: SweepSettings,
    pub batches_csv: Option<PathBuf>,
}

pub fn simulate_plan(args: &SimulateArgs, file: &SimulateSection) -> CliResult<SimulatePlan> {
    let c = args.c.clone().or(file.c.clone().map(OneOrMany::into_vec)).unwrap_or(vec![1.0]);
    let n = args.n.clone().or(file.n.clone().map(OneOrMany::into_vec)).unwrap_or(vec![16]);
    let reps = args
        .reps
        .clone()
        .or(file.reps.clone().map(OneOrMany::into_vec))
        .unwrap_or(vec![20_000]);
    let sigma = args
        .sigma
        .clone()
        .or(file.sigma.clone().map(OneOrMany::into_vec))
        .unwrap_or(vec![0.1]);
    let detector = args.detector.clone().or(file.detector.clone()).unwrap_or("cov".into());
    let threshold = args.threshold.or(file.threshold).unwrap_or(1.0);
    let group_size = args.group_size.or(file.group_size).unwrap_or(DEFAULT_GROUP_SIZE);
    let resolution = file.resolution.unwrap_or(DEFAULT_RESOLUTION);

    let mut problems = Vec::new();
    for (name, empty) in [
        ("C", c.is_empty()),
        ("N", n.is_empty()),
        ("reps", reps.is_empty()),
        ("sigma", sigma.is_empty()),
    ] {
        if empty {
            problems.push(format!("{name}: list is empty"));
        }
    }
    for &v in &c {
        if !(0.0..=1.0).contains(&v) {
            problems.push(format!("C = {v}: must lie in [0, 1]"));
        }
    }
    for &v in &n {
        if v == 0 {
            problems.push("N = 0: batches need at least one pair".into());
        }
    }
    for &v in &reps {
        if v == 0 {
            problems.push("reps = 0: need at least one batch per strategy".into());
        }
    }
    for &v in &sigma {
        if !(v.is_finite() && v >= 0.0) {
            problems.push(format!("sigma = {v}: must be finite and >= 0"));
        }
    }
    let detector = match detector.parse::<Detector>() {
        Ok(d) => Some(d),
        Err(e) => {
            problems.push(format!("detector: {e}"));
            None
        }
    };
    if !(threshold > 0.0 && threshold <= 1.0) {
        problems.push(format!("threshold = {threshold}: must lie in (0, 1]"));
    }
    if group_size == 0 {
        problems.push("group_size = 0: must be at least 1".into());
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        problems.push(format!("resolution = {resolution}: must lie in (0, 1]"));
    }
    if !problems.is_empty() {
        return Err(CliError::Config(problems));
    }
    Ok(SimulatePlan {
        c,
        n,
        reps,
        sigma,
        settings: SweepSettings {
            detector: detector.expect("checked above"),
            postselect_threshold: threshold,
            group_size,
            resolution,
        },
        batches_csv: args.batches_csv.clone().or(file.batches_csv.clone()),
    })
}

pub fn simulate(plan: &SimulatePlan, seed: u64) -> CliResult<SignallingRun> {
    let mut rows = Vec::new();
    for (ci, &c) in plan.c.iter().enumerate() {
        let table = CorrelationTable::tilted(c)?;
        rows.extend(resource_sweep(
            &table,
            &plan.n,
            &plan.reps,
            &plan.sigma,
            &plan.settings,
            cell_seed(seed, ci as u64),
        )?);
    }
    Ok(SignallingRun {
        schema_version: SCHEMA_VERSION.into(),
        kind: "signalling".into(),
        seed,
        settings: plan.settings,
        rows,
    })
}

fn batch_records(row: &SweepRow) -> CliResult<Vec<BatchRecord>> {
    let (k_a, k_ap) = table_extremal_couplings(&CorrelationTable::tilted(row.c)?)?;
    let noise = NoiseModel::new(row.sigma)?;
    let mut records = Vec::with_capacity(2 * row.repetitions);
    for strategy in Strategy::BOTH {
        let cfg = BatchConfig::new(row.n_pairs, strategy, row.seed)?;
        let batches = sample_batches(&k_a, &k_ap, &cfg, noise, row.repetitions)?;
        records.extend(batches.into_iter().enumerate().map(|(idx, observation)| BatchRecord {
            batch_index: idx as u64,
            strategy,
            n_pairs: row.n_pairs,
            observation,
            seed: row.seed,
        }));
    }
    Ok(records)
}

pub fn cmd_simulate_signalling(
    args: &SimulateArgs,
    file: &SimulateSection,
    globals: &Globals,
) -> CliResult<i32> {
    let plan = simulate_plan(args, file)?;
    let seed = globals.resolved_seed();
    let run = simulate(&plan, seed)?;
    for r in &run.rows {
        eprintln!(
            "C={} N={} R={} sigma={} {}: advantage {:.4} [{:.4}, {:.4}] {}",
            r.c,
            r.n_pairs,
            r.repetitions,
            r.sigma,
            r.detector.short_name(),
            r.report.advantage,
            r.report.ci_low,
            r.report.ci_high,
            r.report.verdict.label()
        );
    }
    let bytes = match globals.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&run),
        Format::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, &run.rows).expect("writing to memory");
            buf
        }
    };
    if let Some(path) = &plan.batches_csv {
        let mut buf = Vec::new();
        write_batch_csv(&mut buf, &batch_records(&run.rows[0])?).expect("writing to memory");
        write_atomic(path, &buf)?;
    }
    emit(globals.out.as_deref(), &bytes)?;
    Ok(EXIT_OK)
}

/// `verify-bounds` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: String,
    pub kind: String,
    pub table: CorrelationTable,
    pub chsh: f64,
    pub causality_lhs: f64,
    pub causality_ok: bool,
    pub causality_margin: f64,
    pub tsirelson_ok: bool,
    pub locality: Locality,
    pub n_pairs: usize,
    pub lower_bound_a: f64,
    pub lower_bound_ap: f64,
    pub budget_total: f64,
    pub failures: Vec<String>,
}

pub fn resolve_table(args: &TableArgs, file: &TableSection) -> CliResult<CorrelationTable> {
    let entries = args.table.clone().or(file.entries.clone());
    let c = args.c.or(file.c);
    let preset = args.preset.clone().or(file.preset.clone());
    let given = [entries.is_some(), c.is_some(), preset.is_some()];
    match given.iter().filter(|&&g| g).count() {
        0 => return Err(CliError::config("table: give one of --table, --C or --preset")),
        1 => {}
        _ => return Err(CliError::config("table: --table, --C and --preset are exclusive")),
    }
    if let Some(v) = entries {
        if v.len() != 4 {
            return Err(CliError::config(format!("table: expected 4 entries, got {}", v.len())));
        }
        let names = ["C(a,b)", "C(a,b')", "C(a',b)", "C(a',b')"];
        let problems: Vec<String> = v
            .iter()
            .zip(names)
            .filter(|(x, _)| !(x.is_finite() && (-1.0..=1.0).contains(*x)))
            .map(|(x, n)| format!("table: {n} = {x} lies outside [-1, 1]"))
            .collect();
        if !problems.is_empty() {
            return Err(CliError::Config(problems));
        }
        return Ok(CorrelationTable::from_array([v[0], v[1], v[2], v[3]])?);
    }
    if let Some(c) = c {
        return Ok(CorrelationTable::tilted(c)?);
    }
    match preset.as_deref() {
        Some("pr") => Ok(CorrelationTable::pr()),
        Some("quantum") => Ok(CorrelationTable::quantum()),
        Some("zero") => Ok(CorrelationTable::zero()),
        other => Err(CliError::config(format!("table: unknown preset {other:?}"))),
    }
}

pub fn verify_bounds(table: &CorrelationTable, n_pairs: usize) -> CliResult<VerifyReport> {
    let verdict = causality_condition(table);
    let budget = VarianceBudget::at_lower_bounds(table, n_pairs)?;
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION.into(),
        kind: "verify-bounds".into(),
        table: *table,
        chsh: chsh(table),
        causality_lhs: verdict.lhs,
        causality_ok: verdict.ok,
        causality_margin: verdict.margin,
        tsirelson_ok: tsirelson_check(table),
        locality: classify_locality(table),
        n_pairs,
        lower_bound_a: variance_lower_bound_a(table, n_pairs)?,
        lower_bound_ap: variance_lower_bound_ap(table, n_pairs)?,
        budget_total: budget.total,
        failures: invariant_failures(table, n_pairs)?,
    })
}

pub fn cmd_verify_bounds(args: &TableArgs, file: &TableSection, globals: &Globals) -> CliResult<i32> {
    let n = args.n.or(file.n).unwrap_or(1);
    let table = resolve_table(args, file);
    if n == 0 {
        let mut problems = match table {
            Err(CliError::Config(p)) => p,
            _ => Vec::new(),
        };
        problems.push("N = 0: must be at least 1".into());
        return Err(CliError::Config(problems));
    }
    let table = table?;
    let report = verify_bounds(&table, n)?;
    let bytes = match globals.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = String::from(
                "c_ab,c_abp,c_apb,c_apbp,chsh,causality_lhs,causality_ok,tsirelson_ok,lower_bound_a,lower_bound_ap,budget_total\n",
            );
            let t = report.table;
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                t.c_ab,
                t.c_abp,
                t.c_apb,
                t.c_apbp,
                report.chsh,
                report.causality_lhs,
                report.causality_ok,
                report.tsirelson_ok,
                report.lower_bound_a,
                report.lower_bound_ap,
                report.budget_total
            )
            .expect("writing to a string");
            s.into_bytes()
        }
    };
    emit(globals.out.as_deref(), &bytes)?;
    for f in &report.failures {
        eprintln!("invariant failed: {f}");
    }
    Ok(if report.failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    })
}

/// `scan-frontier` output; exactly one of the two scans is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRun {
    pub schema_version: String,
    pub kind: String,
    pub plane: Option<FrontierReport>,
    pub symmetric: Option<SymmetricFrontierReport>,
}

pub fn cmd_scan_frontier(args: &ScanArgs, file: &ScanSection, globals: &Globals) -> CliResult<i32> {
    let resolution = args.resolution.or(file.resolution).unwrap_or(10_000);
    let symmetric = args.symmetric || file.symmetric.unwrap_or(false);
    let rhs = args.rhs.or(file.rhs).unwrap_or(CAUSALITY_RHS);
    let mut problems = Vec::new();
    if resolution < MIN_RESOLUTION {
        problems.push(format!("resolution = {resolution}: must be at least {MIN_RESOLUTION}"));
    }
    if !(rhs.is_finite() && rhs > 0.0) {
        problems.push(format!("rhs = {rhs}: must be positive"));
    }
    if symmetric && rhs != CAUSALITY_RHS {
        problems.push("rhs: the symmetric scan uses the causality bound only".into());
    }
    if !problems.is_empty() {
        return Err(CliError::Config(problems));
    }
    let run = if symmetric {
        let r = symmetric_frontier(resolution)?;
        eprintln!("critical C = {:.12}, max CHSH = {:.12}", r.critical_c, r.max_chsh);
        ScanRun {
            schema_version: SCHEMA_VERSION.into(),
            kind: "scan-frontier".into(),
            plane: None,
            symmetric: Some(r),
        }
    } else {
        let r = frontier_scan_with_rhs(resolution, rhs)?;
        eprintln!(
            "max CHSH = {:.12} at x = {:.12}, y = {:.12}",
            r.max_chsh_under_causality, r.x, r.y
        );
        ScanRun {
            schema_version: SCHEMA_VERSION.into(),
            kind: "scan-frontier".into(),
            plane: Some(r),
            symmetric: None,
        }
    };
    let bytes = match globals.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&run),
        Format::Csv => {
            let mut s = String::new();
            if let Some(r) = &run.plane {
                s.push_str("x,y,chsh,causality_margin\n");
                for p in &r.grid {
                    writeln!(s, "{},{},{},{}", p.x, p.y, p.chsh, p.causality_margin).unwrap();
                }
            }
            if let Some(r) = &run.symmetric {
                s.push_str("C,chsh,causality_margin\n");
                for p in &r.grid {
                    writeln!(s, "{},{},{}", p.c, p.chsh, p.causality_margin).unwrap();
                }
            }
            s.into_bytes()
        }
    };
    emit(globals.out.as_deref(), &bytes)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingEntry {
    pub targets: (f64, f64),
    pub objective: Objective,
    pub coupling: TripleCoupling,
    pub validation: CouplingReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsEntry {
    pub targets: (f64, f64),
    pub bounds: CouplingBounds,
}

/// `couplings` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingsRun {
    pub schema_version: String,
    pub kind: String,
    pub couplings: Vec<CouplingEntry>,
    pub bounds: Vec<BoundsEntry>,
}

fn coupling_entry(
    setting: AliceSetting,
    targets: (f64, f64),
    objective: Objective,
) -> CliResult<CouplingEntry> {
    let coupling = extremal_coupling(setting, targets.0, targets.1, objective)?;
    Ok(CouplingEntry {
        targets,
        objective,
        coupling,
        validation: validate_coupling(&coupling, targets, COUPLING_TOL),
    })
}

pub fn couplings(args: &CouplingArgs, file: &CouplingSection) -> CliResult<CouplingsRun> {
    let c = args.c.or(file.c);
    let targets = args.targets.clone().or(file.targets.clone());
    let check = |name: &str, v: f64| {
        (!(v.is_finite() && (-1.0..=1.0).contains(&v)))
            .then(|| format!("{name} = {v}: must lie in [-1, 1]"))
    };
    let (entries, pairs) = match (c, targets) {
        (Some(_), Some(_)) => return Err(CliError::config("--C and --targets are exclusive")),
        (None, None) => return Err(CliError::config("give --C or --targets")),
        (Some(c), None) => {
            if let Some(p) = check("C", c) {
                return Err(CliError::config(p));
            }
            (
                vec![
                    coupling_entry(AliceSetting::A, (c, c), Objective::MaxDisagree)?,
                    coupling_entry(AliceSetting::APrime, (c, -c), Objective::MinDisagree)?,
                ],
                vec![(c, c), (c, -c)],
            )
        }
        (None, Some(t)) => {
            if t.len() != 2 {
                return Err(CliError::config(format!("targets: expected 2 values, got {}", t.len())));
            }
            let problems: Vec<String> =
                [("targets[0]", t[0]), ("targets[1]", t[1])].iter().filter_map(|&(n, v)| check(n, v)).collect();
            if !problems.is_empty() {
                return Err(CliError::Config(problems));
            }
            let pair = (t[0], t[1]);
            (
                vec![
                    coupling_entry(AliceSetting::A, pair, Objective::MinDisagree)?,
                    coupling_entry(AliceSetting::A, pair, Objective::MaxDisagree)?,
                ],
                vec![pair],
            )
        }
    };
    let bounds = pairs
        .into_iter()
        .map(|targets| {
            Ok(BoundsEntry {
                targets,
                bounds: coupling_bounds(targets.0, targets.1)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(CouplingsRun {
        schema_version: SCHEMA_VERSION.into(),
        kind: "couplings".into(),
        couplings: entries,
        bounds,
    })
}

pub fn cmd_couplings(args: &CouplingArgs, file: &CouplingSection, globals: &Globals) -> CliResult<i32> {
    let run = couplings(args, file)?;
    let bytes = match globals.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&run),
        Format::Csv => {
            let mut s = String::from("setting,target_b,target_bprime,objective,i,b,bprime,probability\n");
            for e in &run.couplings {
                let setting = match e.coupling.alice_setting {
                    AliceSetting::A => "a",
                    AliceSetting::APrime => "a'",
                };
                for (k, p) in e.coupling.pmf.iter().enumerate() {
                    let (i, j, jp) = cell_signs(k);
                    writeln!(
                        s,
                        "{setting},{},{},{:?},{i},{j},{jp},{p}",
                        e.targets.0, e.targets.1, e.objective
                    )
                    .unwrap();
                }
            }
            s.into_bytes()
        }
    };
    emit(globals.out.as_deref(), &bytes)?;
    let ok = run.couplings.iter().all(|e| e.validation.ok);
    Ok(if ok { EXIT_OK } else { EXIT_INVARIANT })
}

/// Reads every `kind = "signalling"` JSON report in `dir`.
pub fn load_signalling_runs(dir: &Path) -> CliResult<Vec<SignallingRun>> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::config(format!("runs directory {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut runs = Vec::new();
    for p in paths {
        let text = fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
        let value: serde_json::Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if value.get("kind").and_then(|k| k.as_str()) != Some("signalling") {
            continue;
        }
        let run: SignallingRun = serde_json::from_value(value)
            .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
        if run.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "{}: unsupported schema_version {}",
                p.display(),
                run.schema_version
            )));
        }
        runs.push(run);
    }
    if runs.is_empty() {
        return Err(CliError::config(format!(
            "no signalling reports in {}",
            dir.display()
        )));
    }
    Ok(runs)
}

pub const ADVANTAGE_CSV_HEADER: &str =
    "C,N,R,sigma,detector,group_size,advantage,ci_low,ci_high,exact_tv";
pub const HISTOGRAM_CSV_HEADER: &str = "strategy,B,Bprime,B_plus_Bprime,probability";

/// Advantage-vs-C rows sorted by detector, N, sigma, R, then C.
pub fn advantage_csv(runs: &[SignallingRun]) -> String {
    let mut rows: Vec<&SweepRow> = runs.iter().flat_map(|r| &r.rows).collect();
    rows.sort_by(|a, b| {
        (a.detector.short_name(), a.n_pairs, a.repetitions)
            .cmp(&(b.detector.short_name(), b.n_pairs, b.repetitions))
            .then(a.sigma.total_cmp(&b.sigma))
            .then(a.c.total_cmp(&b.c))
    });
    let mut s = format!("{ADVANTAGE_CSV_HEADER}\n");
    for r in rows {
        let tv = r.exact_tv.map(|t| t.to_string()).unwrap_or_default();
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.c,
            r.n_pairs,
            r.repetitions,
            r.sigma,
            r.detector.short_name(),
            r.group_size,
            r.report.advantage,
            r.report.ci_low,
            r.report.ci_high,
            tv
        )
        .unwrap();
    }
    s
}

/// Exact noiseless law of `(B, B')` under both strategies.
pub fn histogram_csv(c: f64, n_pairs: usize) -> CliResult<String> {
    let (k_a, k_ap) = table_extremal_couplings(&CorrelationTable::tilted(c)?)?;
    let mut s = format!("{HISTOGRAM_CSV_HEADER}\n");
    for (strategy, k) in [(Strategy::AlwaysA, k_a), (Strategy::AlwaysAprime, k_ap)] {
        for (b, bp, p) in LatticeLaw::new(&k, n_pairs)?.support() {
            writeln!(s, "{},{b},{bp},{},{p}", strategy.label(), b + bp).unwrap();
        }
    }
    Ok(s)
}

pub fn cmd_export(args: &ExportArgs, file: &ExportSection, globals: &Globals) -> CliResult<i32> {
    let runs_dir = args
        .runs
        .clone()
        .or(file.runs.clone())
        .ok_or_else(|| CliError::config("export: --runs DIR is required"))?;
    let runs = load_signalling_runs(&runs_dir)?;
    let out = globals.out.clone().unwrap_or_else(|| PathBuf::from("export"));
    fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
    write_atomic(&out.join("advantage_vs_C.csv"), advantage_csv(&runs).as_bytes())?;
    let mut cells: BTreeMap<(u64, usize), f64> = BTreeMap::new();
    for r in runs.iter().flat_map(|r| &r.rows) {
        if r.n_pairs <= MAX_HISTOGRAM_PAIRS {
            cells.insert((r.c.to_bits(), r.n_pairs), r.c);
        }
    }
    for (&(_, n), &c) in &cells {
        let name = format!("histogram_C{c}_N{n}.csv");
        write_atomic(&out.join(&name), histogram_csv(c, n)?.as_bytes())?;
    }
    eprintln!("wrote advantage_vs_C.csv and {} histogram(s) to {}", cells.len(), out.display());
    Ok(EXIT_OK)
}
