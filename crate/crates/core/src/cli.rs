//! Command-line front end. The `locdb` binary only forwards its arguments to
//! [`main_with_args`].

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::analytic::{
    evaluate_system, level_stats, pk_response_time, response_curves, select_index, AnalyticError,
    IndexChoice, QueueStats, SelectionInputs,
};
use crate::bench::{bench_index, IndexBench, DEFAULT_KEYS, DEFAULT_PROBES};
use crate::desim::{run_simulation, SimConfig, SimError};
use crate::index::{IndexError, ServiceTimeEstimate};
use crate::overlap::{parse_waypoints, OverlapConfig, OverlapError, OverlapSystem, Scenario};
use crate::params::{arrival_rates, Level, ParamsError, SystemParams};
use crate::trace::TRACE_HEADER;

/// Marker written in place of a response time for a saturated queue.
pub const SATURATED: &str = "SATURATED";

pub const ANALYZE_HEADER: [&str; 7] = [
    "rho",
    "level",
    "index",
    "lambda_per_s",
    "E_S_us",
    "Var_S_us2",
    "T_us",
];
pub const SIMULATE_HEADER: [&str; 11] = [
    "rho",
    "level",
    "index",
    "lambda_per_s",
    "E_S_us",
    "Var_S_us2",
    "T_us",
    "empirical_T_us",
    "ci_halfwidth_us",
    "T_u_us",
    "T_d_us",
];
pub const BENCH_HEADER: [&str; 5] = ["index", "keys", "probes", "mean_us", "var_us2"];
pub const REPORT_HEADER: [&str; 3] = ["quantity", "value", "unit"];

#[derive(Debug, Parser)]
#[command(
    name = "locdb",
    version,
    about = "Three-level location database models",
    arg_required_else_help = true
)]
pub struct Cli {
    /// Parameter file (`key = value` lines); built-in defaults otherwise.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic response time over a user-density sweep.
    Analyze(AnalyzeArgs),
    /// Discrete-event simulation next to the analytic model.
    Simulate(SimulateArgs),
    /// Measure per-lookup service time of each index organization.
    BenchIndex(BenchArgs),
    /// Trace a terminal through an overlapping-coverage scenario.
    OverlapScenario(OverlapArgs),
    /// Arrival rates, service moments and delays at the configured point.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TTreeArgs {
    /// Keys in the benchmark T-tree used to estimate its service time.
    #[arg(long, default_value_t = DEFAULT_KEYS)]
    pub keys: u64,
    /// Probes used for the estimate.
    #[arg(long, default_value_t = DEFAULT_PROBES)]
    pub probes: usize,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// 0, 1 or 2; all tiers when omitted.
    #[arg(long)]
    pub level: Option<u8>,
    /// memory-direct, t-tree or disk-direct; all when omitted.
    #[arg(long)]
    pub index: Option<String>,
    /// `rho=start:stop:step`, endpoints inclusive.
    #[arg(long, default_value = "rho=50:2000:50")]
    pub sweep: String,
    #[command(flatten)]
    pub ttree: TTreeArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulated seconds.
    #[arg(long, default_value_t = 60.0)]
    pub horizon: f64,
    /// Override the configured user density.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Organization at every tier, or three comma-separated names for DB0,DB1,DB2.
    #[arg(long, default_value = "memory-direct")]
    pub index: String,
    /// Also write every queue event in the trace line format.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Run even if a tier is overloaded.
    #[arg(long)]
    pub allow_saturation: bool,
    #[command(flatten)]
    pub ttree: TTreeArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// memory-direct, t-tree or disk-direct; all when omitted.
    #[arg(long)]
    pub index: Option<String>,
    #[command(flatten)]
    pub ttree: TTreeArgs,
}

#[derive(Debug, Args)]
pub struct OverlapArgs {
    /// a, b or c.
    pub scenario: String,
    /// Waypoint file (`t_s,region_id,speed_kmh,heading_network_id,in_call`).
    #[arg(long)]
    pub waypoints: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub ptn: u64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Emit `quantity,value,unit` CSV at full precision.
    #[arg(long)]
    pub csv: bool,
    #[command(flatten)]
    pub ttree: TTreeArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Overlap(#[from] OverlapError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Params(_) | CliError::Io(_) | CliError::Csv(_) => 1,
            CliError::Overlap(OverlapError::MalformedWaypoints(_)) => 1,
            CliError::Analytic(_)
            | CliError::Sim(_)
            | CliError::Index(_)
            | CliError::Overlap(_) => 2,
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("locdb: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command, writing to `--output` or standard output.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut buf = Vec::new();
    run(cli, &mut buf)?;
    match &cli.output {
        Some(path) => File::create(path)?.write_all(&buf)?,
        None => io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

pub fn load_params(config: Option<&Path>) -> Result<SystemParams, CliError> {
    let p = match config {
        Some(path) => SystemParams::load(path)?,
        None => SystemParams::default(),
    };
    p.validate()?;
    Ok(p)
}

/// Runs a parsed command into `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let p = load_params(cli.config.as_deref())?;
    match &cli.command {
        Command::Analyze(a) => analyze(&p, cli.seed, a, out),
        Command::Simulate(a) => simulate(&p, cli.seed, a, out),
        Command::BenchIndex(a) => bench(&p, cli.seed, a, out),
        Command::OverlapScenario(a) => overlap(a, out),
        Command::Report(a) => report(&p, cli.seed, a, out),
    }
}

/// Expands `name=start:stop:step` (or `name=value`) into its grid.
pub fn parse_sweep(spec: &str, name: &str) -> Result<Vec<f64>, CliError> {
    let bad = || {
        CliError::Usage(format!(
            "bad sweep {spec:?}, expected {name}=start:stop:step"
        ))
    };
    let (key, range) = spec.split_once('=').ok_or_else(bad)?;
    if key.trim() != name {
        return Err(CliError::Usage(format!(
            "can only sweep {name}, not {:?}",
            key.trim()
        )));
    }
    let parts: Vec<f64> = range
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    if parts.iter().any(|x| !x.is_finite()) {
        return Err(bad());
    }
    match parts[..] {
        [v] => Ok(vec![v]),
        [start, stop, step] => {
            if !(step > 0.0) || stop < start {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}

fn parse_choice(name: &str) -> Result<IndexChoice, CliError> {
    IndexChoice::from_name(name.trim()).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown index {name:?}, expected memory-direct, t-tree or disk-direct"
        ))
    })
}

fn choices_or_all(name: Option<&str>) -> Result<Vec<IndexChoice>, CliError> {
    match name {
        Some(n) => Ok(vec![parse_choice(n)?]),
        None => Ok(IndexChoice::ALL.to_vec()),
    }
}

/// Full-precision number for CSV; formatting round-trips exactly.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Four significant digits for human-readable output.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-3..5).contains(&exp) {
        let decimals = (3 - exp).max(0) as usize;
        let scale = 10f64.powi(exp - 3);
        let rounded = if exp > 3 {
            (x / scale).round() * scale
        } else {
            x
        };
        format!("{rounded:.decimals$}")
    } else {
        format!("{x:.3e}")
    }
}

/// Header row then data rows.
pub fn emit_csv<W: Write>(header: &[&str], rows: &[Vec<String>], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn ttree_bench(p: &SystemParams, seed: u64, t: &TTreeArgs) -> Result<IndexBench, CliError> {
    Ok(bench_index(
        p,
        IndexChoice::TTreeIndex,
        t.keys,
        t.probes,
        seed,
    )?)
}

fn model_cells(stats: &QueueStats, response: Option<f64>) -> [String; 4] {
    [
        num(stats.arrival_rate),
        num(stats.mean_service * 1e6),
        num(stats.var_service * 1e12),
        response.map_or_else(|| SATURATED.to_string(), |t| num(t * 1e6)),
    ]
}

fn analyze(
    p: &SystemParams,
    seed: u64,
    a: &AnalyzeArgs,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let sweep = parse_sweep(&a.sweep, "rho")?;
    let levels = match a.level {
        Some(i) => {
            vec![Level::from_index(i).ok_or_else(|| CliError::Usage(format!("no level {i}")))?]
        }
        None => Level::ALL.to_vec(),
    };
    let choices = choices_or_all(a.index.as_deref())?;
    let est = if choices.contains(&IndexChoice::TTreeIndex) {
        Some(ttree_bench(p, seed, &a.ttree)?.estimate)
    } else {
        None
    };
    let mut rows = Vec::new();
    for &level in &levels {
        for &choice in &choices {
            for pt in response_curves(p, &sweep, choice, level, est.as_ref())? {
                let mut row = vec![num(pt.rho), level.to_string(), choice.name().to_string()];
                row.extend(model_cells(&pt.stats, pt.response));
                rows.push(row);
            }
        }
    }
    // ordered by sweep value, then tier and organization
    rows.sort_by(|x, y| {
        let rx: f64 = x[0].parse().unwrap_or(0.0);
        let ry: f64 = y[0].parse().unwrap_or(0.0);
        rx.total_cmp(&ry)
    });
    emit_csv(&ANALYZE_HEADER, &rows, out)
}

fn parse_choices3(spec: &str) -> Result<[IndexChoice; 3], CliError> {
    let names: Vec<&str> = spec.split(',').collect();
    match names[..] {
        [one] => Ok([parse_choice(one)?; 3]),
        [a, b, c] => Ok([parse_choice(a)?, parse_choice(b)?, parse_choice(c)?]),
        _ => Err(CliError::Usage(format!(
            "--index takes one name or three, got {spec:?}"
        ))),
    }
}

fn simulate(
    p: &SystemParams,
    seed: u64,
    a: &SimulateArgs,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let p = match a.rho {
        Some(rho) => p.with_rho(rho),
        None => p.clone(),
    };
    p.validate()?;
    let choices = parse_choices3(&a.index)?;
    let bench = if choices.contains(&IndexChoice::TTreeIndex) {
        Some(ttree_bench(&p, seed, &a.ttree)?)
    } else {
        None
    };
    let samples: Option<Arc<[f64]>> = bench.as_ref().map(|b| Arc::clone(&b.samples));
    let est = bench.as_ref().map(|b| b.estimate);
    let mut config = SimConfig::for_choices(&p, a.horizon, seed, choices, samples.as_ref())?;
    config.allow_saturation = a.allow_saturation;
    let metrics = match &a.trace {
        Some(path) => {
            let mut f = io::BufWriter::new(File::create(path)?);
            writeln!(f, "{TRACE_HEADER}")?;
            let m = run_simulation(&p, &config, Some(&mut f))?;
            f.flush()?;
            m
        }
        None => run_simulation(&p, &config, None)?,
    };
    let w = p.workload();
    let mut rows = Vec::new();
    for level in Level::ALL {
        let i = level.index();
        let stats = level_stats(&p, w, level, choices[i], est.as_ref())?;
        let response = match pk_response_time(&stats) {
            Ok(t) => Some(t),
            Err(AnalyticError::Saturated { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        let m = metrics.level(level);
        let mut row = vec![num(p.rho), level.to_string(), choices[i].name().to_string()];
        row.extend(model_cells(&stats, response));
        row.push(num(m.mean_response * 1e6));
        row.push(num(m.ci_half_width * 1e6));
        row.push(num(metrics.update_delay.mean * 1e6));
        row.push(num(metrics.delivery_delay.mean * 1e6));
        rows.push(row);
    }
    emit_csv(&SIMULATE_HEADER, &rows, out)
}

fn bench(p: &SystemParams, seed: u64, a: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for choice in choices_or_all(a.index.as_deref())? {
        let b = bench_index(p, choice, a.ttree.keys, a.ttree.probes, seed)?;
        rows.push(vec![
            choice.name().to_string(),
            b.keys.to_string(),
            b.probes.to_string(),
            num(b.estimate.mean_us()),
            num(b.estimate.variance_us2()),
        ]);
    }
    emit_csv(&BENCH_HEADER, &rows, out)
}

fn overlap(a: &OverlapArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let which: Scenario = a.scenario.parse().map_err(CliError::Usage)?;
    let waypoints = match &a.waypoints {
        Some(path) => parse_waypoints(&std::fs::read_to_string(path)?)?,
        None => which.default_waypoints(),
    };
    let mut sys = OverlapSystem::new(which.env(), OverlapConfig::default())?;
    let mut mt = which.terminal(a.ptn);
    let trace = sys.run(&mut mt, &waypoints)?;
    writeln!(out, "{TRACE_HEADER}")?;
    for line in trace.lines() {
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// One line of the `report` table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub quantity: String,
    pub value: ReportValue,
    pub unit: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReportValue {
    Number(f64),
    Saturated,
    Text(String),
}

fn row(quantity: impl Into<String>, value: f64, unit: &'static str) -> ReportRow {
    ReportRow {
        quantity: quantity.into(),
        value: ReportValue::Number(value),
        unit,
    }
}

/// Rates, per-tier service moments and delays for every organization, and
/// the organization each tier would pick. `E_S0`, `T0` and friends without a
/// suffix refer to memory-resident direct files.
pub fn report_rows(
    p: &SystemParams,
    ttree: Option<&ServiceTimeEstimate>,
) -> Result<Vec<ReportRow>, CliError> {
    let w = p.workload();
    let r = arrival_rates(p, w);
    let mut rows = vec![
        row("lambda_u", w.lambda_u, "1/s"),
        row("lambda_c", w.lambda_c, "1/s"),
        row("lambda_0", r.lambda0, "1/s"),
        row("lambda_1", r.lambda1, "1/s"),
        row("lambda_2", r.lambda2, "1/s"),
    ];
    for choice in IndexChoice::ALL {
        if choice == IndexChoice::TTreeIndex && ttree.is_none() {
            continue;
        }
        let suffix = match choice {
            IndexChoice::MemoryDirect => String::new(),
            other => format!("[{}]", other.name()),
        };
        for level in Level::ALL {
            let i = level.index();
            let s = level_stats(p, w, level, choice, ttree)?;
            rows.push(row(format!("E_S{i}{suffix}"), s.mean_service * 1e6, "us"));
            rows.push(row(
                format!("Var_S{i}{suffix}"),
                s.var_service * 1e12,
                "us^2",
            ));
            rows.push(row(format!("util_{i}{suffix}"), s.utilization(), "1"));
            rows.push(match pk_response_time(&s) {
                Ok(t) => row(format!("T{i}{suffix}"), t * 1e6, "us"),
                Err(AnalyticError::Saturated { .. }) => ReportRow {
                    quantity: format!("T{i}{suffix}"),
                    value: ReportValue::Saturated,
                    unit: "us",
                },
                Err(e) => return Err(e.into()),
            });
        }
        match evaluate_system(p, [choice; 3], ttree) {
            Ok(m) => {
                rows.push(row(format!("T_u{suffix}"), m.update_delay * 1e6, "us"));
                rows.push(row(format!("T_d{suffix}"), m.delivery_delay * 1e6, "us"));
            }
            Err(AnalyticError::Saturated { .. }) => {
                for q in ["T_u", "T_d"] {
                    rows.push(ReportRow {
                        quantity: format!("{q}{suffix}"),
                        value: ReportValue::Saturated,
                        unit: "us",
                    });
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    for level in Level::ALL {
        let inputs = SelectionInputs::for_level(p, level, ttree.copied());
        let pick = match select_index(level, p, &inputs) {
            Ok(c) => c.name().to_string(),
            Err(AnalyticError::NoFeasibleChoice(_)) => "none".to_string(),
            Err(e) => return Err(e.into()),
        };
        rows.push(ReportRow {
            quantity: format!("selected_index_{}", level.index()),
            value: ReportValue::Text(pick),
            unit: "",
        });
    }
    Ok(rows)
}

fn report(
    p: &SystemParams,
    seed: u64,
    a: &ReportArgs,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let est = ttree_bench(p, seed, &a.ttree)?.estimate;
    let rows = report_rows(p, Some(&est))?;
    if a.csv {
        let cells: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                let v = match &r.value {
                    ReportValue::Number(x) => num(*x),
                    ReportValue::Saturated => SATURATED.to_string(),
                    ReportValue::Text(s) => s.clone(),
                };
                vec![r.quantity.clone(), v, r.unit.to_string()]
            })
            .collect();
        return emit_csv(&REPORT_HEADER, &cells, out);
    }
    let width = rows
        .iter()
        .map(|r| r.quantity.len())
        .max()
        .unwrap_or(8)
        .max(8);
    writeln!(out, "{:width$}  {:>12}  unit", "quantity", "value")?;
    for r in &rows {
        let v = match &r.value {
            ReportValue::Number(x) => sig4(*x),
            ReportValue::Saturated => SATURATED.to_string(),
            ReportValue::Text(s) => s.clone(),
        };
        writeln!(out, "{:width$}  {:>12}  {}", r.quantity, v, r.unit)?;
    }
    Ok(())
}
