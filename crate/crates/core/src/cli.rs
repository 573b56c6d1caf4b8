//! Command-line front end: `gen`, `run`, `verify` and `compare`.
//!
//! Exit codes: 0 on success, 1 when a check fails or a simulation errors,
//! 2 for usage and input errors.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{trajectory, CompetitiveParams};
use crate::baseline::{exhaustive_offline_proxy, DEFAULT_ENUMERATION_CAP};
use crate::error::Error;
use crate::model::{Instance, Mode};
use crate::report::{InstanceReport, RunReport};
use crate::verify::{run_instance, verify_instance, verify_suite, VerifyConfig};
use crate::workload::{generate, GenConfig, PowerFamily, SuiteConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hetsched", version, about = "Flow-plus-energy scheduling on power-heterogeneous machines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random instance.
    Gen(GenArgs),
    /// Simulate the online policy and the baselines on one instance.
    Run(RunArgs),
    /// Run every check on an instance or a random suite.
    Verify(VerifyArgs),
    /// Compare policies over instances or a random suite.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Add wall-clock time to the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub machines: usize,
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    #[arg(long, default_value = "weighted")]
    pub mode: Mode,
    /// `mixed`, `poly:2,3` or `poly:1.5..3.5`.
    #[arg(long, default_value = "mixed")]
    pub family: PowerFamily,
    #[arg(long, default_value_t = 0.1)]
    pub size_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub size_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub weight_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub weight_max: f64,
    /// Releases uniform in `[0, span]`; defaults to jobs / 2.
    #[arg(long)]
    pub release_span: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub instance: PathBuf,
    /// Online speed factor; `--epsilon e` sets it to `1 + e`.
    #[arg(long, conflicts_with = "epsilon")]
    pub speedup: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Trajectory rows for CSV output.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// Random suite: `--random SEED COUNT`.
    #[arg(long, num_args = 2, value_names = ["SEED", "COUNT"])]
    pub random: Option<Vec<u64>>,
    #[arg(long, default_value_t = 3)]
    pub machines: usize,
    #[arg(long, default_value_t = 8)]
    pub jobs: usize,
    #[arg(long, default_value = "mixed")]
    pub family: PowerFamily,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub instance: Option<PathBuf>,
    #[command(flatten)]
    pub suite: SuiteArgs,
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub epsilon: f64,
    /// Random fixed-assignment adversaries per instance.
    #[arg(long, default_value_t = 20)]
    pub adversaries: usize,
    /// Seed for the adversaries when verifying a file.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print every arrival check.
    #[arg(long)]
    pub details: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub instances: Vec<PathBuf>,
    #[command(flatten)]
    pub suite: SuiteArgs,
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long, conflicts_with = "epsilon")]
    pub speedup: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonTerminating(_) => EXIT_CHECK_FAILED,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

/// Reads an instance; parse errors carry line and column.
pub fn load_instance(path: &Path) -> CliResult<Instance> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| match e.classify() {
        serde_json::error::Category::Io => Failure::usage(format!("{}: {e}", path.display())),
        _ => Failure::usage(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())),
    })
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::usage(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure { code: EXIT_CHECK_FAILED, message: e.to_string() })
        }
    }
}

fn check_mode(instance: &Instance, mode: Option<Mode>) -> CliResult<()> {
    match mode {
        Some(m) if m != instance.mode => {
            Err(Failure::usage(format!("--mode {m} does not match the instance's mode {}", instance.mode)))
        }
        _ => Ok(()),
    }
}

fn resolve_speedup(speedup: Option<f64>, epsilon: Option<f64>) -> CliResult<f64> {
    let s = match (speedup, epsilon) {
        (Some(s), _) => s,
        (None, Some(e)) => {
            CompetitiveParams::new(e)?;
            1.0 + e
        }
        (None, None) => 1.0,
    };
    if !(s >= 1.0) || !s.is_finite() {
        return Err(Failure::usage(format!("--speedup must be >= 1, got {s}")));
    }
    Ok(s)
}

fn suite_config(args: &SuiteArgs, mode: Option<Mode>, epsilons: Vec<f64>) -> CliResult<Option<SuiteConfig>> {
    let Some(r) = &args.random else { return Ok(None) };
    Ok(Some(SuiteConfig {
        seed: r[0],
        count: r[1] as usize,
        mode: mode.unwrap_or(Mode::Weighted),
        max_machines: args.machines,
        max_jobs: args.jobs,
        epsilons,
        family: args.family.clone(),
    }))
}

fn cmd_gen(a: GenArgs) -> CliResult<i32> {
    let cfg = GenConfig {
        seed: a.seed,
        machines: a.machines,
        jobs: a.jobs,
        mode: a.mode,
        family: a.family,
        size_range: (a.size_min, a.size_max),
        weight_range: (a.weight_min, a.weight_max),
        release_span: a.release_span,
    };
    let instance = generate(&cfg)?;
    let mut text = serde_json::to_string_pretty(&instance).expect("instances serialize");
    text.push('\n');
    emit(a.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn finish_report(mut report: RunReport, started: Instant, output: &Output) -> CliResult<()> {
    if output.timing {
        report.wall_clock_seconds = Some(started.elapsed().as_secs_f64());
    }
    let text = match output.format {
        Format::Json => {
            let mut t = report.to_json();
            t.push('\n');
            t
        }
        Format::Csv => summary_csv(&report),
    };
    emit(output.out.as_deref(), &text)
}

/// One row per instance and policy.
pub fn summary_csv(report: &RunReport) -> String {
    let mut out = String::from("digest,machines,jobs,epsilon,policy,speedup,objective,ratio_vs_proxy,checks_passed\n");
    for inst in &report.instances {
        let eps = inst.epsilon.map(|e| e.to_string()).unwrap_or_default();
        for p in &inst.policies {
            let ratio = p.ratio_vs_proxy.value().map(|r| r.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                inst.digest,
                inst.machines,
                inst.jobs,
                eps,
                p.name,
                p.speedup,
                p.objective,
                ratio,
                inst.all_pass()
            );
        }
    }
    out
}

/// `time, w_i, speed_i, power_i for each machine, phi`.
pub fn trajectory_csv(instance: &Instance, speedup: f64, samples: usize) -> CliResult<String> {
    let span = online_span(instance, speedup)?;
    let proxy = match exhaustive_offline_proxy(instance, DEFAULT_ENUMERATION_CAP) {
        Ok(p) => Some(p.map),
        Err(Error::EnumerationCap { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let n = samples.max(2);
    let times: Vec<f64> = (0..n).map(|k| span * k as f64 / (n - 1) as f64).collect();
    let rows = trajectory(instance, speedup, proxy.as_ref(), &times)?;
    let mut out = String::from("time");
    for i in 0..instance.machine_count() {
        let _ = write!(out, ",w_{i},speed_{i},power_{i}");
    }
    out.push_str(",phi\n");
    for row in rows {
        let _ = write!(out, "{}", row.time);
        for m in &row.machines {
            let _ = write!(out, ",{},{},{}", m.fractional_weight + 0.0, m.speed + 0.0, m.power + 0.0);
        }
        let _ = writeln!(out, ",{}", row.phi.map(|p| (p + 0.0).to_string()).unwrap_or_default());
    }
    Ok(out)
}

fn online_span(instance: &Instance, speedup: f64) -> crate::error::Result<f64> {
    let trace = match instance.mode {
        Mode::Weighted => {
            crate::weighted::simulate_weighted(instance, &crate::weighted::WeightedSchedulerConfig::new(speedup)?)?.0
        }
        Mode::Unweighted => {
            crate::unweighted::simulate_unweighted(
                instance,
                &crate::unweighted::UnweightedSchedulerConfig::new(speedup)?,
            )?
            .0
        }
    };
    Ok(trace.last().map_or(0.0, |e| e.time()))
}

fn cmd_run(a: RunArgs) -> CliResult<i32> {
    let started = Instant::now();
    let instance = load_instance(&a.instance)?;
    check_mode(&instance, a.mode)?;
    let speedup = resolve_speedup(a.speedup, a.epsilon)?;
    if a.output.format == Format::Csv {
        emit(a.output.out.as_deref(), &trajectory_csv(&instance, speedup, a.samples)?)?;
        return Ok(EXIT_OK);
    }
    let inst = run_instance(&instance, speedup, DEFAULT_ENUMERATION_CAP)?;
    let report = RunReport::new("run", instance.mode, vec![inst], &[None]);
    finish_report(report, started, &a.output)?;
    Ok(EXIT_OK)
}

fn print_checks(report: &RunReport) {
    for (name, c) in &report.summary.checks {
        let margin = c.worst_margin.map(|m| format!("{m:.3e}")).unwrap_or_else(|| "-".into());
        let status = if c.all_pass() { "PASS" } else { "FAIL" };
        eprintln!("{status} {name:<14} {}/{} worst margin {margin}", c.passed, c.total);
    }
    if let Some(q) = report.summary.max_ratio_over_bound {
        eprintln!("max online/proxy ratio over its bound: {q:.4}");
    }
}

fn print_arrivals(inst: &InstanceReport) {
    for (adversary, c) in inst.arrivals.iter().flat_map(|a| a.checks.iter().map(move |c| (a.adversary, c))) {
        eprintln!(
            "adversary {adversary} arrival job {} at t={}: online machine {}, adversary machine {}, dPhi={} bound={} {}",
            c.job,
            c.time,
            c.online_machine,
            c.adversary_machine,
            c.delta_phi,
            c.bound,
            if c.pass { "pass" } else { "FAIL" }
        );
    }
}

fn cmd_verify(a: VerifyArgs) -> CliResult<i32> {
    let started = Instant::now();
    CompetitiveParams::new(a.epsilon).map_err(|e| Failure::usage(e.to_string()))?;
    let cfg = VerifyConfig { random_adversaries: a.adversaries, details: a.details, ..VerifyConfig::default() };
    let report = match (&a.instance, suite_config(&a.suite, a.mode, vec![a.epsilon])?) {
        (Some(_), Some(_)) => return Err(Failure::usage("give an instance file or --random, not both")),
        (None, None) => return Err(Failure::usage("give an instance file or --random SEED COUNT")),
        (Some(path), None) => {
            let instance = load_instance(path)?;
            check_mode(&instance, a.mode)?;
            let bound = CompetitiveParams::new(a.epsilon)?.ratio_bound(instance.mode);
            let inst = verify_instance(&instance, a.epsilon, a.seed, &cfg)?;
            RunReport::new("verify", instance.mode, vec![inst], &[Some(bound)])
        }
        (None, Some(suite)) => {
            let items = suite.generate()?;
            verify_suite(&items, suite.mode, &cfg)?
        }
    };
    if a.details {
        report.instances.iter().for_each(print_arrivals);
    }
    print_checks(&report);
    let passed = report.summary.all_passed;
    finish_report(report, started, &a.output)?;
    Ok(if passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn cmd_compare(a: CompareArgs) -> CliResult<i32> {
    let started = Instant::now();
    let speedup = resolve_speedup(a.speedup, a.epsilon)?;
    let suite = suite_config(&a.suite, a.mode, vec![speedup - 1.0])?;
    let (mode, instances) = match suite {
        Some(_) if !a.instances.is_empty() => {
            return Err(Failure::usage("give instance files or --random, not both"));
        }
        Some(s) => (s.mode, s.generate()?.into_iter().map(|i| i.instance).collect::<Vec<_>>()),
        None if a.instances.is_empty() => {
            return Err(Failure::usage("give instance files or --random SEED COUNT"));
        }
        None => {
            let loaded = a.instances.iter().map(|p| load_instance(p)).collect::<CliResult<Vec<_>>>()?;
            let mode = loaded[0].mode;
            if loaded.iter().any(|i| i.mode != mode) {
                return Err(Failure::usage("instances mix weighted and unweighted modes"));
            }
            check_mode(&loaded[0], a.mode)?;
            (mode, loaded)
        }
    };
    let reports = {
        use rayon::prelude::*;
        instances
            .par_iter()
            .map(|i| run_instance(i, speedup, DEFAULT_ENUMERATION_CAP))
            .collect::<crate::error::Result<Vec<_>>>()?
    };
    let bounds: Vec<Option<f64>> =
        vec![CompetitiveParams::new(speedup - 1.0).ok().map(|p| p.ratio_bound(mode)); reports.len()];
    let report = RunReport::new("compare", mode, reports, &bounds);
    for (name, p) in &report.summary.policies {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        eprintln!("{name:<14} mean ratio {} max ratio {}", fmt(p.mean_ratio), fmt(p.max_ratio));
    }
    finish_report(report, started, &a.output)?;
    Ok(EXIT_OK)
}
