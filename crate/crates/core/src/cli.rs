//! Command-line front end. Every verb writes its artifact to `--out` or
//! stdout; floats use 17 significant digits and seeds are always explicit.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bench::{sweep_epsilon, sweep_levels, write_csv, CSV_HEADER, DEFAULT_EPSILONS};
use crate::classical::{classical_fpras, ClassicalReport};
use crate::error::{Error, Result};
use crate::markov::metropolis_chain;
use crate::model::{boltzmann, build_schedule, exact_partition_unshifted, IsingModel, Schedule, System};
use crate::qcore::DEFAULT_AMPLITUDE_CAP;
use crate::qestimate::{band_mass_floor, plan_quantum, Mode, PipelineConfig, RunReport};
use crate::report::{fmt_f64, to_json};
use crate::szegedy::analyze_walk;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_CAP: u8 = 3;
pub const EXIT_GUARANTEE: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "qpartition",
    version,
    about = "Classical and quantum-walk approximation of Ising partition functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact partition function and Boltzmann weights by enumeration.
    Exact(ModelArgs),
    /// Cooling schedule with its ratio table.
    Schedule(ScheduleArgs),
    /// Classical Markov-chain scheme; emits a JSON run report.
    Classical(RunArgs),
    /// Quantum scheme simulated exactly; emits a JSON run report.
    Quantum(QuantumArgs),
    /// Walk spectrum CSV and the phase-gap check for the chain at `--beta`.
    WalkAnalyze(ModelArgs),
    /// Planned-cost sweep over ε and over ℓ; emits CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Final inverse temperature.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Smallest admissible ratio `Z_{i+1}/Z_i`.
    #[arg(long, default_value_t = 0.5)]
    pub target_low: f64,
    #[arg(long, default_value_t = 0.75)]
    pub target_high: f64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct QuantumArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value = "perfect")]
    pub mode: Mode,
    #[arg(long, default_value_t = DEFAULT_AMPLITUDE_CAP)]
    pub cap_amplitudes: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// ε values for the sweep at fixed schedule.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EPSILONS)]
    pub eps: Vec<f64>,
    /// Final inverse temperatures for the sweep over ℓ at the first ε.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0, 4.0])]
    pub betas: Vec<f64>,
}

/// Outcome of a verb: the artifact text and whether its checks held.
pub struct Output {
    pub text: String,
    pub checks_passed: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Self {
            text,
            checks_passed: true,
        }
    }
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        e if e.is_cap() => EXIT_CAP,
        Error::NonUnitary(_) | Error::Spectral(_) | Error::SmallGap { .. } => EXIT_GUARANTEE,
        _ => EXIT_CONFIG,
    }
}

pub fn main_with(cli: Cli) -> ExitCode {
    let out = match &cli.command {
        Command::Exact(a) | Command::WalkAnalyze(a) => a.out.clone(),
        Command::Schedule(a) | Command::Bench(BenchArgs { schedule: a, .. }) => a.model.out.clone(),
        Command::Classical(a) => a.schedule.model.out.clone(),
        Command::Quantum(a) => a.run.schedule.model.out.clone(),
    };
    let result = run(&cli.command).and_then(|o| {
        match &out {
            Some(path) => std::fs::write(path, &o.text)?,
            None => print!("{}", o.text),
        }
        Ok(o.checks_passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_GUARANTEE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn run(command: &Command) -> Result<Output> {
    match command {
        Command::Exact(a) => exact(a),
        Command::Schedule(a) => schedule(a),
        Command::Classical(a) => classical(a),
        Command::Quantum(a) => quantum(a),
        Command::WalkAnalyze(a) => walk_analyze(a),
        Command::Bench(a) => bench(a),
    }
}

fn load(args: &ModelArgs) -> Result<System> {
    IsingModel::load(&args.model)?.to_system()
}

fn load_schedule(args: &ScheduleArgs) -> Result<(System, Schedule)> {
    let system = load(&args.model)?;
    let schedule = build_schedule(&system, args.model.beta, args.target_low, args.target_high)?;
    Ok((system, schedule))
}

fn exact(a: &ModelArgs) -> Result<Output> {
    let system = load(a)?;
    let z = exact_partition_unshifted(&system, a.beta)?;
    let pi = boltzmann(&system, a.beta)?;
    let mut s = String::new();
    writeln!(s, "states {}", system.states()).unwrap();
    writeln!(s, "beta {}", fmt_f64(a.beta)).unwrap();
    writeln!(s, "Z {}", fmt_f64(z)).unwrap();
    writeln!(s, "ln_Z {}", fmt_f64(z.ln())).unwrap();
    writeln!(s, "state,energy,probability").unwrap();
    for (i, p) in pi.iter().enumerate() {
        writeln!(s, "{i},{},{}", fmt_f64(system.energy(i)), fmt_f64(*p)).unwrap();
    }
    Ok(Output::ok(s))
}

fn schedule(a: &ScheduleArgs) -> Result<Output> {
    let (system, schedule) = load_schedule(a)?;
    let alphas = schedule.ratios(&system)?;
    let mut s = String::from("level,beta,beta_next,alpha\n");
    for (i, ((b0, b1), alpha)) in schedule.steps().zip(&alphas).enumerate() {
        writeln!(s, "{i},{},{},{}", fmt_f64(b0), fmt_f64(b1), fmt_f64(*alpha)).unwrap();
    }
    Ok(Output::ok(s))
}

#[derive(Debug, Serialize)]
struct Trials {
    count: usize,
    within_epsilon: usize,
    fraction: f64,
    estimates: Vec<f64>,
}

impl Trials {
    fn new(estimates: Vec<f64>, exact: f64, eps: f64) -> Self {
        let within_epsilon = estimates.iter().filter(|e| (*e / exact - 1.0).abs() <= eps).count();
        Self {
            count: estimates.len(),
            within_epsilon,
            fraction: within_epsilon as f64 / estimates.len().max(1) as f64,
            estimates,
        }
    }
}

#[derive(Debug, Serialize)]
struct ClassicalOutput {
    #[serde(flatten)]
    report: ClassicalReport,
    #[serde(rename = "exact_Z")]
    exact_z: f64,
    relative_error: f64,
    levels: usize,
    epsilon: f64,
    trials: Trials,
}

fn classical(a: &RunArgs) -> Result<Output> {
    let (system, schedule) = load_schedule(&a.schedule)?;
    let exact = exact_partition_unshifted(&system, schedule.beta_final())?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let runs = (0..a.trials.max(1))
        .map(|_| classical_fpras(&system, &schedule, a.eps, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let first = &runs[0];
    let out = ClassicalOutput {
        report: ClassicalReport::new(first, a.seed),
        exact_z: exact,
        relative_error: (first.value - exact).abs() / exact,
        levels: schedule.len(),
        epsilon: a.eps,
        trials: Trials::new(runs.iter().map(|r| r.value).collect(), exact, a.eps),
    };
    Ok(Output::ok(to_json(&out)? + "\n"))
}

#[derive(Debug, Serialize)]
struct QuantumOutput {
    #[serde(flatten)]
    report: RunReport,
    guarantee_checks: bool,
    trials: Trials,
}

fn quantum(a: &QuantumArgs) -> Result<Output> {
    let (system, schedule) = load_schedule(&a.run.schedule)?;
    let config = PipelineConfig::for_mode(a.mode, &system, &schedule, a.run.eps)?.with_cap(a.cap_amplitudes);
    let eps_s = config.walk.as_ref().map(|w| w.eps_s);
    let plan = plan_quantum(&system, &schedule, config)?;
    let checks = plan.levels.iter().all(|l| {
        l.distribution.within_band_mass() >= band_mass_floor(a.mode)
            && match (l.prep_deviation, eps_s) {
                (Some(d), Some(e)) => d <= e,
                _ => true,
            }
    });
    let mut rng = ChaCha8Rng::seed_from_u64(a.run.seed);
    let runs: Vec<_> = (0..a.run.trials.max(1)).map(|_| plan.run(&mut rng)).collect();
    let out = QuantumOutput {
        report: plan.report(&runs[0], a.run.seed),
        guarantee_checks: checks,
        trials: Trials::new(runs.iter().map(|r| r.value).collect(), plan.exact_z, a.run.eps),
    };
    Ok(Output {
        text: to_json(&out)? + "\n",
        checks_passed: checks,
    })
}

fn walk_analyze(a: &ModelArgs) -> Result<Output> {
    let system = load(a)?;
    let analysis = analyze_walk(&metropolis_chain(&system, a.beta)?)?;
    let mut csv = Vec::new();
    analysis.write_csv(&mut csv)?;
    let mut s = String::from_utf8(csv).expect("CSV is UTF-8");
    let holds = analysis.gap_relation_holds();
    writeln!(
        s,
        "# Δ = {}, 2√δ = {}",
        fmt_f64(analysis.phase_gap()),
        fmt_f64(2.0 * analysis.spectral_gap().sqrt())
    )
    .unwrap();
    writeln!(s, "Δ ≥ 2√δ: {}", if holds { "PASS" } else { "FAIL" }).unwrap();
    Ok(Output {
        text: s,
        checks_passed: holds,
    })
}

fn bench(a: &BenchArgs) -> Result<Output> {
    let (system, schedule) = load_schedule(&a.schedule)?;
    let first_eps = *a
        .eps
        .first()
        .ok_or_else(|| Error::InvalidInput("empty --eps list".into()))?;
    let by_eps = sweep_epsilon(&system, &schedule, &a.eps)?;
    let by_levels = sweep_levels(
        &system,
        first_eps,
        &a.betas,
        a.schedule.target_low,
        a.schedule.target_high,
    )?;
    let mut buf = Vec::new();
    writeln!(&mut buf as &mut dyn std::io::Write, "{CSV_HEADER}")?;
    write_csv(&mut buf, "epsilon", &by_eps)?;
    write_csv(&mut buf, "levels", &by_levels)?;
    Ok(Output::ok(String::from_utf8(buf).expect("CSV is UTF-8")))
}
