use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use modesel::aarlm;
use modesel::files::{Solution, SweepConfig};
use modesel::format;
use modesel::harness::{self, AlgoConfig, Algorithm, Timing};
use modesel::model::{self, DelayModel, Instance};
use modesel::scenario::{self, BandwidthOrder, Count, ScenarioSpec};
use serde::Serialize;

mod error;

use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "modesel", version, about = "Communication-mode assignment solvers and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a seeded instance and write it as JSON.
    Generate(GenerateArgs),
    /// Solve an instance with one algorithm.
    Solve(SolveArgs),
    /// Run a parameter sweep and write result CSVs.
    Sweep(SweepArgs),
    /// Check an instance, and optionally a solution against it.
    Validate(ValidateArgs),
    /// Run several algorithms on one instance side by side.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Scenario spec JSON; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    tasks: Option<usize>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    support_density: Option<f64>,
    /// `ascending` or `random`.
    #[arg(long, value_parser = parse_order)]
    bandwidth_order: Option<BandwidthOrder>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct AlgoArgs {
    /// Episodes (aarlm).
    #[arg(long)]
    episodes: Option<usize>,
    /// Moves per episode (aarlm); defaults to the task count.
    #[arg(long)]
    moves: Option<usize>,
    /// Discount factor (aarlm).
    #[arg(long)]
    discount: Option<f64>,
    #[arg(long)]
    anneal_t0: Option<f64>,
    #[arg(long)]
    anneal_cooling: Option<f64>,
    #[arg(long)]
    anneal_steps: Option<usize>,
    #[arg(long)]
    anneal_min_t: Option<f64>,
    /// Node budget for the exact solver; 0 means unlimited.
    #[arg(long)]
    exact_budget: Option<u64>,
}

impl AlgoArgs {
    fn apply(&self, mut cfg: AlgoConfig) -> AlgoConfig {
        if let Some(v) = self.episodes {
            cfg.aarlm.episodes = v;
        }
        if self.moves.is_some() {
            cfg.aarlm.moves_per_episode = self.moves;
        }
        if let Some(v) = self.discount {
            cfg.aarlm.discount = v;
        }
        if self.anneal_t0.is_some() {
            cfg.anneal.initial_temperature = self.anneal_t0;
        }
        if let Some(v) = self.anneal_cooling {
            cfg.anneal.cooling_factor = v;
        }
        if self.anneal_steps.is_some() {
            cfg.anneal.steps_per_temperature = self.anneal_steps;
        }
        if let Some(v) = self.anneal_min_t {
            cfg.anneal.min_temperature = v;
        }
        if let Some(v) = self.exact_budget {
            cfg.exact_budget = (v > 0).then_some(v);
        }
        cfg
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, short)]
    instance: PathBuf,
    #[arg(long)]
    algo: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    algo_args: AlgoArgs,
    /// `queued` or `literal`; affects reported metrics only.
    #[arg(long, default_value = "queued")]
    delay_model: String,
    /// Write the aarlm move log as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Include wall-clock runtime in the output file.
    #[arg(long)]
    record_runtime: bool,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, short)]
    config: PathBuf,
    /// Aggregate CSV, one row per (point, algorithm).
    #[arg(long, short)]
    out: PathBuf,
    /// Optional per-seed CSV.
    #[arg(long)]
    runs_out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    record_runtime: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, short)]
    instance: PathBuf,
    #[arg(long, short)]
    solution: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, short)]
    instance: PathBuf,
    /// Comma-separated algorithm names.
    #[arg(long, default_value = "aarlm,anneal,random,exact", value_delimiter = ',')]
    algos: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    algo_args: AlgoArgs,
    #[arg(long)]
    record_runtime: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_order(s: &str) -> Result<BandwidthOrder, String> {
    match s {
        "ascending" => Ok(BandwidthOrder::Ascending),
        "random" => Ok(BandwidthOrder::Random),
        other => Err(format!("unknown bandwidth order {other:?}")),
    }
}

fn read_to_string(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn load_instance(path: &Path) -> CliResult<Instance> {
    Ok(Instance::from_json(&read_to_string(path)?)?)
}

fn with_newline(mut s: String) -> String {
    s.push('\n');
    s
}

fn cmd_generate(args: GenerateArgs) -> CliResult<()> {
    let mut spec = match &args.spec {
        Some(p) => ScenarioSpec::from_json(&read_to_string(p)?)?,
        None => ScenarioSpec::default(),
    };
    if let Some(n) = args.tasks {
        spec.num_tasks = Count::Fixed(n);
    }
    if let Some(m) = args.modes {
        spec.num_modes = Count::Fixed(m);
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(d) = args.support_density {
        spec.support_density = d;
    }
    if let Some(o) = args.bandwidth_order {
        spec.bandwidth_order = o;
    }
    let inst = scenario::generate(&spec).map_err(|e| CliError::from(e).into_validation())?;
    write_file(&args.out, &with_newline(inst.to_json()))?;
    println!(
        "wrote {}: {} tasks, {} modes, {:.3} kbit total",
        args.out.display(),
        inst.num_tasks(),
        inst.num_modes(),
        inst.total_data()
    );
    Ok(())
}

fn algo_config_json(algorithm: Algorithm, cfg: &AlgoConfig, seed: u64) -> serde_json::Value {
    match algorithm {
        Algorithm::Aarlm => serde_json::to_value(aarlm::AarlmConfig { seed, ..cfg.aarlm.clone() }),
        Algorithm::Anneal => serde_json::to_value(modesel::baselines::AnnealConfig { seed, ..cfg.anneal.clone() }),
        Algorithm::Random => Ok(serde_json::json!({ "seed": seed })),
        Algorithm::Exact => Ok(serde_json::json!({ "budget": cfg.exact_budget })),
    }
    .expect("configs serialize")
}

fn solve_to_solution(
    inst: &Instance,
    algorithm: Algorithm,
    cfg: &AlgoConfig,
    seed: u64,
    delay_model: DelayModel,
    record_runtime: bool,
) -> CliResult<(Solution, harness::SolveRun)> {
    let run = harness::run_algorithm(inst, algorithm, cfg, seed, delay_model)?;
    let solution = Solution {
        format_version: format::FORMAT_VERSION.to_string(),
        algorithm,
        assignment: run.assignment.clone(),
        makespan_ms: run.report.makespan,
        completion_rate: run.report.completion_rate,
        per_mode_loads: run.report.mode_load.clone(),
        delay_model,
        seed,
        config: algo_config_json(algorithm, cfg, seed),
        runtime_s: record_runtime.then_some(run.runtime_s),
        proven_optimal: run.proven_optimal,
        q_states: run.q_states,
    };
    Ok((solution, run))
}

fn cmd_solve(args: SolveArgs) -> CliResult<()> {
    let algorithm: Algorithm = args.algo.parse().map_err(CliError::usage)?;
    let delay_model: DelayModel = args.delay_model.parse().map_err(CliError::usage)?;
    let inst = load_instance(&args.instance)?;
    let cfg = args.algo_args.apply(AlgoConfig::default());
    cfg.validate()?;
    let (solution, run) = solve_to_solution(&inst, algorithm, &cfg, args.seed, delay_model, args.record_runtime)?;
    write_file(&args.out, &with_newline(solution.to_json()))?;
    if let Some(path) = &args.trace {
        let mut buf = Vec::new();
        aarlm::write_trace(&run.trace, &mut buf)?;
        fs::write(path, buf).map_err(|e| CliError::io(path, e))?;
    }
    println!(
        "{}: makespan {:.4} ms, completion rate {:.4}, {:.4} s{}",
        algorithm,
        run.report.makespan,
        run.report.completion_rate,
        run.runtime_s,
        run.proven_optimal
            .map_or(String::new(), |p| format!(", proven_optimal={p}"))
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let mut cfg = SweepConfig::from_json(&read_to_string(&args.config)?)?;
    if let Some(s) = args.seeds {
        cfg.num_seeds = s;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = args.jobs {
        if j == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| CliError::usage(e.to_string()))?;
    let output = pool.install(|| {
        harness::run_sweep(&cfg.base, cfg.axis, &cfg.points, &cfg.algorithms, &cfg.algo_config, cfg.num_seeds)
    })?;
    let timing = if args.record_runtime { Timing::Record } else { Timing::Omit };
    write_file(&args.out, &harness::summary_csv(&output.results, timing))?;
    if let Some(path) = &args.runs_out {
        write_file(path, &harness::runs_csv(&output.runs, timing))?;
    }
    println!(
        "{}: {} rows over {} points × {} algorithms, {} seeds each",
        if cfg.name.is_empty() { "sweep" } else { &cfg.name },
        output.results.len(),
        cfg.points.len(),
        cfg.algorithms.len(),
        cfg.num_seeds
    );
    if !output.results.is_empty() {
        print!("{}", harness::trend_checks(&output, cfg.thresholds));
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> CliResult<()> {
    let inst = load_instance(&args.instance)?;
    let Some(path) = &args.solution else {
        println!("instance ok: {} tasks, {} modes", inst.num_tasks(), inst.num_modes());
        return Ok(());
    };
    let solution = Solution::from_json(&read_to_string(path)?)?;
    let violations = model::validate(&inst, &solution.assignment);
    if violations.is_empty() {
        println!("ok: 0 violations");
        Ok(())
    } else {
        for v in &violations {
            println!("violation: {v}");
        }
        Err(modesel::Error::InvalidAssignment(violations).into())
    }
}

#[derive(Serialize)]
struct Comparison {
    format_version: String,
    results: Vec<Solution>,
}

fn cmd_compare(args: CompareArgs) -> CliResult<()> {
    let algorithms = args
        .algos
        .iter()
        .map(|a| a.trim().parse::<Algorithm>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::usage)?;
    let inst = load_instance(&args.instance)?;
    let cfg = args.algo_args.apply(AlgoConfig::default());
    cfg.validate()?;
    let mut results = Vec::new();
    println!("{:<8} {:>14} {:>16} {:>10}", "algo", "makespan_ms", "completion_rate", "runtime_s");
    for algorithm in algorithms {
        let (solution, run) =
            solve_to_solution(&inst, algorithm, &cfg, args.seed, DelayModel::Queued, args.record_runtime)?;
        println!(
            "{:<8} {:>14.4} {:>16.4} {:>10.4}{}",
            algorithm,
            run.report.makespan,
            run.report.completion_rate,
            run.runtime_s,
            match run.proven_optimal {
                Some(false) => "  (budget exhausted)",
                _ => "",
            }
        );
        results.push(solution);
    }
    if let Some(out) = &args.out {
        let doc = Comparison {
            format_version: format::FORMAT_VERSION.to_string(),
            results,
        };
        write_file(out, &with_newline(serde_json::to_string_pretty(&doc).expect("serializes")))?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            e.exit_code()
        }
    }
}
