//! (algorithm × sweep point × seed) experiment grids, their aggregation, CSV
//! output and the trend checks run over a finished sweep.

use std::fmt::{self, Write as _};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aarlm::{self, AarlmConfig, TraceRecord};
use crate::baselines::{self, AnnealConfig};
use crate::error::{Error, Result};
use crate::model::{self, Assignment, DelayModel, DelayReport, Instance};
use crate::scenario::{self, Axis, ScenarioSpec};
use crate::seed;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Aarlm,
    Anneal,
    Random,
    Exact,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Aarlm, Algorithm::Anneal, Algorithm::Random, Algorithm::Exact];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Aarlm => "aarlm",
            Algorithm::Anneal => "anneal",
            Algorithm::Random => "random",
            Algorithm::Exact => "exact",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// Per-algorithm settings. Seeds inside are overridden per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgoConfig {
    pub aarlm: AarlmConfig,
    pub anneal: AnnealConfig,
    /// Node limit for the exact solver; `None` is unlimited.
    pub exact_budget: Option<u64>,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        Self {
            aarlm: AarlmConfig::default(),
            anneal: AnnealConfig::default(),
            exact_budget: Some(5_000_000),
        }
    }
}

impl AlgoConfig {
    pub fn validate(&self) -> Result<()> {
        self.aarlm.validate()?;
        self.anneal.validate()
    }
}

#[derive(Debug, Clone)]
pub struct SolveRun {
    pub algorithm: Algorithm,
    pub assignment: Assignment,
    pub report: DelayReport,
    pub runtime_s: f64,
    /// Only set by the exact solver.
    pub proven_optimal: Option<bool>,
    /// Move log; only filled by aarlm.
    pub trace: Vec<TraceRecord>,
    /// Q-table size; only set by aarlm.
    pub q_states: Option<usize>,
}

/// Runs one algorithm on one instance and checks the output is a valid assignment.
pub fn run_algorithm(
    inst: &Instance,
    algorithm: Algorithm,
    cfg: &AlgoConfig,
    seed: u64,
    delay_model: DelayModel,
) -> Result<SolveRun> {
    let start = Instant::now();
    let mut trace = Vec::new();
    let mut q_states = None;
    let (assignment, proven_optimal) = match algorithm {
        Algorithm::Aarlm => {
            let c = AarlmConfig { seed, ..cfg.aarlm.clone() };
            let out = aarlm::solve(inst, &c)?;
            trace = out.trace;
            q_states = Some(out.qtable.len());
            (out.assignment, None)
        }
        Algorithm::Anneal => {
            let c = AnnealConfig { seed, ..cfg.anneal.clone() };
            (baselines::anneal_solve(inst, &c)?.assignment, None)
        }
        Algorithm::Random => (baselines::random_assign(inst, seed), None),
        Algorithm::Exact => {
            let out = baselines::exact_solve(inst, cfg.exact_budget);
            (out.assignment, Some(out.proven_optimal))
        }
    };
    let runtime_s = start.elapsed().as_secs_f64();
    model::ensure_valid(inst, &assignment)?;
    let report = model::delay_report(inst, &assignment, delay_model);
    Ok(SolveRun {
        algorithm,
        assignment,
        report,
        runtime_s,
        proven_optimal,
        trace,
        q_states,
    })
}

/// Sub-seeds for seed index `k` of a cell: the instance seed and the solver seed.
pub fn cell_seeds(spec: &ScenarioSpec, k: usize) -> (u64, u64) {
    let instance_seed = seed::derive(spec.seed, &[k as u64]);
    (instance_seed, seed::derive(instance_seed, &[1]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub axis: Option<Axis>,
    pub axis_value: usize,
    pub algorithm: Algorithm,
    pub seed_index: usize,
    pub instance_seed: u64,
    pub makespan_ms: f64,
    pub completion_rate: f64,
    pub runtime_s: f64,
    pub proven_optimal: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: Option<Axis>,
    pub axis_value: usize,
    pub algorithm: Algorithm,
    pub seeds: usize,
    pub mean_makespan: f64,
    pub std_makespan: f64,
    pub mean_completion_rate: f64,
    pub std_completion_rate: f64,
    pub mean_runtime: f64,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub result: SweepResult,
    pub runs: Vec<RunRecord>,
}

pub const FLAG_NON_OPTIMAL: &str = "non_optimal";

/// Solves `num_seeds` instances drawn from `spec`; seeds may run in parallel
/// but records are merged in seed order.
pub fn run_cell(spec: &ScenarioSpec, algorithm: Algorithm, cfg: &AlgoConfig, num_seeds: usize) -> Result<CellOutcome> {
    if num_seeds == 0 {
        return Err(Error::InvalidConfig("num_seeds must be at least 1".into()));
    }
    spec.validate()?;
    cfg.validate()?;
    let runs = (0..num_seeds)
        .into_par_iter()
        .map(|k| {
            let (instance_seed, solver_seed) = cell_seeds(spec, k);
            let inst = scenario::generate(&ScenarioSpec { seed: instance_seed, ..spec.clone() })?;
            let run = run_algorithm(&inst, algorithm, cfg, solver_seed, DelayModel::Queued)?;
            Ok(RunRecord {
                axis: None,
                axis_value: 0,
                algorithm,
                seed_index: k,
                instance_seed,
                makespan_ms: run.report.makespan,
                completion_rate: run.report.completion_rate,
                runtime_s: run.runtime_s,
                proven_optimal: run.proven_optimal,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let makespans: Vec<f64> = runs.iter().map(|r| r.makespan_ms).collect();
    let rates: Vec<f64> = runs.iter().map(|r| r.completion_rate).collect();
    let times: Vec<f64> = runs.iter().map(|r| r.runtime_s).collect();
    let mut flags = Vec::new();
    if runs.iter().any(|r| r.proven_optimal == Some(false)) {
        flags.push(FLAG_NON_OPTIMAL.to_string());
    }
    let result = SweepResult {
        axis: None,
        axis_value: 0,
        algorithm,
        seeds: num_seeds,
        mean_makespan: stats::mean(&makespans),
        std_makespan: stats::std_dev(&makespans),
        mean_completion_rate: stats::mean(&rates),
        std_completion_rate: stats::std_dev(&rates),
        mean_runtime: stats::mean(&times),
        flags,
    };
    Ok(CellOutcome { result, runs })
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutput {
    pub axis: Option<Axis>,
    pub results: Vec<SweepResult>,
    pub runs: Vec<RunRecord>,
}

/// Point-major, algorithm-minor cross product of cells.
pub fn run_sweep(
    base: &ScenarioSpec,
    axis: Axis,
    points: &[usize],
    algorithms: &[Algorithm],
    cfg: &AlgoConfig,
    num_seeds: usize,
) -> Result<SweepOutput> {
    let mut out = SweepOutput {
        axis: Some(axis),
        ..Default::default()
    };
    for (spec, &point) in scenario::sweep_specs(base, axis, points).iter().zip(points) {
        for &algorithm in algorithms {
            let mut cell = run_cell(spec, algorithm, cfg, num_seeds)?;
            cell.result.axis = Some(axis);
            cell.result.axis_value = point;
            for r in &mut cell.runs {
                r.axis = Some(axis);
                r.axis_value = point;
            }
            out.results.push(cell.result);
            out.runs.extend(cell.runs);
        }
    }
    Ok(out)
}

pub const SUMMARY_HEADER: &str = "axis,axis_value,algorithm,seeds,mean_makespan_ms,std_makespan_ms,mean_completion_rate,std_completion_rate,mean_runtime_s,flags";
pub const RUNS_HEADER: &str =
    "axis,axis_value,algorithm,seed_index,instance_seed,makespan_ms,completion_rate,runtime_s,proven_optimal";

/// Whether wall-clock columns are written. Omitting them keeps files byte-identical across runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    Record,
    Omit,
}

fn axis_name(a: Option<Axis>) -> &'static str {
    a.map_or("", Axis::name)
}

fn runtime_field(t: f64, timing: Timing) -> String {
    match timing {
        Timing::Record => t.to_string(),
        Timing::Omit => String::new(),
    }
}

pub fn summary_csv(results: &[SweepResult], timing: Timing) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in results {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            axis_name(r.axis),
            r.axis_value,
            r.algorithm,
            r.seeds,
            r.mean_makespan,
            r.std_makespan,
            r.mean_completion_rate,
            r.std_completion_rate,
            runtime_field(r.mean_runtime, timing),
            r.flags.join(";")
        )
        .expect("string write");
    }
    s
}

pub fn runs_csv(runs: &[RunRecord], timing: Timing) -> String {
    let mut s = String::from(RUNS_HEADER);
    s.push('\n');
    for r in runs {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            axis_name(r.axis),
            r.axis_value,
            r.algorithm,
            r.seed_index,
            r.instance_seed,
            r.makespan_ms,
            r.completion_rate,
            runtime_field(r.runtime_s, timing),
            r.proven_optimal.map_or(String::new(), |b| b.to_string())
        )
        .expect("string write");
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendThresholds {
    /// Minimum |Spearman ρ| for a monotone-trend claim.
    pub min_abs_rho: f64,
    /// Fraction of sweep points that must show the expected ordering.
    pub min_order_fraction: f64,
}

impl Default for TrendThresholds {
    fn default() -> Self {
        Self {
            min_abs_rho: 0.8,
            min_order_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub algorithm: Option<Algorithm>,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Paired per-seed difference `metric(worse) - metric(better)` at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedGap {
    pub axis_value: usize,
    pub better: Algorithm,
    pub worse: Algorithm,
    pub metric: &'static str,
    pub mean_diff: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Share of seeds where `better` is at least as good as `worse`.
    pub win_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrendReport {
    pub checks: Vec<Check>,
    pub gaps: Vec<PairedGap>,
}

impl TrendReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str, algorithm: Option<Algorithm>) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name && c.algorithm == algorithm)
    }

    pub fn gaps_for(&self, better: Algorithm, worse: Algorithm, metric: &str) -> Vec<&PairedGap> {
        self.gaps
            .iter()
            .filter(|g| g.better == better && g.worse == worse && g.metric == metric)
            .collect()
    }
}

impl fmt::Display for TrendReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let who = c.algorithm.map_or(String::new(), |a| format!(" [{a}]"));
            writeln!(
                f,
                "{} {}{}: value {:.4}, threshold {:.4}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                who,
                c.value,
                c.threshold
            )?;
        }
        for g in &self.gaps {
            writeln!(
                f,
                "gap {} {}-{} @{}: {:.4} [{:.4}, {:.4}] win {:.2}",
                g.metric, g.worse, g.better, g.axis_value, g.mean_diff, g.ci_low, g.ci_high, g.win_fraction
            )?;
        }
        Ok(())
    }
}

fn series(results: &[SweepResult], algorithm: Algorithm) -> Vec<&SweepResult> {
    let mut v: Vec<&SweepResult> = results.iter().filter(|r| r.algorithm == algorithm).collect();
    v.sort_by_key(|r| r.axis_value);
    v
}

fn lookup(results: &[SweepResult], algorithm: Algorithm, point: usize) -> Option<&SweepResult> {
    results.iter().find(|r| r.algorithm == algorithm && r.axis_value == point)
}

/// Monotone-trend and ordering checks over a finished sweep.
///
/// Trend signs follow the axis: makespan should fall and completion rise with
/// more modes, and the reverse with more tasks. Orderings expect
/// aarlm ≤ anneal ≤ random on makespan and aarlm ≥ anneal on completion.
pub fn trend_checks(output: &SweepOutput, th: TrendThresholds) -> TrendReport {
    let mut report = TrendReport::default();
    let results = &output.results;
    let mut algorithms: Vec<Algorithm> = results.iter().map(|r| r.algorithm).collect();
    algorithms.sort();
    algorithms.dedup();
    let mut points: Vec<usize> = results.iter().map(|r| r.axis_value).collect();
    points.sort_unstable();
    points.dedup();

    // +1: metric expected to increase with the axis value.
    let (makespan_sign, rate_sign) = match output.axis {
        Some(Axis::NumTasks) => (1.0, -1.0),
        _ => (-1.0, 1.0),
    };

    for &a in &algorithms {
        let s = series(results, a);
        let xs: Vec<f64> = s.iter().map(|r| r.axis_value as f64).collect();
        for (name, sign, ys) in [
            (
                "makespan_trend",
                makespan_sign,
                s.iter().map(|r| r.mean_makespan).collect::<Vec<_>>(),
            ),
            (
                "completion_trend",
                rate_sign,
                s.iter().map(|r| r.mean_completion_rate).collect::<Vec<_>>(),
            ),
        ] {
            let rho = stats::spearman(&xs, &ys);
            report.checks.push(Check {
                name: name.to_string(),
                algorithm: Some(a),
                value: rho,
                threshold: sign * th.min_abs_rho,
                passed: sign * rho >= th.min_abs_rho,
            });
        }
    }

    let has = |a: Algorithm| algorithms.contains(&a);
    let order_check = |name: &str, holds: &dyn Fn(usize) -> Option<bool>| {
        let verdicts: Vec<bool> = points.iter().filter_map(|&p| holds(p)).collect();
        let frac = if verdicts.is_empty() {
            1.0
        } else {
            verdicts.iter().filter(|&&v| v).count() as f64 / verdicts.len() as f64
        };
        Check {
            name: name.to_string(),
            algorithm: None,
            value: frac,
            threshold: th.min_order_fraction,
            passed: frac >= th.min_order_fraction,
        }
    };

    if has(Algorithm::Aarlm) && has(Algorithm::Anneal) && has(Algorithm::Random) {
        report.checks.push(order_check("makespan_order_aarlm_anneal_random", &|p| {
            let a = lookup(results, Algorithm::Aarlm, p)?.mean_makespan;
            let b = lookup(results, Algorithm::Anneal, p)?.mean_makespan;
            let c = lookup(results, Algorithm::Random, p)?.mean_makespan;
            Some(a <= b && b <= c)
        }));
    }
    if has(Algorithm::Aarlm) && has(Algorithm::Anneal) {
        report.checks.push(order_check("makespan_order_aarlm_anneal", &|p| {
            Some(lookup(results, Algorithm::Aarlm, p)?.mean_makespan <= lookup(results, Algorithm::Anneal, p)?.mean_makespan)
        }));
        report.checks.push(order_check("completion_order_aarlm_anneal", &|p| {
            Some(
                lookup(results, Algorithm::Aarlm, p)?.mean_completion_rate
                    >= lookup(results, Algorithm::Anneal, p)?.mean_completion_rate,
            )
        }));
    }

    for (better, worse) in [
        (Algorithm::Aarlm, Algorithm::Anneal),
        (Algorithm::Anneal, Algorithm::Random),
        (Algorithm::Aarlm, Algorithm::Random),
        (Algorithm::Exact, Algorithm::Aarlm),
    ] {
        if !(has(better) && has(worse)) {
            continue;
        }
        for &p in &points {
            report.gaps.extend(paired_gaps(&output.runs, p, better, worse));
        }
    }
    report
}

fn paired_gaps(runs: &[RunRecord], point: usize, better: Algorithm, worse: Algorithm) -> Vec<PairedGap> {
    let pick = |a: Algorithm| {
        let mut v: Vec<&RunRecord> = runs.iter().filter(|r| r.axis_value == point && r.algorithm == a).collect();
        v.sort_by_key(|r| r.seed_index);
        v
    };
    let (b, w) = (pick(better), pick(worse));
    if b.is_empty() || b.len() != w.len() || b.iter().zip(&w).any(|(x, y)| x.instance_seed != y.instance_seed) {
        return Vec::new();
    }
    let gap = |metric: &'static str, diffs: Vec<f64>| {
        let ci = stats::mean_ci(&diffs, 0.95);
        PairedGap {
            axis_value: point,
            better,
            worse,
            metric,
            mean_diff: ci.mean,
            ci_low: ci.low,
            ci_high: ci.high,
            win_fraction: diffs.iter().filter(|&&d| d >= 0.0).count() as f64 / diffs.len() as f64,
        }
    };
    vec![
        gap("makespan_ms", b.iter().zip(&w).map(|(x, y)| y.makespan_ms - x.makespan_ms).collect()),
        gap(
            "completion_rate",
            b.iter().zip(&w).map(|(x, y)| x.completion_rate - y.completion_rate).collect(),
        ),
    ]
}
