//! Reference solvers: uniform random selection, simulated annealing and an
//! exact branch-and-bound used as the optimality oracle on small instances.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::aarlm;
use crate::error::{Error, Result};
use crate::model::{self, Assignment, DelayModel, DelayReport, Instance};
use crate::seed;

/// Picks a supported mode uniformly at random for each task.
pub fn random_assign(inst: &Instance, seed: u64) -> Assignment {
    let mut rng = seed::rng(seed);
    let mode_of = (0..inst.num_tasks())
        .map(|j| {
            let modes: Vec<usize> = inst.supported_modes(j).collect();
            modes[rng.random_range(0..modes.len())]
        })
        .collect();
    Assignment::new(mode_of)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    /// Starting temperature in ms; `None` uses the starting makespan.
    pub initial_temperature: Option<f64>,
    pub cooling_factor: f64,
    /// Proposals per temperature level; `None` uses four per task.
    pub steps_per_temperature: Option<usize>,
    pub min_temperature: f64,
    pub seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            initial_temperature: None,
            cooling_factor: 0.95,
            steps_per_temperature: None,
            min_temperature: 1e-3,
            seed: 0,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cooling_factor > 0.0 && self.cooling_factor < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cooling_factor must lie strictly between 0 and 1, got {}",
                self.cooling_factor
            )));
        }
        if !(self.min_temperature > 0.0 && self.min_temperature.is_finite()) {
            return Err(Error::InvalidConfig("min_temperature must be positive".into()));
        }
        if let Some(t) = self.initial_temperature {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidConfig("initial_temperature must be positive".into()));
            }
        }
        if self.steps_per_temperature == Some(0) {
            return Err(Error::InvalidConfig("steps_per_temperature must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AnnealOutcome {
    pub assignment: Assignment,
    pub report: DelayReport,
    pub initial_makespan: f64,
    pub proposals: u64,
}

pub fn anneal_solve(inst: &Instance, cfg: &AnnealConfig) -> Result<AnnealOutcome> {
    cfg.validate()?;
    let mut rng = seed::rng(seed::derive(cfg.seed, &[0xa77e]));
    let start = random_assign(inst, cfg.seed);

    let mut mode_of = start.mode_of.clone();
    let mut load = model::mode_loads(inst, &start);
    let mut tasks_on = vec![0usize; inst.num_modes()];
    for &c in &mode_of {
        tasks_on[c] += 1;
    }
    let energy_of = |load: &[f64], tasks_on: &[usize]| {
        load.iter()
            .zip(tasks_on)
            .filter(|(_, &n)| n > 0)
            .map(|(&l, _)| l)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut energy = energy_of(&load, &tasks_on);
    let initial_makespan = energy;
    let mut best = mode_of.clone();
    let mut best_energy = energy;

    let movable: Vec<usize> = (0..inst.num_tasks())
        .filter(|&j| inst.supported_modes(j).nth(1).is_some())
        .collect();
    let steps = cfg.steps_per_temperature.unwrap_or(4 * inst.num_tasks()).max(1);
    let mut temperature = cfg.initial_temperature.unwrap_or(initial_makespan);
    let mut proposals = 0u64;

    while !movable.is_empty() && temperature > cfg.min_temperature {
        for _ in 0..steps {
            proposals += 1;
            let task = movable[rng.random_range(0..movable.len())];
            let from = mode_of[task];
            let others: Vec<usize> = inst.supported_modes(task).filter(|&c| c != from).collect();
            let to = others[rng.random_range(0..others.len())];

            mode_of[task] = to;
            let (old_from, old_to) = (load[from], load[to]);
            load[from] = model::mode_load_unchecked(inst, &mode_of, from);
            load[to] = model::mode_load_unchecked(inst, &mode_of, to);
            tasks_on[from] -= 1;
            tasks_on[to] += 1;
            let next = energy_of(&load, &tasks_on);
            let delta = next - energy;

            if delta <= 0.0 || rng.random::<f64>() < (-delta / temperature).exp() {
                energy = next;
                if energy < best_energy {
                    best_energy = energy;
                    best.clone_from(&mode_of);
                }
            } else {
                mode_of[task] = from;
                load[from] = old_from;
                load[to] = old_to;
                tasks_on[from] += 1;
                tasks_on[to] -= 1;
            }
        }
        temperature *= cfg.cooling_factor;
    }

    let assignment = Assignment::new(best);
    let report = model::delay_report(inst, &assignment, DelayModel::Queued);
    Ok(AnnealOutcome {
        assignment,
        report,
        initial_makespan,
        proposals,
    })
}

#[derive(Debug, Clone)]
pub struct ExactOutcome {
    pub assignment: Assignment,
    pub makespan: f64,
    /// False when the node budget ran out before the search finished.
    pub proven_optimal: bool,
    pub nodes: u64,
}

struct Search<'a> {
    inst: &'a Instance,
    order: Vec<usize>,
    /// Data still to place after depth `d`.
    suffix_data: Vec<f64>,
    /// Fastest bandwidth any task offers on each mode (0 if no task supports it).
    mode_rate: Vec<f64>,
    min_buffer: f64,
    load: Vec<f64>,
    tasks_on: Vec<usize>,
    mode_of: Vec<usize>,
    best: Vec<usize>,
    best_makespan: f64,
    nodes: u64,
    budget: Option<u64>,
    exhausted: bool,
}

impl Search<'_> {
    fn current_max(&self) -> f64 {
        self.load
            .iter()
            .zip(&self.tasks_on)
            .filter(|(_, &n)| n > 0)
            .map(|(&l, _)| l)
            .fold(0.0, f64::max)
    }

    /// Smallest level T at which the spare capacity `sum (T - load_c)+ * rate_c` fits `data`.
    fn water_level(&self, data: f64) -> f64 {
        let mut modes: Vec<(f64, f64)> = self
            .load
            .iter()
            .zip(&self.mode_rate)
            .filter(|(_, &r)| r > 0.0)
            .map(|(&l, &r)| (l, r))
            .collect();
        modes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut rate = 0.0;
        let mut filled = 0.0;
        for (i, &(level, r)) in modes.iter().enumerate() {
            rate += r;
            let next = modes.get(i + 1).map_or(f64::INFINITY, |m| m.0);
            let room = (next - level) * rate;
            if filled + room >= data {
                return level + (data - filled) / rate;
            }
            filled += room;
        }
        unreachable!("the last segment has infinite room")
    }

    fn lower_bound(&self, depth: usize) -> f64 {
        let remaining = self.suffix_data[depth];
        let mut lb = self.current_max();
        if depth == self.order.len() {
            return lb;
        }
        let total_rate: f64 = self.mode_rate.iter().sum();
        lb = lb.max(remaining / total_rate + self.min_buffer);
        lb = lb.max(self.water_level(remaining));
        for &j in &self.order[depth..] {
            let earliest = self
                .inst
                .supported_modes(j)
                .map(|c| self.load[c] + self.inst.tx_delay(j, c))
                .fold(f64::INFINITY, f64::min);
            lb = lb.max(earliest);
        }
        lb
    }

    fn dfs(&mut self, depth: usize) {
        if self.exhausted {
            return;
        }
        self.nodes += 1;
        if self.budget.is_some_and(|b| self.nodes > b) {
            self.exhausted = true;
            return;
        }
        if depth == self.order.len() {
            let asg = Assignment::new(self.mode_of.clone());
            let exact = model::makespan_from_loads(self.inst, &asg, &model::mode_loads(self.inst, &asg));
            if exact < self.best_makespan {
                self.best_makespan = exact;
                self.best = self.mode_of.clone();
            }
            return;
        }
        if self.lower_bound(depth) >= self.best_makespan {
            return;
        }
        let j = self.order[depth];
        let mut children: Vec<(f64, usize)> = self
            .inst
            .supported_modes(j)
            .map(|c| (self.load[c] + self.inst.tx_delay(j, c), c))
            .collect();
        children.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, c) in children {
            let saved = self.load[c];
            self.load[c] += self.inst.tx_delay(j, c);
            self.tasks_on[c] += 1;
            self.mode_of[j] = c;
            self.dfs(depth + 1);
            self.load[c] = saved;
            self.tasks_on[c] -= 1;
            if self.exhausted {
                return;
            }
        }
    }
}

/// Depth-first branch-and-bound over task→mode choices, largest tasks first.
///
/// `budget` caps the number of search nodes; `None` searches to completion.
pub fn exact_solve(inst: &Instance, budget: Option<u64>) -> ExactOutcome {
    let n = inst.num_tasks();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| inst.data_size()[b].total_cmp(&inst.data_size()[a]).then(a.cmp(&b)));
    let mut suffix_data = vec![0.0; n + 1];
    for d in (0..n).rev() {
        suffix_data[d] = suffix_data[d + 1] + inst.data_size()[order[d]];
    }
    let mode_rate = (0..inst.num_modes())
        .map(|c| {
            (0..n)
                .filter(|&j| inst.supports(j, c))
                .map(|j| inst.bandwidth(j, c))
                .fold(0.0, f64::max)
        })
        .collect();
    let min_buffer = inst.buffer_delay().iter().copied().fold(f64::INFINITY, f64::min);

    // Incumbent: the better of the bandwidth-filling start and earliest-finish greedy.
    let greedy = aarlm::initial_assignment(inst).assignment().clone();
    let eft = earliest_finish_greedy(inst, &order);
    let incumbent = [greedy, eft]
        .into_iter()
        .map(|a| (model::makespan(inst, &a, DelayModel::Queued), a))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("two candidates");

    let mut search = Search {
        inst,
        order,
        suffix_data,
        mode_rate,
        min_buffer,
        load: inst.buffer_delay().to_vec(),
        tasks_on: vec![0; inst.num_modes()],
        mode_of: vec![0; n],
        best: incumbent.1.mode_of,
        best_makespan: incumbent.0,
        nodes: 0,
        budget,
        exhausted: false,
    };
    search.dfs(0);

    ExactOutcome {
        assignment: Assignment::new(search.best),
        makespan: search.best_makespan,
        proven_optimal: !search.exhausted,
        nodes: search.nodes,
    }
}

fn earliest_finish_greedy(inst: &Instance, order: &[usize]) -> Assignment {
    let mut load = inst.buffer_delay().to_vec();
    let mut mode_of = vec![0; inst.num_tasks()];
    for &j in order {
        let c = inst
            .supported_modes(j)
            .min_by(|&a, &b| {
                (load[a] + inst.tx_delay(j, a))
                    .total_cmp(&(load[b] + inst.tx_delay(j, b)))
                    .then(a.cmp(&b))
            })
            .expect("supported mode");
        load[c] += inst.tx_delay(j, c);
        mode_of[j] = c;
    }
    Assignment::new(mode_of)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(data: &[f64], bw: &[f64], buf: &[f64]) -> Instance {
        Instance::with_mode_bandwidth(
            data.to_vec(),
            vec![5.0; data.len()],
            bw,
            buf.to_vec(),
            vec![vec![true; bw.len()]; data.len()],
        )
        .unwrap()
    }

    #[test]
    fn random_single_supported_mode() {
        let inst = Instance::with_mode_bandwidth(
            vec![1.0],
            vec![1.0],
            &[10.0, 10.0, 10.0],
            vec![0.0; 3],
            vec![vec![false, false, true]],
        )
        .unwrap();
        for s in 0..50 {
            assert_eq!(random_assign(&inst, s).mode_of, vec![2]);
        }
    }

    #[test]
    fn random_is_seed_deterministic() {
        let inst = full(&[1.0; 20], &[10.0, 20.0, 40.0], &[0.0; 3]);
        assert_eq!(random_assign(&inst, 9), random_assign(&inst, 9));
        assert_ne!(random_assign(&inst, 9), random_assign(&inst, 10));
    }

    #[test]
    fn random_is_uniform_over_two_modes() {
        let inst = full(&[1.0], &[10.0, 20.0], &[0.0, 0.0]);
        let draws = 10_000u64;
        let zeros = (0..draws).filter(|&s| random_assign(&inst, s).mode(0) == 0).count() as f64;
        let n = draws as f64;
        let sigma = (n * 0.25).sqrt();
        assert!((zeros - n / 2.0).abs() <= 3.0 * sigma, "mode 0 drawn {zeros} times");
    }

    #[test]
    fn anneal_flat_landscape() {
        // one task per mode either way; both modes identical
        let inst = full(&[10.0], &[10.0, 10.0], &[1.0, 1.0]);
        let out = anneal_solve(&inst, &AnnealConfig::default()).unwrap();
        assert!(model::validate(&inst, &out.assignment).is_empty());
        assert_eq!(out.report.makespan, 2.0);
    }

    #[test]
    fn anneal_never_worse_than_start() {
        let inst = full(&[5.0, 9.0, 14.0, 22.0, 7.0, 18.0], &[10.0, 40.0, 20.0], &[3.0, 1.0, 2.0]);
        for s in 0..10 {
            let cfg = AnnealConfig { seed: s, ..Default::default() };
            let out = anneal_solve(&inst, &cfg).unwrap();
            let start = model::makespan(&inst, &random_assign(&inst, s), DelayModel::Queued);
            assert!(out.report.makespan <= start);
            assert_eq!(out.initial_makespan, start);
        }
    }

    #[test]
    fn anneal_rejects_bad_config() {
        let inst = full(&[1.0], &[10.0], &[0.0]);
        for cfg in [
            AnnealConfig { cooling_factor: 1.0, ..Default::default() },
            AnnealConfig { cooling_factor: 0.0, ..Default::default() },
            AnnealConfig { min_temperature: 0.0, ..Default::default() },
            AnnealConfig { initial_temperature: Some(-1.0), ..Default::default() },
            AnnealConfig { steps_per_temperature: Some(0), ..Default::default() },
        ] {
            assert!(anneal_solve(&inst, &cfg).is_err());
        }
    }

    #[test]
    fn exact_single_task_fastest_mode() {
        let inst = full(&[10.0], &[10.0, 80.0, 20.0], &[0.0; 3]);
        let out = exact_solve(&inst, None);
        assert_eq!(out.assignment.mode_of, vec![1]);
        assert!(out.proven_optimal);
    }

    #[test]
    fn exact_splits_two_equal_tasks() {
        let inst = full(&[10.0, 10.0], &[10.0, 10.0], &[0.0, 0.0]);
        let out = exact_solve(&inst, None);
        assert_ne!(out.assignment.mode(0), out.assignment.mode(1));
        assert_eq!(out.makespan, 1.0);
        assert!(out.proven_optimal);
    }

    #[test]
    fn exact_flags_exhausted_budget() {
        let data: Vec<f64> = (0..12).map(|i| 5.0 + i as f64 * 1.7).collect();
        let inst = full(&data, &[10.0, 20.0, 40.0, 80.0], &[1.0, 2.0, 3.0, 4.0]);
        let out = exact_solve(&inst, Some(3));
        assert!(!out.proven_optimal);
        assert!(model::validate(&inst, &out.assignment).is_empty());
        let full_run = exact_solve(&inst, None);
        assert!(full_run.proven_optimal);
        assert!(full_run.makespan <= out.makespan);
    }

    #[test]
    fn water_level_matches_hand_value() {
        // loads {1, 2}, rates {10, 10}: 30 kbit fills to level 3
        let inst = full(&[1.0], &[10.0, 10.0], &[1.0, 2.0]);
        let s = Search {
            inst: &inst,
            order: vec![0],
            suffix_data: vec![1.0, 0.0],
            mode_rate: vec![10.0, 10.0],
            min_buffer: 1.0,
            load: vec![1.0, 2.0],
            tasks_on: vec![0, 0],
            mode_of: vec![0],
            best: vec![0],
            best_makespan: f64::INFINITY,
            nodes: 0,
            budget: None,
            exhausted: false,
        };
        assert!((s.water_level(30.0) - 3.0).abs() < 1e-12);
        assert!((s.water_level(5.0) - 1.5).abs() < 1e-12);
    }
}
