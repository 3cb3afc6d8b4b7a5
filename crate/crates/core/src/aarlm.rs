//! Reward-driven mode assignment: a greedy bandwidth-filling start followed by
//! bottleneck-relieving task moves, with every visited state kept in a Q-table.
//!
//! Transitions are deterministic, so the state-action value of an applied
//! move collapses to its immediate reward plus the discounted reward already
//! collected on the way to the state. Whether a move is kept depends only on
//! the sign of its immediate reward; the discount factor therefore changes the
//! recorded cumulative rewards but never the assignment that comes out.

use std::fmt;
use std::io::Write;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, le_tol, Assignment, DelayModel, DelayReport, Instance};

/// Identity of a search state: the full mode vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StateKey(Box<[u32]>);

impl StateKey {
    fn of(mode_of: &[usize]) -> Self {
        Self(mode_of.iter().map(|&c| c as u32).collect())
    }

    pub fn modes(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&c| c as usize)
    }

    /// 64-bit FNV-1a digest, for logs.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &c in self.0.iter() {
            for b in c.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

impl fmt::Debug for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateKey({:016x})", self.digest())
    }
}

/// An assignment with its per-mode loads and makespan cached.
#[derive(Debug, Clone)]
pub struct SearchState {
    assignment: Assignment,
    mode_load: Vec<f64>,
    tasks_on: Vec<usize>,
    makespan: f64,
    key: StateKey,
}

impl SearchState {
    pub fn new(inst: &Instance, assignment: Assignment) -> Self {
        debug_assert!(model::validate(inst, &assignment).is_empty());
        let mode_load = model::mode_loads(inst, &assignment);
        let mut tasks_on = vec![0; inst.num_modes()];
        for &c in &assignment.mode_of {
            tasks_on[c] += 1;
        }
        let key = StateKey::of(&assignment.mode_of);
        let makespan = max_used(&mode_load, &tasks_on);
        Self {
            assignment,
            mode_load,
            tasks_on,
            makespan,
            key,
        }
    }

    fn from_key(inst: &Instance, key: &StateKey) -> Self {
        Self::new(inst, Assignment::new(key.modes().collect()))
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn mode_load(&self) -> &[f64] {
        &self.mode_load
    }

    pub fn makespan(&self) -> f64 {
        self.makespan
    }

    pub fn key(&self) -> &StateKey {
        &self.key
    }

    /// Applies `action`, recomputing the two touched mode loads from scratch.
    pub fn apply(&self, inst: &Instance, action: MoveAction) -> SearchState {
        debug_assert_eq!(self.assignment.mode(action.task), action.from_mode);
        debug_assert!(inst.supports(action.task, action.to_mode));
        let mut mode_of = self.assignment.mode_of.clone();
        mode_of[action.task] = action.to_mode;
        let mut mode_load = self.mode_load.clone();
        let mut tasks_on = self.tasks_on.clone();
        mode_load[action.from_mode] = model::mode_load_unchecked(inst, &mode_of, action.from_mode);
        mode_load[action.to_mode] = model::mode_load_unchecked(inst, &mode_of, action.to_mode);
        tasks_on[action.from_mode] -= 1;
        tasks_on[action.to_mode] += 1;
        let next = SearchState {
            makespan: max_used(&mode_load, &tasks_on),
            key: StateKey::of(&mode_of),
            assignment: Assignment::new(mode_of),
            mode_load,
            tasks_on,
        };
        debug_assert!(next.caches_match(inst));
        next
    }

    /// Whether the caches equal a from-scratch recomputation.
    pub fn caches_match(&self, inst: &Instance) -> bool {
        let loads = model::mode_loads(inst, &self.assignment);
        loads == self.mode_load
            && self.makespan == model::makespan_from_loads(inst, &self.assignment, &loads)
            && self.key == StateKey::of(&self.assignment.mode_of)
    }

    /// Most loaded mode carrying at least one task; ties go to the lower index.
    fn bottleneck(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for c in 0..self.mode_load.len() {
            if self.tasks_on[c] == 0 {
                continue;
            }
            if best.is_none_or(|b| self.mode_load[c] > self.mode_load[b]) {
                best = Some(c);
            }
        }
        best
    }
}

fn max_used(loads: &[f64], tasks_on: &[usize]) -> f64 {
    loads
        .iter()
        .zip(tasks_on)
        .filter(|(_, &n)| n > 0)
        .map(|(&l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MoveAction {
    pub task: usize,
    pub from_mode: usize,
    pub to_mode: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QEntry {
    pub makespan: f64,
    /// The strictly improving move taken out of this state, if any.
    pub best_known_action: Option<MoveAction>,
    pub cumulative_reward: f64,
    /// Every move evaluated from this state with its immediate reward.
    pub evaluated: Vec<(MoveAction, f64)>,
}

#[derive(Debug, Clone)]
pub struct QTable {
    entries: IndexMap<StateKey, QEntry>,
    best: StateKey,
}

impl QTable {
    fn new(start: &SearchState) -> Self {
        let mut entries = IndexMap::new();
        entries.insert(
            start.key.clone(),
            QEntry {
                makespan: start.makespan,
                best_known_action: None,
                cumulative_reward: 0.0,
                evaluated: Vec::new(),
            },
        );
        Self {
            entries,
            best: start.key.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &StateKey) -> Option<&QEntry> {
        self.entries.get(key)
    }

    /// Entries in first-visit order.
    pub fn iter(&self) -> impl Iterator<Item = (&StateKey, &QEntry)> {
        self.entries.iter()
    }

    pub fn best_state_key(&self) -> &StateKey {
        &self.best
    }

    pub fn best_makespan(&self) -> f64 {
        self.entries[&self.best].makespan
    }

    fn visit(&mut self, state: &SearchState, cumulative_reward: f64) {
        let entry = self.entries.entry(state.key.clone()).or_insert_with(|| QEntry {
            makespan: state.makespan,
            best_known_action: None,
            cumulative_reward,
            evaluated: Vec::new(),
        });
        entry.cumulative_reward = cumulative_reward;
        if state.makespan < self.best_makespan() {
            self.best = state.key.clone();
        }
        debug_assert!(self.best_is_minimal());
    }

    fn note_evaluation(&mut self, key: &StateKey, action: MoveAction, reward: f64) {
        let entry = self.entries.get_mut(key).expect("evaluated state is in the table");
        entry.evaluated.push((action, reward));
        if reward > 0.0 {
            entry.best_known_action = Some(action);
        }
    }

    fn tried(&self, key: &StateKey) -> &[(MoveAction, f64)] {
        self.entries.get(key).map_or(&[], |e| e.evaluated.as_slice())
    }

    pub fn best_is_minimal(&self) -> bool {
        let best = self.best_makespan();
        self.entries.values().all(|e| e.makespan >= best)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AarlmConfig {
    pub episodes: usize,
    /// Moves per episode; `None` means one per task.
    pub moves_per_episode: Option<usize>,
    pub discount: f64,
    /// Carried for run records; ties are broken by index so the search never draws from it.
    pub seed: u64,
}

impl Default for AarlmConfig {
    fn default() -> Self {
        Self {
            episodes: 100,
            moves_per_episode: None,
            discount: 0.9,
            seed: 0,
        }
    }
}

impl AarlmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::InvalidConfig("episodes must be at least 1".into()));
        }
        if self.moves_per_episode == Some(0) {
            return Err(Error::InvalidConfig("moves_per_episode must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::InvalidConfig(format!(
                "discount must lie in [0, 1), got {}",
                self.discount
            )));
        }
        Ok(())
    }

    pub fn moves_for(&self, inst: &Instance) -> usize {
        self.moves_per_episode.unwrap_or(inst.num_tasks()).max(1)
    }
}

/// Total data over the summed representative mode bandwidths.
pub fn t_ave(inst: &Instance) -> f64 {
    inst.total_data() / inst.mode_bandwidth().iter().sum::<f64>()
}

/// Greedy start: keep feeding the fastest mode still at or under the average
/// load with the largest unplaced task it supports.
pub fn initial_assignment(inst: &Instance) -> SearchState {
    let target = t_ave(inst);
    let n = inst.num_tasks();

    let mut tasks: Vec<usize> = (0..n).collect();
    tasks.sort_by(|&a, &b| inst.data_size()[b].total_cmp(&inst.data_size()[a]).then(a.cmp(&b)));
    let mut modes: Vec<usize> = (0..inst.num_modes()).collect();
    modes.sort_by(|&a, &b| {
        inst.mode_bandwidth()[b]
            .total_cmp(&inst.mode_bandwidth()[a])
            .then(a.cmp(&b))
    });

    let mut load = inst.buffer_delay().to_vec();
    let mut mode_of: Vec<Option<usize>> = vec![None; n];
    let mut left = n;

    while left > 0 {
        let pick = modes.iter().find_map(|&c| {
            if !le_tol(load[c], target) {
                return None;
            }
            tasks
                .iter()
                .find(|&&j| mode_of[j].is_none() && inst.supports(j, c))
                .map(|&j| (j, c))
        });
        let Some((j, c)) = pick else { break };
        mode_of[j] = Some(c);
        load[c] += inst.tx_delay(j, c);
        left -= 1;
    }

    // No mode is under the target any more: place the rest where they end earliest.
    for &j in &tasks {
        if mode_of[j].is_some() {
            continue;
        }
        let c = inst
            .supported_modes(j)
            .min_by(|&a, &b| {
                (load[a] + inst.tx_delay(j, a))
                    .total_cmp(&(load[b] + inst.tx_delay(j, b)))
                    .then(a.cmp(&b))
            })
            .expect("every task supports some mode");
        mode_of[j] = Some(c);
        load[c] += inst.tx_delay(j, c);
    }

    let mode_of = mode_of.into_iter().map(|c| c.expect("all placed")).collect();
    SearchState::new(inst, Assignment::new(mode_of))
}

/// Immediate reward of a transition: how much it lowered the makespan.
pub fn reward(before: &SearchState, after: &SearchState) -> f64 {
    before.makespan - after.makespan
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub action: Option<MoveAction>,
    /// The moved state when accepted, otherwise the input state.
    pub state: SearchState,
    pub reward: f64,
    pub accepted: bool,
    /// Makespan of the evaluated move, accepted or not.
    pub candidate_makespan: f64,
}

/// Moves out of the bottleneck mode in preference order.
///
/// Tasks on the most loaded mode are ranked by how closely their delay there
/// matches the excess over the average load; for each, the destinations are
/// the other supported modes from least to most loaded.
fn ranked_moves<'a>(
    inst: &'a Instance,
    state: &'a SearchState,
    target: f64,
) -> impl Iterator<Item = MoveAction> + 'a {
    let from = state.bottleneck();
    let mut tasks: Vec<(f64, usize)> = Vec::new();
    let mut dests: Vec<usize> = Vec::new();
    if let Some(from) = from {
        let excess = state.mode_load[from] - target;
        tasks = (0..inst.num_tasks())
            .filter(|&j| state.assignment.mode(j) == from)
            .filter(|&j| inst.supported_modes(j).any(|c| c != from))
            .map(|j| ((inst.tx_delay(j, from) - excess).abs(), j))
            .collect();
        tasks.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        dests = (0..inst.num_modes()).filter(|&c| c != from).collect();
        dests.sort_by(|&a, &b| state.mode_load[a].total_cmp(&state.mode_load[b]).then(a.cmp(&b)));
    }
    tasks.into_iter().flat_map(move |(_, task)| {
        let from_mode = from.expect("tasks imply a bottleneck");
        dests
            .clone()
            .into_iter()
            .filter(move |&c| inst.supports(task, c))
            .map(move |to_mode| MoveAction {
                task,
                from_mode,
                to_mode,
            })
    })
}

fn evaluate(inst: &Instance, state: &SearchState, action: Option<MoveAction>) -> StepOutcome {
    let Some(action) = action else {
        return StepOutcome {
            action: None,
            state: state.clone(),
            reward: 0.0,
            accepted: false,
            candidate_makespan: state.makespan,
        };
    };
    let next = state.apply(inst, action);
    let r = reward(state, &next);
    let candidate_makespan = next.makespan;
    let accepted = r > 0.0;
    StepOutcome {
        action: Some(action),
        state: if accepted { next } else { state.clone() },
        reward: r,
        accepted,
        candidate_makespan,
    }
}

/// One bottleneck move: the best-ranked task leaves the most loaded mode for
/// the least loaded mode it supports. Kept only if the makespan strictly drops.
pub fn improvement_step(inst: &Instance, state: &SearchState) -> StepOutcome {
    let action = ranked_moves(inst, state, t_ave(inst)).next();
    evaluate(inst, state, action)
}

/// Like [`improvement_step`], skipping moves already evaluated from this state.
pub fn improvement_step_excluding(
    inst: &Instance,
    state: &SearchState,
    target: f64,
    tried: &[(MoveAction, f64)],
) -> StepOutcome {
    let action = ranked_moves(inst, state, target).find(|a| !tried.iter().any(|(t, _)| t == a));
    evaluate(inst, state, action)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub episode: usize,
    pub step: usize,
    pub task: usize,
    pub from_mode: usize,
    pub to_mode: usize,
    pub reward_ms: f64,
    /// Makespan after the evaluated move, whether kept or not.
    pub makespan_ms: f64,
    pub accepted: bool,
}

pub fn write_trace<W: Write>(records: &[TraceRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct AarlmOutcome {
    pub assignment: Assignment,
    pub qtable: QTable,
    pub report: DelayReport,
    pub initial_makespan: f64,
    pub trace: Vec<TraceRecord>,
    /// Episodes actually run; the search stops once the best state has no untried moves.
    pub episodes_run: usize,
}

pub fn solve(inst: &Instance, cfg: &AarlmConfig) -> Result<AarlmOutcome> {
    cfg.validate()?;
    let target = t_ave(inst);
    let moves = cfg.moves_for(inst);
    let init = initial_assignment(inst);
    let initial_makespan = init.makespan;
    let mut q = QTable::new(&init);
    let mut trace = Vec::new();
    let mut episodes_run = 0;

    for episode in 0..cfg.episodes {
        episodes_run += 1;
        let mut state = SearchState::from_key(inst, q.best_state_key());
        let mut cumulative = q.get(&state.key).map_or(0.0, |e| e.cumulative_reward);
        let mut stuck = false;

        for step in 0..moves {
            let out = improvement_step_excluding(inst, &state, target, q.tried(&state.key));
            let Some(action) = out.action else {
                stuck = true;
                break;
            };
            trace.push(TraceRecord {
                episode,
                step,
                task: action.task,
                from_mode: action.from_mode,
                to_mode: action.to_mode,
                reward_ms: out.reward,
                makespan_ms: out.candidate_makespan,
                accepted: out.accepted,
            });
            q.note_evaluation(&state.key, action, out.reward);
            if out.accepted {
                cumulative = cfg.discount * cumulative + out.reward;
                q.visit(&out.state, cumulative);
                state = out.state;
            }
        }

        // Later episodes would restart from this same exhausted state.
        if stuck && state.key == *q.best_state_key() {
            break;
        }
    }

    let best = SearchState::from_key(inst, q.best_state_key());
    let report = model::delay_report(inst, best.assignment(), DelayModel::Queued);
    Ok(AarlmOutcome {
        assignment: best.assignment,
        qtable: q,
        report,
        initial_makespan,
        trace,
        episodes_run,
    })
}
