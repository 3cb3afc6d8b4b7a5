//! Problem instance, assignments and the delay semantics every solver shares.
//!
//! Units: data sizes are kilobits, bandwidths megabits per second and all
//! durations milliseconds. Since 1 Mbit/s is 1 kbit/ms, `data / bandwidth`
//! is directly a transmission delay in ms.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format;

/// Relative tolerance for comparisons against deadlines and load targets.
pub const REL_TOL: f64 = 1e-9;

/// `a <= b` up to [`REL_TOL`].
pub fn le_tol(a: f64, b: f64) -> bool {
    a <= b + REL_TOL * a.abs().max(b.abs())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_version: Option<String>,
}

/// One source node's view of the assignment problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    data_size: Vec<f64>,
    deadline: Vec<f64>,
    bandwidth: Vec<Vec<f64>>,
    buffer_delay: Vec<f64>,
    support: Vec<Vec<bool>>,
    metadata: Metadata,
    // derived
    mode_bandwidth: Vec<f64>,
    edf_order: Vec<usize>,
}

impl Instance {
    /// Builds an instance; `bandwidth` and `support` are task-major.
    pub fn new(
        data_size: Vec<f64>,
        deadline: Vec<f64>,
        bandwidth: Vec<Vec<f64>>,
        buffer_delay: Vec<f64>,
        support: Vec<Vec<bool>>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        let n = data_size.len();
        let m = buffer_delay.len();
        if n == 0 {
            return bad("instance has no tasks".into());
        }
        if m == 0 {
            return bad("instance has no modes".into());
        }
        if deadline.len() != n || bandwidth.len() != n || support.len() != n {
            return bad(format!(
                "per-task arrays disagree on task count: data_size {n}, deadline {}, bandwidth {}, support {}",
                deadline.len(),
                bandwidth.len(),
                support.len()
            ));
        }
        for j in 0..n {
            if !(data_size[j].is_finite() && data_size[j] > 0.0) {
                return bad(format!("task {j}: data size must be positive, got {}", data_size[j]));
            }
            if !(deadline[j].is_finite() && deadline[j] >= 0.0) {
                return bad(format!("task {j}: deadline must be non-negative, got {}", deadline[j]));
            }
            if bandwidth[j].len() != m || support[j].len() != m {
                return bad(format!("task {j}: expected {m} per-mode entries"));
            }
            if let Some(c) = bandwidth[j].iter().position(|b| !(b.is_finite() && *b > 0.0)) {
                return bad(format!(
                    "task {j} mode {c}: bandwidth must be positive, got {}",
                    bandwidth[j][c]
                ));
            }
            if !support[j].iter().any(|&s| s) {
                return bad(format!("task {j} has no supported mode"));
            }
        }
        if let Some(c) = buffer_delay.iter().position(|b| !(b.is_finite() && *b >= 0.0)) {
            return bad(format!("mode {c}: buffer delay must be non-negative, got {}", buffer_delay[c]));
        }

        let mode_bandwidth = (0..m)
            .map(|c| bandwidth.iter().map(|row| row[c]).sum::<f64>() / n as f64)
            .collect();
        let mut edf_order: Vec<usize> = (0..n).collect();
        edf_order.sort_by(|&a, &b| deadline[a].total_cmp(&deadline[b]).then(a.cmp(&b)));

        Ok(Self {
            data_size,
            deadline,
            bandwidth,
            buffer_delay,
            support,
            metadata: Metadata::default(),
            mode_bandwidth,
            edf_order,
        })
    }

    /// Convenience constructor for instances whose bandwidth depends only on the mode.
    pub fn with_mode_bandwidth(
        data_size: Vec<f64>,
        deadline: Vec<f64>,
        mode_bandwidth: &[f64],
        buffer_delay: Vec<f64>,
        support: Vec<Vec<bool>>,
    ) -> Result<Self> {
        let bandwidth = vec![mode_bandwidth.to_vec(); data_size.len()];
        Self::new(data_size, deadline, bandwidth, buffer_delay, support)
    }

    pub fn with_metadata(mut self, metadata: Metadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn num_tasks(&self) -> usize {
        self.data_size.len()
    }

    pub fn num_modes(&self) -> usize {
        self.buffer_delay.len()
    }

    pub fn data_size(&self) -> &[f64] {
        &self.data_size
    }

    pub fn deadline(&self) -> &[f64] {
        &self.deadline
    }

    pub fn bandwidth(&self, task: usize, mode: usize) -> f64 {
        self.bandwidth[task][mode]
    }

    pub fn buffer_delay(&self) -> &[f64] {
        &self.buffer_delay
    }

    pub fn supports(&self, task: usize, mode: usize) -> bool {
        self.support[task][mode]
    }

    pub fn supported_modes(&self, task: usize) -> impl Iterator<Item = usize> + '_ {
        self.support[task]
            .iter()
            .enumerate()
            .filter_map(|(c, &s)| s.then_some(c))
    }

    pub fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    /// Representative bandwidth of a mode: the mean over tasks.
    pub fn mode_bandwidth(&self) -> &[f64] {
        &self.mode_bandwidth
    }

    /// Delay to push task `task` through mode `mode`, excluding any queueing.
    #[inline]
    pub fn tx_delay(&self, task: usize, mode: usize) -> f64 {
        self.data_size[task] / self.bandwidth[task][mode]
    }

    pub fn total_data(&self) -> f64 {
        self.data_size.iter().sum()
    }

    /// Tasks in earliest-deadline-first order, ties by index.
    ///
    /// Every per-mode sum in the crate is accumulated in this order so that
    /// mode loads and queued completion times agree bit for bit.
    pub fn edf_order(&self) -> &[usize] {
        &self.edf_order
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(s)?;
        Self::try_from(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// On-disk representation of an [`Instance`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub format_version: String,
    pub num_tasks: usize,
    pub num_modes: usize,
    pub data_size: Vec<f64>,
    pub deadline: Vec<f64>,
    pub bandwidth: Vec<Vec<f64>>,
    pub buffer_delay: Vec<f64>,
    pub support: Vec<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        let metadata = (inst.metadata != Metadata::default()).then(|| inst.metadata.clone());
        Self {
            format_version: format::current_version(),
            num_tasks: inst.num_tasks(),
            num_modes: inst.num_modes(),
            data_size: inst.data_size.clone(),
            deadline: inst.deadline.clone(),
            bandwidth: inst.bandwidth.clone(),
            buffer_delay: inst.buffer_delay.clone(),
            support: inst
                .support
                .iter()
                .map(|row| row.iter().map(|&s| u8::from(s)).collect())
                .collect(),
            metadata,
        }
    }
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(f: InstanceFile) -> Result<Self> {
        format::check_version(&f.format_version)?;
        if f.data_size.len() != f.num_tasks {
            return Err(Error::InvalidInstance(format!(
                "num_tasks is {} but data_size has {} entries",
                f.num_tasks,
                f.data_size.len()
            )));
        }
        if f.buffer_delay.len() != f.num_modes {
            return Err(Error::InvalidInstance(format!(
                "num_modes is {} but buffer_delay has {} entries",
                f.num_modes,
                f.buffer_delay.len()
            )));
        }
        let mut support = Vec::with_capacity(f.support.len());
        for (j, row) in f.support.iter().enumerate() {
            let mut out = Vec::with_capacity(row.len());
            for (c, &v) in row.iter().enumerate() {
                match v {
                    0 => out.push(false),
                    1 => out.push(true),
                    _ => {
                        return Err(Error::InvalidInstance(format!(
                            "support[{j}][{c}] must be 0 or 1, got {v}"
                        )))
                    }
                }
            }
            support.push(out);
        }
        let inst = Instance::new(f.data_size, f.deadline, f.bandwidth, f.buffer_delay, support)?;
        Ok(inst.with_metadata(f.metadata.unwrap_or_default()))
    }
}

/// Mode chosen for every task: `mode_of[j] == c` selects mode `c` for task `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment {
    pub mode_of: Vec<usize>,
}

impl Assignment {
    pub fn new(mode_of: Vec<usize>) -> Self {
        Self { mode_of }
    }

    pub fn len(&self) -> usize {
        self.mode_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mode_of.is_empty()
    }

    pub fn mode(&self, task: usize) -> usize {
        self.mode_of[task]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    WrongLength { expected: usize, actual: usize },
    ModeOutOfRange { task: usize, mode: usize },
    UnsupportedMode { task: usize, mode: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WrongLength { expected, actual } => {
                write!(f, "assignment covers {actual} tasks, instance has {expected}")
            }
            Violation::ModeOutOfRange { task, mode } => {
                write!(f, "task {task}: mode {mode} out of range")
            }
            Violation::UnsupportedMode { task, mode } => {
                write!(f, "task {task}: mode {mode} not supported")
            }
        }
    }
}

/// Lists every way `asg` breaks the one-supported-mode-per-task constraint.
pub fn validate(inst: &Instance, asg: &Assignment) -> Vec<Violation> {
    let mut out = Vec::new();
    if asg.len() != inst.num_tasks() {
        out.push(Violation::WrongLength {
            expected: inst.num_tasks(),
            actual: asg.len(),
        });
    }
    for (task, &mode) in asg.mode_of.iter().enumerate().take(inst.num_tasks()) {
        if mode >= inst.num_modes() {
            out.push(Violation::ModeOutOfRange { task, mode });
        } else if !inst.supports(task, mode) {
            out.push(Violation::UnsupportedMode { task, mode });
        }
    }
    out
}

pub fn ensure_valid(inst: &Instance, asg: &Assignment) -> Result<()> {
    let v = validate(inst, asg);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidAssignment(v))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayModel {
    /// Tasks sharing a mode are serialized behind its buffer in EDF order.
    #[default]
    Queued,
    /// Each task sees only the buffer plus its own transmission delay.
    Literal,
}

impl std::str::FromStr for DelayModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "queued" => Ok(Self::Queued),
            "literal" => Ok(Self::Literal),
            other => Err(Error::InvalidConfig(format!("unknown delay model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayReport {
    pub completion_time: Vec<f64>,
    pub mode_load: Vec<f64>,
    pub makespan: f64,
    pub completion_rate: f64,
}

/// Buffer delay plus the transmission delays of every task on each mode.
pub fn mode_loads(inst: &Instance, asg: &Assignment) -> Vec<f64> {
    let mut load = inst.buffer_delay().to_vec();
    for &j in inst.edf_order() {
        let c = asg.mode(j);
        load[c] += inst.tx_delay(j, c);
    }
    load
}

/// Load of a single mode, summed in the same order as [`mode_loads`].
pub fn mode_load(inst: &Instance, asg: &Assignment, mode: usize) -> Result<f64> {
    if mode >= inst.num_modes() {
        return Err(Error::ModeOutOfRange {
            mode,
            num_modes: inst.num_modes(),
        });
    }
    Ok(mode_load_unchecked(inst, &asg.mode_of, mode))
}

pub(crate) fn mode_load_unchecked(inst: &Instance, mode_of: &[usize], mode: usize) -> f64 {
    let mut load = inst.buffer_delay()[mode];
    for &j in inst.edf_order() {
        if mode_of[j] == mode {
            load += inst.tx_delay(j, mode);
        }
    }
    load
}

pub fn task_completion_times(inst: &Instance, asg: &Assignment, model: DelayModel) -> Vec<f64> {
    let mut done = vec![0.0; inst.num_tasks()];
    match model {
        DelayModel::Literal => {
            for (j, t) in done.iter_mut().enumerate() {
                let c = asg.mode(j);
                *t = inst.buffer_delay()[c] + inst.tx_delay(j, c);
            }
        }
        DelayModel::Queued => {
            let mut clock = inst.buffer_delay().to_vec();
            for &j in inst.edf_order() {
                let c = asg.mode(j);
                clock[c] += inst.tx_delay(j, c);
                done[j] = clock[c];
            }
        }
    }
    done
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Maximum task completion time under `model`.
pub fn makespan(inst: &Instance, asg: &Assignment, model: DelayModel) -> f64 {
    max_of(&task_completion_times(inst, asg, model))
}

/// Max over modes that carry at least one task.
pub fn makespan_from_loads(inst: &Instance, asg: &Assignment, loads: &[f64]) -> f64 {
    let mut used = vec![false; inst.num_modes()];
    for &c in &asg.mode_of {
        used[c] = true;
    }
    loads
        .iter()
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|(&l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn rate_from_times(inst: &Instance, times: &[f64]) -> f64 {
    let on_time = times
        .iter()
        .zip(inst.deadline())
        .filter(|(&t, &d)| le_tol(t, d))
        .count();
    on_time as f64 / inst.num_tasks() as f64
}

/// Fraction of tasks finishing within their deadline.
pub fn completion_rate(inst: &Instance, asg: &Assignment, model: DelayModel) -> f64 {
    rate_from_times(inst, &task_completion_times(inst, asg, model))
}

pub fn delay_report(inst: &Instance, asg: &Assignment, model: DelayModel) -> DelayReport {
    debug_assert!(validate(inst, asg).is_empty());
    let completion_time = task_completion_times(inst, asg, model);
    DelayReport {
        makespan: max_of(&completion_time),
        completion_rate: rate_from_times(inst, &completion_time),
        mode_load: mode_loads(inst, asg),
        completion_time,
    }
}
