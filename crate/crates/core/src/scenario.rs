//! Seeded instance generation over the simulation parameter regime, plus
//! one-axis parameter sweeps.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format;
use crate::model::{Instance, Metadata};
use crate::seed;

pub const GENERATOR_VERSION: &str = concat!("modesel-gen/", env!("CARGO_PKG_VERSION"));

/// Either a fixed count or an inclusive integer range sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Count {
    Fixed(usize),
    Range([usize; 2]),
}

impl Count {
    fn bounds(self) -> (usize, usize) {
        match self {
            Count::Fixed(n) => (n, n),
            Count::Range([lo, hi]) => (lo, hi),
        }
    }

    fn sample(self, rng: &mut seed::Rng) -> usize {
        let (lo, hi) = self.bounds();
        if lo == hi {
            lo
        } else {
            rng.random_range(lo..=hi)
        }
    }
}

/// How mode bandwidths are picked from the pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthOrder {
    /// Mode `c` gets the `c`-th smallest pool value, so adding a mode adds the next larger one.
    #[default]
    Ascending,
    /// Modes draw from the pool without replacement in random order.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub format_version: String,
    pub num_tasks: Count,
    pub num_modes: Count,
    /// Kilobits.
    pub data_size_range: [f64; 2],
    /// Milliseconds.
    pub deadline_range: [f64; 2],
    /// Megabits per second (one Mbit/s per MHz of nominal bandwidth).
    pub bandwidth_pool: Vec<f64>,
    pub bandwidth_order: BandwidthOrder,
    /// Milliseconds.
    pub buffer_delay_range: [f64; 2],
    pub support_density: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            format_version: format::current_version(),
            num_tasks: Count::Range([25, 150]),
            num_modes: Count::Range([2, 5]),
            data_size_range: [5.0, 25.0],
            deadline_range: [1.0, 5.0],
            bandwidth_pool: vec![10.0, 20.0, 40.0, 80.0, 100.0],
            bandwidth_order: BandwidthOrder::Ascending,
            buffer_delay_range: [1.0, 10.0],
            support_density: 0.8,
            seed: 0,
        }
    }
}

fn check_range(name: &str, r: [f64; 2], strictly_positive: bool) -> Result<()> {
    let ok = r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] && if strictly_positive { r[0] > 0.0 } else { r[0] >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} [{}, {}] is not a valid range", r[0], r[1])))
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        format::check_version(&self.format_version)?;
        for (name, c) in [("num_tasks", self.num_tasks), ("num_modes", self.num_modes)] {
            let (lo, hi) = c.bounds();
            if lo == 0 || lo > hi {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a positive count or ordered range, got [{lo}, {hi}]"
                )));
            }
        }
        check_range("data_size_range", self.data_size_range, true)?;
        check_range("deadline_range", self.deadline_range, false)?;
        check_range("buffer_delay_range", self.buffer_delay_range, false)?;
        if self.bandwidth_pool.is_empty() {
            return Err(Error::InvalidConfig("bandwidth_pool is empty".into()));
        }
        if self.bandwidth_pool.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::InvalidConfig("bandwidth_pool values must be positive".into()));
        }
        if !(self.support_density > 0.0 && self.support_density <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "support_density must lie in (0, 1], got {}",
                self.support_density
            )));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: ScenarioSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

fn uniform(rng: &mut seed::Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..r[1])
    }
}

fn mode_bandwidths(spec: &ScenarioSpec, m: usize, rng: &mut seed::Rng) -> Vec<f64> {
    let mut pool = spec.bandwidth_pool.clone();
    match spec.bandwidth_order {
        BandwidthOrder::Ascending => {
            pool.sort_by(f64::total_cmp);
            (0..m).map(|c| pool[c % pool.len()]).collect()
        }
        BandwidthOrder::Random => {
            pool.shuffle(rng);
            (0..m)
                .map(|c| pool.get(c).copied().unwrap_or_else(|| pool[rng.random_range(0..pool.len())]))
                .collect()
        }
    }
}

/// Draws one instance; a pure function of `spec`.
pub fn generate(spec: &ScenarioSpec) -> Result<Instance> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed);
    let n = spec.num_tasks.sample(&mut rng);
    let m = spec.num_modes.sample(&mut rng);
    let bandwidths = mode_bandwidths(spec, m, &mut rng);
    let buffer_delay: Vec<f64> = (0..m).map(|_| uniform(&mut rng, spec.buffer_delay_range)).collect();

    let mut data_size = Vec::with_capacity(n);
    let mut deadline = Vec::with_capacity(n);
    let mut support = Vec::with_capacity(n);
    for _ in 0..n {
        data_size.push(uniform(&mut rng, spec.data_size_range));
        deadline.push(uniform(&mut rng, spec.deadline_range));
        let mut row: Vec<bool> = (0..m)
            .map(|_| spec.support_density >= 1.0 || rng.random::<f64>() < spec.support_density)
            .collect();
        if !row.iter().any(|&s| s) {
            row[rng.random_range(0..m)] = true;
        }
        support.push(row);
    }

    let inst = Instance::with_mode_bandwidth(data_size, deadline, &bandwidths, buffer_delay, support)?;
    Ok(inst.with_metadata(Metadata {
        seed: Some(spec.seed),
        generator_version: Some(GENERATOR_VERSION.to_string()),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    NumTasks,
    NumModes,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::NumTasks => "num_tasks",
            Axis::NumModes => "num_modes",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "num_tasks" => Ok(Axis::NumTasks),
            "num_modes" => Ok(Axis::NumModes),
            other => Err(Error::InvalidConfig(format!("unknown sweep axis {other:?}"))),
        }
    }
}

/// One spec per point with the axis fixed to the point and a point-specific seed.
pub fn sweep_specs(base: &ScenarioSpec, axis: Axis, points: &[usize]) -> Vec<ScenarioSpec> {
    points
        .iter()
        .map(|&p| {
            let mut spec = base.clone();
            match axis {
                Axis::NumTasks => spec.num_tasks = Count::Fixed(p),
                Axis::NumModes => spec.num_modes = Count::Fixed(p),
            }
            spec.seed = seed::derive(base.seed, &[axis as u64, p as u64]);
            spec
        })
        .collect()
}
