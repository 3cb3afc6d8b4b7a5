#![allow(dead_code)]

use modesel::model::{self, Assignment, DelayModel, Instance};
use modesel::scenario::{self, Count, ScenarioSpec};

pub fn spec(tasks: Count, modes: Count, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        num_tasks: tasks,
        num_modes: modes,
        seed,
        ..ScenarioSpec::default()
    }
}

pub fn small(max_tasks: usize, max_modes: usize, seed: u64) -> Instance {
    scenario::generate(&spec(Count::Range([1, max_tasks]), Count::Range([1, max_modes]), seed)).unwrap()
}

pub fn default_instance(seed: u64) -> Instance {
    scenario::generate(&ScenarioSpec {
        seed,
        ..ScenarioSpec::default()
    })
    .unwrap()
}

/// Optimal queued makespan by exhaustive enumeration over supported modes.
pub fn brute_force(inst: &Instance) -> (Assignment, f64) {
    let n = inst.num_tasks();
    let options: Vec<Vec<usize>> = (0..n).map(|j| inst.supported_modes(j).collect()).collect();
    let mut idx = vec![0usize; n];
    let mut best: Option<(Assignment, f64)> = None;
    loop {
        let asg = Assignment::new((0..n).map(|j| options[j][idx[j]]).collect());
        let ms = model::makespan(inst, &asg, DelayModel::Queued);
        if best.as_ref().is_none_or(|(_, b)| ms < *b) {
            best = Some((asg, ms));
        }
        let mut k = 0;
        loop {
            if k == n {
                return best.unwrap();
            }
            idx[k] += 1;
            if idx[k] < options[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}
