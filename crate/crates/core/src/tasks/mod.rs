//! Desk-scale retrofit tasks.
//!
//! Each task is a small frozen model with a few retrofit parameters, a
//! validation loss the optimizers see and a test loss on a disjoint split
//! they never see. The neutral genome (scales 1, biases 0, `r = 0`) is the
//! unretrofitted model.
//!
//! | task           | parameters                      | loss                                  |
//! |----------------|---------------------------------|---------------------------------------|
//! | normalization  | 3 scales in [0.25, 4], 3 biases in [-1, 1] | threshold failure rate vs. a teacher |
//! | policy         | 35 output rescale exponents in [-3, 3]     | -kills/deaths, noisy episodes         |
//! | seq-rescale    | 32 hidden scales in [0.1, 10]               | 1 - BLEU (or 1 - exact match)        |
//! | two-constant   | 2 constants in [0, 1]                       | plateau landscape + N(0, 0.05^2)     |

mod normalization;
mod policy;
mod seq_rescale;
mod two_constant;

use std::collections::HashMap;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Genome};
use crate::harness::LossOracle;

pub use normalization::NormalizationTask;
pub use policy::PolicyTask;
pub use seq_rescale::{SeqLoss, SeqRescaleTask};
pub use two_constant::TwoConstantTask;

/// A retrofit problem: parameter domain, validation loss, held-out test loss.
pub trait RetrofitTask: Send + Sync {
    fn name(&self) -> &'static str;
    fn domain(&self) -> &Domain;
    fn noisy(&self) -> bool;
    /// Noise-free validation loss of the neutral genome.
    fn baseline_loss(&self) -> f64;
    /// The only loss an optimizer may consume.
    fn validation(&self) -> &dyn LossOracle;
    /// Loss on the held-out split (expected value for noisy tasks).
    fn test_loss(&self, genome: &Genome) -> f64;
}

impl<T: RetrofitTask + ?Sized> RetrofitTask for Box<T> {
    fn name(&self) -> &'static str {
        (**self).name()
    }
    fn domain(&self) -> &Domain {
        (**self).domain()
    }
    fn noisy(&self) -> bool {
        (**self).noisy()
    }
    fn baseline_loss(&self) -> f64 {
        (**self).baseline_loss()
    }
    fn validation(&self) -> &dyn LossOracle {
        (**self).validation()
    }
    fn test_loss(&self, genome: &Genome) -> f64 {
        (**self).test_loss(genome)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskName {
    Normalization,
    Policy,
    SeqRescale,
    TwoConstant,
}

impl TaskName {
    pub const ALL: [TaskName; 4] = [TaskName::Normalization, TaskName::Policy, TaskName::SeqRescale, TaskName::TwoConstant];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskName::Normalization => "normalization",
            TaskName::Policy => "policy",
            TaskName::SeqRescale => "seq-rescale",
            TaskName::TwoConstant => "two-constant",
        }
    }
}

impl std::fmt::Display for TaskName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskName::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown task {s:?} (expected one of normalization, policy, seq-rescale, two-constant)"))
    }
}

/// Task-specific knobs exposed on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskOptions {
    pub threshold_level: u8,
    pub scale_suffix: u32,
    pub seq_loss: SeqLoss,
    pub noise: bool,
}

impl Default for TaskOptions {
    fn default() -> Self {
        Self { threshold_level: 1, scale_suffix: 1, seq_loss: SeqLoss::Bleu, noise: true }
    }
}

pub fn make_task(name: TaskName, seed: u64, options: &TaskOptions) -> Result<Box<dyn RetrofitTask>, String> {
    Ok(match name {
        TaskName::Normalization => Box::new(
            NormalizationTask::new(seed, options.threshold_level).map_err(|e| e.to_string())?,
        ),
        TaskName::Policy => Box::new(PolicyTask::new(seed, options.scale_suffix)?),
        TaskName::SeqRescale => Box::new(SeqRescaleTask::new(seed, options.seq_loss)),
        TaskName::TwoConstant => Box::new(TwoConstantTask::new(seed).with_noise(options.noise)),
    })
}

/// Per-genome evaluation counters, so that the `j`-th evaluation of a genome
/// always sees the same noise draw regardless of thread scheduling.
#[derive(Debug, Default)]
pub(crate) struct DrawCounter {
    counts: Mutex<HashMap<u64, u64>>,
}

impl DrawCounter {
    pub(crate) fn next(&self, genome: &Genome) -> u64 {
        let mut counts = self.counts.lock().unwrap_or_else(|e| e.into_inner());
        let slot = counts.entry(genome.fingerprint()).or_insert(0);
        let index = *slot;
        *slot += 1;
        index
    }
}

/// Data split labels used in seed derivation.
pub(crate) const VALIDATION: u64 = 1;
pub(crate) const TEST: u64 = 2;

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for t in TaskName::ALL {
            assert_eq!(t.as_str().parse::<TaskName>().unwrap(), t);
        }
        assert!("doom".parse::<TaskName>().is_err());
    }

    #[test]
    fn every_task_has_finite_baseline_and_disjoint_oracles() {
        for t in TaskName::ALL {
            let task = make_task(t, 3, &TaskOptions::default()).unwrap();
            let neutral = task.domain().neutral();
            assert!(task.domain().contains(&neutral), "{t}");
            assert!(task.baseline_loss().is_finite(), "{t}");
            assert!(task.test_loss(&neutral).is_finite(), "{t}");
            assert!(task.validation().evaluate(&neutral).unwrap().is_finite(), "{t}");
        }
    }

    #[test]
    fn draw_counter_is_per_genome() {
        let c = DrawCounter::default();
        let a = Genome::new(vec![1.0]);
        let b = Genome::new(vec![2.0]);
        assert_eq!((c.next(&a), c.next(&a), c.next(&b), c.next(&a)), (0, 1, 0, 2));
    }
}
