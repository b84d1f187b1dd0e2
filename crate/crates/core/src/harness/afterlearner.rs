//! Best-of-`k` retrofitting.
//!
//! Each of the `k` runs draws an optimizer from `O` and a budget from `B`
//! (a draw is skipped when the list has one element), runs the parallel loop
//! on the validation loss with its own derived seed, and recomputes the
//! validation loss of its recommendation once. The run with the lowest
//! recomputed loss wins; ties go to the lowest run index.

use std::io::Write;

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::{run_parallel, HarnessError, LossOracle};
use crate::domain::{Candidate, Domain, Genome};
use crate::optimizer::{NoiseHandling, Optimizer, OptimizerName, OptimizerSpec};
use crate::{seed, SCHEMA_VERSION};

/// Label of the generator that draws `(o_i, b_i)`; disjoint from run indices.
const DRAW_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AfterlearnerConfig {
    pub optimizers: Vec<OptimizerName>,
    pub budgets: Vec<usize>,
    pub runs: usize,
    pub workers: usize,
    pub seed: u64,
    /// Turn on noise handling (re-evaluations) in every run.
    pub noisy: bool,
}

impl AfterlearnerConfig {
    pub fn new(optimizers: Vec<OptimizerName>, budgets: Vec<usize>, runs: usize, seed: u64) -> Self {
        Self { optimizers, budgets, runs, workers: 1, seed, noisy: false }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_noise(mut self, noisy: bool) -> Self {
        self.noisy = noisy;
        self
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.runs == 0 {
            return Err(HarnessError::ZeroRuns);
        }
        if self.optimizers.is_empty() {
            return Err(HarnessError::NoOptimizers);
        }
        if self.budgets.is_empty() {
            return Err(HarnessError::NoBudgets);
        }
        if self.budgets.contains(&0) {
            return Err(HarnessError::ZeroBudget);
        }
        if self.workers == 0 {
            return Err(HarnessError::ZeroWorkers);
        }
        Ok(())
    }
}

fn run_spec(name: OptimizerName, budget: usize, workers: usize, noisy: bool) -> OptimizerSpec {
    let spec = OptimizerSpec::new(name, budget, workers);
    if !noisy || spec.noise_handling != NoiseHandling::None {
        return spec;
    }
    let noise = if name.is_one_plus_one() || name == OptimizerName::NgOptLite {
        NoiseHandling::Optimistic
    } else {
        NoiseHandling::RandomReeval
    };
    spec.with_noise(noise)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_index: usize,
    pub optimizer: OptimizerName,
    /// Algorithm actually run (differs from `optimizer` for NGOptLite).
    pub algorithm: Option<OptimizerName>,
    pub budget: usize,
    pub seed: u64,
    pub recommendation: Option<Candidate>,
    #[serde(with = "crate::float_serde")]
    pub validation_loss: f64,
    pub loss_trace: Vec<TracePoint>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub eval_index: usize,
    #[serde(with = "crate::float_serde")]
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrofitResult {
    pub schema_version: u32,
    pub best_run_index: usize,
    /// Recommendation of the best run (the domain's neutral point if every
    /// run failed).
    pub best_parameters: Genome,
    #[serde(with = "crate::float_serde")]
    pub best_validation_loss: f64,
    pub all_runs: Vec<RunRecord>,
    pub total_evaluations: usize,
}

impl RetrofitResult {
    /// One JSON object per run, newline-terminated.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for run in &self.all_runs {
            serde_json::to_writer(&mut out, run)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, out: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

fn single_run(
    index: usize,
    name: OptimizerName,
    budget: usize,
    config: &AfterlearnerConfig,
    domain: &Domain,
    oracle: &dyn LossOracle,
) -> RunRecord {
    let run_seed = seed::derive(config.seed, &[index as u64]);
    let mut record = RunRecord {
        run_index: index,
        optimizer: name,
        algorithm: None,
        budget,
        seed: run_seed,
        recommendation: None,
        validation_loss: f64::INFINITY,
        loss_trace: vec![],
        error: None,
    };
    let spec = run_spec(name, budget, config.workers, config.noisy);
    let outcome = Optimizer::new(spec, domain.clone(), run_seed).map_err(HarnessError::from).and_then(|mut opt| {
        record.algorithm = Some(opt.algorithm());
        run_parallel(&mut opt, oracle, budget, config.workers)
    });
    match outcome {
        Ok(run) => {
            record.loss_trace =
                run.loss_trace().into_iter().map(|(eval_index, loss)| TracePoint { eval_index, loss }).collect();
            record.validation_loss = match oracle.final_loss(&run.recommendation.genome) {
                Ok(l) if l.is_finite() => l,
                Ok(_) => f64::INFINITY,
                Err(e) => {
                    log::warn!("run {index}: validation of the recommendation failed: {e}");
                    f64::INFINITY
                }
            };
            record.recommendation = Some(run.recommendation);
        }
        Err(e) => {
            log::warn!("run {index} failed: {e}");
            record.error = Some(e.to_string());
        }
    }
    record
}

/// Runs `k` independent optimizations of `oracle` over `domain` and keeps the
/// recommendation with the lowest recomputed validation loss.
pub fn afterlearner(
    config: &AfterlearnerConfig,
    domain: &Domain,
    oracle: &dyn LossOracle,
) -> Result<RetrofitResult, HarnessError> {
    config.validate()?;
    domain.validate().map_err(|e| HarnessError::Optimizer(e.into()))?;
    let mut draws = seed::rng(config.seed, &[DRAW_STREAM]);
    let mut runs = Vec::with_capacity(config.runs);
    for i in 0..config.runs {
        let name = match config.optimizers.as_slice() {
            [only] => *only,
            many => *many.choose(&mut draws).expect("non-empty"),
        };
        let budget = match config.budgets.as_slice() {
            [only] => *only,
            many => *many.choose(&mut draws).expect("non-empty"),
        };
        runs.push(single_run(i, name, budget, config, domain, oracle));
    }
    let best_run_index = runs
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.validation_loss.total_cmp(&b.validation_loss).then(i.cmp(j)))
        .map(|(i, _)| i)
        .expect("at least one run");
    let best = &runs[best_run_index];
    let best_parameters = best.recommendation.as_ref().map_or_else(|| domain.neutral(), |c| c.genome.clone());
    Ok(RetrofitResult {
        schema_version: SCHEMA_VERSION,
        best_run_index,
        best_parameters,
        best_validation_loss: best.validation_loss,
        total_evaluations: runs.iter().map(|r| r.budget).sum(),
        all_runs: runs,
    })
}
