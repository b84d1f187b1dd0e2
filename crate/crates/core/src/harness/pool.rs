//! Parallel asynchronous evaluation loop.
//!
//! The calling thread owns the optimizer and is the only one to ask and tell.
//! `P` worker threads pull genomes from a bounded queue and push losses back;
//! results are told in completion order. With `P = 1` the loop alternates
//! strictly between ask and tell.

use std::panic::{self, AssertUnwindSafe};

use crossbeam_channel::bounded;
use serde::{Deserialize, Serialize};

use super::{HarnessError, LossOracle, OracleError};
use crate::domain::{Candidate, Genome};
use crate::optimizer::Optimizer;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Ask {
        uid: u64,
    },
    Tell {
        uid: u64,
        #[serde(with = "crate::float_serde")]
        loss: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParallelRun {
    pub recommendation: Candidate,
    pub trace: Vec<TraceEvent>,
}

impl ParallelRun {
    /// `(eval_index, loss)` pairs in tell order.
    pub fn loss_trace(&self) -> Vec<(usize, f64)> {
        self.trace
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Tell { loss, .. } => Some(*loss),
                TraceEvent::Ask { .. } => None,
            })
            .enumerate()
            .collect()
    }
}

fn guarded(oracle: &dyn LossOracle, genome: &Genome) -> f64 {
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| oracle.evaluate(genome)))
        .unwrap_or_else(|_| Err(OracleError("loss oracle panicked".into())));
    match outcome {
        Ok(loss) => loss,
        Err(e) => {
            log::warn!("evaluation failed, recorded as +inf: {e}");
            f64::INFINITY
        }
    }
}

/// Asks and tells exactly `budget` candidates using `workers` concurrent
/// evaluations, drains all pending work and returns the recommendation.
pub fn run_parallel(
    optimizer: &mut Optimizer,
    oracle: &dyn LossOracle,
    budget: usize,
    workers: usize,
) -> Result<ParallelRun, HarnessError> {
    if budget == 0 {
        return Err(HarnessError::ZeroBudget);
    }
    if workers == 0 {
        return Err(HarnessError::ZeroWorkers);
    }
    let parallelism = optimizer.spec().parallelism;
    if workers > parallelism {
        return Err(HarnessError::TooManyWorkers { workers, parallelism });
    }
    let remaining = optimizer.remaining_budget();
    if budget > remaining {
        return Err(HarnessError::BudgetTooLarge { requested: budget, remaining });
    }

    let mut trace = Vec::with_capacity(2 * budget);
    let (job_tx, job_rx) = bounded::<(u64, Genome)>(workers);
    let (done_tx, done_rx) = bounded::<(u64, f64)>(workers);
    let outcome: Result<(), HarnessError> = std::thread::scope(|scope| {
        for _ in 0..workers {
            let jobs = job_rx.clone();
            let done = done_tx.clone();
            scope.spawn(move || {
                for (uid, genome) in jobs {
                    if done.send((uid, guarded(oracle, &genome))).is_err() {
                        break;
                    }
                }
            });
        }
        drop(done_tx);

        let mut asked = 0;
        let mut pending = 0;
        let result = (|| {
            while asked < budget || pending > 0 {
                if asked < budget && pending < workers {
                    let c = optimizer.ask()?;
                    trace.push(TraceEvent::Ask { uid: c.uid });
                    job_tx.send((c.uid, c.genome)).expect("workers outlive the queue");
                    asked += 1;
                    pending += 1;
                } else {
                    let (uid, loss) = done_rx.recv().expect("a worker holds pending work");
                    optimizer.tell(uid, loss)?;
                    let stored = if loss.is_finite() { loss } else { f64::INFINITY };
                    trace.push(TraceEvent::Tell { uid, loss: stored });
                    pending -= 1;
                }
            }
            Ok(())
        })();
        drop(job_tx);
        result
    });
    outcome?;
    let recommendation = optimizer.recommend()?;
    Ok(ParallelRun { recommendation, trace })
}
