//! Evaluation harness: the parallel ask/tell loop, the multi-run wrapper that
//! keeps the best of `k` independent runs, the generalization risk bound and
//! the budget-split generalization experiment.

mod afterlearner;
mod generalization;
mod pool;
mod risk;

use thiserror::Error;

use crate::domain::Genome;
use crate::optimizer::OptimizerError;

pub use afterlearner::{afterlearner, AfterlearnerConfig, RetrofitResult, RunRecord};
pub use generalization::{
    generalization_experiment, ConfigSummary, GeneralizationConfig, GeneralizationReport, ReplicaRow,
};
pub use pool::{run_parallel, ParallelRun, TraceEvent};
pub use risk::{risk_bound, RiskBound, RiskError};

/// Failure of a single loss evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct OracleError(pub String);

/// A loss to minimize. Implementations must tolerate concurrent calls on
/// distinct genomes.
pub trait LossOracle: Sync {
    fn evaluate(&self, genome: &Genome) -> Result<f64, OracleError>;

    /// Loss used to compare finished runs. Called once per run on its
    /// recommendation and not counted against the budget.
    fn final_loss(&self, genome: &Genome) -> Result<f64, OracleError> {
        self.evaluate(genome)
    }
}

impl<F> LossOracle for F
where
    F: Fn(&Genome) -> f64 + Sync,
{
    fn evaluate(&self, genome: &Genome) -> Result<f64, OracleError> {
        Ok(self(genome))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("at least one worker is required")]
    ZeroWorkers,
    #[error("{workers} workers exceed the optimizer's parallelism {parallelism}")]
    TooManyWorkers { workers: usize, parallelism: usize },
    #[error("budget {requested} exceeds the optimizer's remaining budget {remaining}")]
    BudgetTooLarge { requested: usize, remaining: usize },
    #[error("k must be at least 1")]
    ZeroRuns,
    #[error("the optimizer list is empty")]
    NoOptimizers,
    #[error("the budget list is empty")]
    NoBudgets,
    #[error("configurations must share the same total budget k*b (got {0:?})")]
    MismatchedTotals(Vec<(usize, usize)>),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
}
