//! Compares budget splits `(k, b)` with equal total `k * b` by the test loss
//! of the selected recommendation, over independent replicas.

use serde::{Deserialize, Serialize};

use super::{afterlearner, AfterlearnerConfig, HarnessError};
use crate::optimizer::OptimizerName;
use crate::seed;
use crate::tasks::RetrofitTask;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationConfig {
    /// `(k, b)` pairs; all must share the same `k * b`.
    pub configs: Vec<(usize, usize)>,
    pub replicas: usize,
    pub optimizers: Vec<OptimizerName>,
    pub workers: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRow {
    pub k: usize,
    pub b: usize,
    pub replica: usize,
    pub val_loss: f64,
    pub test_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub k: usize,
    pub b: usize,
    pub mean_val_loss: f64,
    pub mean_test_loss: f64,
    /// Sample standard deviation (0 for a single replica).
    pub std_test_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationReport {
    pub schema_version: u32,
    pub baseline_test_loss: f64,
    pub rows: Vec<ReplicaRow>,
    pub summaries: Vec<ConfigSummary>,
}

impl GeneralizationReport {
    /// CSV with columns `k,b,replica,val_loss,test_loss`.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn summary(&self, k: usize, b: usize) -> Option<&ConfigSummary> {
        self.summaries.iter().find(|s| s.k == k && s.b == b)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// `make_task(replica_seed)` builds the task instance for one replica; the
/// replica seed is derived from `(seed, k, b, replica)`.
pub fn generalization_experiment<T, F>(
    make_task: F,
    config: &GeneralizationConfig,
) -> Result<GeneralizationReport, HarnessError>
where
    T: RetrofitTask,
    F: Fn(u64) -> T,
{
    if config.optimizers.is_empty() {
        return Err(HarnessError::NoOptimizers);
    }
    if config.configs.is_empty() || config.replicas == 0 {
        return Err(HarnessError::ZeroRuns);
    }
    let total = config.configs[0].0 * config.configs[0].1;
    if config.configs.iter().any(|&(k, b)| k * b != total || k == 0 || b == 0) {
        return Err(HarnessError::MismatchedTotals(config.configs.clone()));
    }
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut baseline_test_loss = f64::NAN;
    for &(k, b) in &config.configs {
        let mut vals = Vec::with_capacity(config.replicas);
        let mut tests = Vec::with_capacity(config.replicas);
        for r in 0..config.replicas {
            let replica_seed = seed::derive(config.seed, &[k as u64, b as u64, r as u64]);
            let task = make_task(replica_seed);
            if baseline_test_loss.is_nan() {
                baseline_test_loss = task.test_loss(&task.domain().neutral());
            }
            let run_config = AfterlearnerConfig::new(config.optimizers.clone(), vec![b], k, replica_seed)
                .with_workers(config.workers)
                .with_noise(task.noisy());
            let result = afterlearner(&run_config, task.domain(), task.validation())?;
            let test_loss = task.test_loss(&result.best_parameters);
            vals.push(result.best_validation_loss);
            tests.push(test_loss);
            rows.push(ReplicaRow { k, b, replica: r, val_loss: result.best_validation_loss, test_loss });
        }
        let (mean_val_loss, _) = mean_std(&vals);
        let (mean_test_loss, std_test_loss) = mean_std(&tests);
        summaries.push(ConfigSummary { k, b, mean_val_loss, mean_test_loss, std_test_loss });
    }
    Ok(GeneralizationReport { schema_version: crate::SCHEMA_VERSION, baseline_test_loss, rows, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_sample_std() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
