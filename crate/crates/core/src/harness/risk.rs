//! Union-bound risk for selecting the best of `k` black-box runs.
//!
//! A run of `N / k` evaluations with `lambda` evaluations per iteration
//! explores at most `lambda^(N / (lambda k))` distinct paths; with `k` runs
//! and a per-candidate deviation probability `delta` the probability that the
//! selected output deviates is at most `k * lambda^(N / (lambda k)) * delta`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskBound {
    pub bound: f64,
    /// `min(bound, 1)`, the value worth reporting as a probability.
    pub clipped: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiskError {
    #[error("{name} must be positive and finite (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("delta must lie in (0, 1] (got {0})")]
    Delta(f64),
}

pub fn risk_bound(k: f64, lambda: f64, n: f64, delta: f64) -> Result<RiskBound, RiskError> {
    for (name, value) in [("k", k), ("lambda", lambda), ("N", n)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(RiskError::NonPositive { name, value });
        }
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(RiskError::Delta(delta));
    }
    let bound = k * lambda.powf(n / (lambda * k)) * delta;
    Ok(RiskBound { bound, clipped: bound.min(1.0) })
}
