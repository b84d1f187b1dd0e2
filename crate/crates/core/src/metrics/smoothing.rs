use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::MetricError;

/// Moving average of the most recent `window` raw losses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedLoss {
    window: usize,
    recent: VecDeque<f64>,
}

impl SmoothedLoss {
    pub const DEFAULT_WINDOW: usize = 8;

    pub fn new(window: usize) -> Result<Self, MetricError> {
        if window == 0 {
            return Err(MetricError::ZeroWindow);
        }
        Ok(Self { window, recent: VecDeque::with_capacity(window) })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Adds a raw value and returns the updated average.
    pub fn push(&mut self, raw: f64) -> f64 {
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(raw);
        self.value().expect("just pushed")
    }

    /// `None` until the first value arrives.
    pub fn value(&self) -> Option<f64> {
        if self.recent.is_empty() {
            None
        } else {
            Some(self.recent.iter().sum::<f64>() / self.recent.len() as f64)
        }
    }
}

impl Default for SmoothedLoss {
    fn default() -> Self {
        Self::new(Self::DEFAULT_WINDOW).expect("positive window")
    }
}
