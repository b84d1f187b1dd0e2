//! Non-differentiable losses: threshold failure rate, word error rate,
//! sentence BLEU and a moving-average smoother for noisy episodic scores.

mod bleu;
mod smoothing;
mod threshold;
mod wer;

use thiserror::Error;

pub use bleu::{bleu, bleu_with_order, clipped_ngram_matches, BLEU_EPSILON};
pub use smoothing::SmoothedLoss;
pub use threshold::{threshold_failure_rate, ThresholdSpec};
pub use wer::{edit_distance, word_error_rate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("entry {index} is not strictly positive ({value})")]
    NonPositive { index: usize, value: f64 },
    #[error("the reference sequence is empty")]
    EmptyReference,
    #[error("threshold level must be 1, 2 or 3 (got {0})")]
    InvalidLevel(u8),
    #[error("smoothing window must be at least 1")]
    ZeroWindow,
}

/// Whitespace tokenization.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}
