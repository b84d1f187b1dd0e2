//! Sentence-level BLEU against a single reference.
//!
//! `BP * exp(mean_n ln p_n)` for `n = 1..=N`, where `p_n` is the clipped
//! n-gram precision, zero match counts are replaced by `BLEU_EPSILON`,
//! `BP = exp(min(0, 1 - |ref| / |cand|))` and `N = min(max_n, |cand|)`.

use std::collections::HashMap;
use std::hash::Hash;

use super::MetricError;

pub const BLEU_EPSILON: f64 = 1e-9;

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Candidate n-grams matched in the reference, each clipped to its reference count.
pub fn clipped_ngram_matches<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> usize {
    if n == 0 || candidate.len() < n {
        return 0;
    }
    let reference_counts = ngram_counts(reference, n);
    ngram_counts(candidate, n)
        .into_iter()
        .map(|(gram, count)| count.min(reference_counts.get(gram).copied().unwrap_or(0)))
        .sum()
}

pub fn bleu<T: Eq + Hash>(candidate: &[T], reference: &[T]) -> Result<f64, MetricError> {
    bleu_with_order(candidate, reference, 4)
}

pub fn bleu_with_order<T: Eq + Hash>(candidate: &[T], reference: &[T], max_n: usize) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let order = max_n.min(candidate.len());
    if order == 0 {
        return Ok(0.0);
    }
    let log_sum: f64 = (1..=order)
        .map(|n| {
            let total = candidate.len() + 1 - n;
            let matches = clipped_ngram_matches(candidate, reference, n);
            let p = if matches == 0 { BLEU_EPSILON } else { matches as f64 / total as f64 };
            p.ln()
        })
        .sum();
    let brevity = (1.0 - reference.len() as f64 / candidate.len() as f64).min(0.0).exp();
    Ok((brevity * (log_sum / order as f64).exp()).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_disjoint() {
        let r: Vec<u32> = (0..10).collect();
        assert_eq!(bleu(&r, &r).unwrap(), 1.0);
        let d: Vec<u32> = (100..110).collect();
        assert!(bleu(&d, &r).unwrap() <= BLEU_EPSILON * (1.0 + 1e-12));
        assert_eq!(bleu::<u32>(&[], &r).unwrap(), 0.0);
        assert_eq!(bleu::<u32>(&r, &[]), Err(MetricError::EmptyReference));
    }

    #[test]
    fn dropped_last_token() {
        // 9 of 10 tokens, all n-grams match: p_n = 1, BP = exp(1 - 10/9).
        let r: Vec<u32> = (0..10).collect();
        let c = &r[..9];
        let expected = (1.0f64 - 10.0 / 9.0).exp();
        assert!((bleu(c, &r).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn short_candidate_uses_its_length_as_order() {
        let r = ["a", "b", "c", "d", "e"];
        let c = ["a", "b"];
        let expected = (1.0f64 - 5.0 / 2.0).exp();
        assert!((bleu(&c, &r).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn clipping() {
        let r = ["the", "cat"];
        let c = ["the", "the", "the"];
        assert_eq!(clipped_ngram_matches(&c, &r, 1), 1);
        assert_eq!(clipped_ngram_matches(&c, &r, 2), 0);
        assert_eq!(clipped_ngram_matches(&c, &r, 4), 0);
    }
}
