use serde::{Deserialize, Serialize};

use super::MetricError;

/// Failure threshold `1.25^level`, level in {1, 2, 3}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    level: u8,
}

impl ThresholdSpec {
    pub fn new(level: u8) -> Result<Self, MetricError> {
        if (1..=3).contains(&level) {
            Ok(Self { level })
        } else {
            Err(MetricError::InvalidLevel(level))
        }
    }

    pub fn level(self) -> u8 {
        self.level
    }

    pub fn ratio(self) -> f64 {
        1.25f64.powi(i32::from(self.level))
    }
}

/// Fraction of entries where `max(pred / truth, truth / pred)` exceeds the
/// threshold ratio.
pub fn threshold_failure_rate(pred: &[f64], truth: &[f64], spec: ThresholdSpec) -> Result<f64, MetricError> {
    if pred.len() != truth.len() {
        return Err(MetricError::LengthMismatch { left: pred.len(), right: truth.len() });
    }
    for (index, &value) in pred.iter().chain(truth).enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(MetricError::NonPositive { index: index % pred.len().max(1), value });
        }
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let ratio = spec.ratio();
    let failures = pred.iter().zip(truth).filter(|(p, t)| (*p / *t).max(*t / *p) > ratio).count();
    Ok(failures as f64 / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn ratios() {
        assert_eq!(ThresholdSpec::new(1).unwrap().ratio(), 1.25);
        assert_eq!(ThresholdSpec::new(2).unwrap().ratio(), 1.5625);
        assert_eq!(ThresholdSpec::new(3).unwrap().ratio(), 1.953125);
        assert_eq!(ThresholdSpec::new(0), Err(MetricError::InvalidLevel(0)));
        assert_eq!(ThresholdSpec::new(4), Err(MetricError::InvalidLevel(4)));
    }

    #[test]
    fn examples() {
        let truth = [0.5, 1.0, 2.0, 7.5];
        let scaled: Vec<f64> = truth.iter().map(|t| 1.3 * t).collect();
        let l = |i| ThresholdSpec::new(i).unwrap();
        assert_eq!(threshold_failure_rate(&truth, &truth, l(1)).unwrap(), 0.0);
        assert_eq!(threshold_failure_rate(&scaled, &truth, l(1)).unwrap(), 1.0);
        assert_eq!(threshold_failure_rate(&scaled, &truth, l(2)).unwrap(), 0.0);
        assert_eq!(threshold_failure_rate(&[2.0, 1.0], &[1.0, 1.0], l(2)).unwrap(), 0.5);
    }

    #[test]
    fn errors() {
        let l = ThresholdSpec::new(1).unwrap();
        assert!(matches!(threshold_failure_rate(&[1.0], &[1.0, 2.0], l), Err(MetricError::LengthMismatch { .. })));
        assert!(matches!(threshold_failure_rate(&[0.0], &[1.0], l), Err(MetricError::NonPositive { .. })));
        assert!(matches!(threshold_failure_rate(&[1.0], &[-2.0], l), Err(MetricError::NonPositive { .. })));
    }

    proptest! {
        #[test]
        fn symmetric_and_scale_invariant(
            pairs in prop::collection::vec((0.01f64..100.0, 0.01f64..100.0), 1..40),
            scale in prop::sample::select(vec![0.25, 0.5, 2.0, 4.0, 1024.0]),
            level in 1u8..=3,
        ) {
            let spec = ThresholdSpec::new(level).unwrap();
            let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let a = threshold_failure_rate(&p, &t, spec).unwrap();
            prop_assert_eq!(a, threshold_failure_rate(&t, &p, spec).unwrap());
            let ps: Vec<f64> = p.iter().map(|x| x * scale).collect();
            let ts: Vec<f64> = t.iter().map(|x| x * scale).collect();
            prop_assert_eq!(a, threshold_failure_rate(&ps, &ts, spec).unwrap());
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
