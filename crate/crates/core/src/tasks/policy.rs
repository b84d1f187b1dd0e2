//! Action-head rescaling of a frozen policy under a noisy episodic score.
//!
//! The frozen policy outputs action probabilities `o(s)` over 35 actions.
//! Retrofitting multiplies them by `exp(r / scale)` and renormalizes, so a
//! constant shift of `r` leaves the policy unchanged. An episode in state `s`
//! scores `kills ~ Binomial(20, q)` and `deaths ~ 1 + Binomial(5, 1 - q)`,
//! where `q` is the overlap `sum_a min(pi(a), pi*(a))` with a hidden better
//! policy `pi* = normalize(o(s) * exp(r*))`. The raw loss is `-kills/deaths`;
//! a validation evaluation is the moving average of 8 episodes, which cycle
//! through the split's states.

use rand_distr::{Binomial, Distribution, Normal, StandardNormal};

use super::{DrawCounter, RetrofitTask, TEST, VALIDATION};
use crate::domain::{Domain, Genome};
use crate::harness::{LossOracle, OracleError};
use crate::metrics::SmoothedLoss;
use crate::seed;

pub const ACTIONS: usize = 35;
pub const STATES_PER_SPLIT: usize = 8;
pub const KILL_TRIALS: u64 = 20;
pub const DEATH_TRIALS: u64 = 5;
pub const EPISODES_PER_EVALUATION: usize = SmoothedLoss::DEFAULT_WINDOW;

fn normalize(weights: Vec<f64>) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// `normalize(o * exp(r / scale))`, computed in log space.
pub fn rescaled_policy(base: &[f64], r: &[f64], scale: f64) -> Vec<f64> {
    let logits: Vec<f64> = base.iter().zip(r).map(|(o, r)| o.ln() + r / scale).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    normalize(logits.into_iter().map(|l| (l - max).exp()).collect())
}

fn overlap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.min(*y)).sum::<f64>().clamp(0.0, 1.0)
}

/// `E[1 / (1 + Y)]` for `Y ~ Binomial(n, p)`.
fn mean_inverse_deaths(n: u64, p: f64) -> f64 {
    if p <= 0.0 {
        return 1.0;
    }
    let n1 = (n + 1) as f64;
    (1.0 - (1.0 - p).powf(n1)) / (n1 * p)
}

/// Expected raw loss `-E[kills / deaths]` of an episode with overlap `q`.
pub fn expected_episode_loss(q: f64) -> f64 {
    -(KILL_TRIALS as f64) * q * mean_inverse_deaths(DEATH_TRIALS, 1.0 - q)
}

#[derive(Debug)]
pub struct PolicySplit {
    label: u64,
    seed: u64,
    scale: f64,
    base: Vec<Vec<f64>>,
    target: Vec<Vec<f64>>,
    draws: DrawCounter,
}

impl PolicySplit {
    fn overlaps(&self, r: &[f64]) -> Vec<f64> {
        self.base.iter().zip(&self.target).map(|(o, t)| overlap(&rescaled_policy(o, r, self.scale), t)).collect()
    }

    fn expected_loss(&self, genome: &Genome) -> f64 {
        let q = self.overlaps(&genome.values);
        q.iter().map(|&q| expected_episode_loss(q)).sum::<f64>() / q.len() as f64
    }
}

impl LossOracle for PolicySplit {
    fn evaluate(&self, genome: &Genome) -> Result<f64, OracleError> {
        if genome.len() != ACTIONS {
            return Err(OracleError(format!("expected {ACTIONS} parameters, got {}", genome.len())));
        }
        let draw = self.draws.next(genome);
        let mut rng = seed::rng(self.seed, &[self.label, genome.fingerprint(), draw]);
        let q = self.overlaps(&genome.values);
        let mut smoothed = SmoothedLoss::default();
        let mut value = 0.0;
        for episode in 0..EPISODES_PER_EVALUATION {
            let state = episode % q.len();
            let kills = Binomial::new(KILL_TRIALS, q[state]).expect("q in [0,1]").sample(&mut rng);
            let deaths = 1 + Binomial::new(DEATH_TRIALS, 1.0 - q[state]).expect("q in [0,1]").sample(&mut rng);
            value = smoothed.push(-(kills as f64) / deaths as f64);
        }
        Ok(value)
    }
}

#[derive(Debug)]
pub struct PolicyTask {
    domain: Domain,
    scale_suffix: u32,
    hidden: Vec<f64>,
    validation: PolicySplit,
    test: PolicySplit,
    baseline: f64,
}

impl PolicyTask {
    /// `scale_suffix` in {1, 10, 100} divides `r` before exponentiation.
    pub fn new(seed: u64, scale_suffix: u32) -> Result<Self, String> {
        if ![1, 10, 100].contains(&scale_suffix) {
            return Err(format!("scale suffix must be 1, 10 or 100 (got {scale_suffix})"));
        }
        let mut rng = seed::rng(seed, &[0]);
        let spread = Normal::new(0.0, 0.7).expect("positive sd");
        let hidden: Vec<f64> = (0..ACTIONS).map(|_| f64::clamp(spread.sample(&mut rng), -3.0, 3.0)).collect();
        let scale = f64::from(scale_suffix);
        let mut split = |label: u64| {
            let base: Vec<Vec<f64>> = (0..STATES_PER_SPLIT)
                .map(|_| {
                    let logits: Vec<f64> = (0..ACTIONS).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); 1.5 * z }).collect();
                    rescaled_policy(&vec![1.0; ACTIONS], &logits, 1.0)
                })
                .collect();
            let target = base.iter().map(|o| rescaled_policy(o, &hidden, 1.0)).collect();
            PolicySplit { label, seed, scale, base, target, draws: DrawCounter::default() }
        };
        let validation = split(VALIDATION);
        let test = split(TEST);
        let domain = Domain::uniform_box(ACTIONS, -3.0, 3.0, 0.0).expect("valid box");
        let baseline = validation.expected_loss(&domain.neutral());
        Ok(Self { domain, scale_suffix, hidden, validation, test, baseline })
    }

    pub fn scale_suffix(&self) -> u32 {
        self.scale_suffix
    }

    /// Expected validation loss (noise-free).
    pub fn expected_validation_loss(&self, genome: &Genome) -> f64 {
        self.validation.expected_loss(genome)
    }

    /// The rescale that reproduces the hidden policy exactly (may lie outside
    /// the box for large suffixes).
    pub fn hidden_optimum(&self) -> Genome {
        Genome::new(self.hidden.iter().map(|h| h * f64::from(self.scale_suffix)).collect())
    }
}

impl RetrofitTask for PolicyTask {
    fn name(&self) -> &'static str {
        "policy"
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn noisy(&self) -> bool {
        true
    }

    fn baseline_loss(&self) -> f64 {
        self.baseline
    }

    fn validation(&self) -> &dyn LossOracle {
        &self.validation
    }

    fn test_loss(&self, genome: &Genome) -> f64 {
        if genome.len() != ACTIONS {
            return f64::INFINITY;
        }
        self.test.expected_loss(genome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
        let mut c = 1.0;
        for i in 0..k {
            c *= (n - i) as f64 / (i + 1) as f64;
        }
        c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
    }

    #[test]
    fn closed_form_matches_pmf_sum() {
        for q in [0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            let direct: f64 = (0..=DEATH_TRIALS).map(|d| binomial_pmf(DEATH_TRIALS, 1.0 - q, d) / (1 + d) as f64).sum();
            let expected = -(KILL_TRIALS as f64) * q * direct;
            assert!((expected_episode_loss(q) - expected).abs() < 1e-12, "{q}");
        }
    }

    #[test]
    fn zero_rescale_is_identity_and_shift_invariant() {
        let task = PolicyTask::new(1, 1).unwrap();
        for o in &task.validation.base {
            let same = rescaled_policy(o, &[0.0; ACTIONS], 1.0);
            for (a, b) in same.iter().zip(o) {
                assert!((a - b).abs() < 1e-12);
            }
            let r: Vec<f64> = (0..ACTIONS).map(|i| (i as f64 * 0.37).sin()).collect();
            let shifted: Vec<f64> = r.iter().map(|x| x + 1.25).collect();
            for (a, b) in rescaled_policy(o, &r, 1.0).iter().zip(rescaled_policy(o, &shifted, 1.0)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hidden_optimum_maximizes_overlap() {
        let task = PolicyTask::new(2, 1).unwrap();
        let best = task.hidden_optimum();
        assert!(task.domain().contains(&best));
        assert!((task.test_loss(&best) - expected_episode_loss(1.0)).abs() < 1e-9);
        assert!(task.test_loss(&best) < task.test_loss(&task.domain().neutral()));
    }

    #[test]
    fn noisy_but_reproducible_per_draw() {
        let a = PolicyTask::new(3, 10).unwrap();
        let b = PolicyTask::new(3, 10).unwrap();
        let g = a.domain().neutral();
        let xs: Vec<f64> = (0..5).map(|_| a.validation().evaluate(&g).unwrap()).collect();
        let ys: Vec<f64> = (0..5).map(|_| b.validation().evaluate(&g).unwrap()).collect();
        assert_eq!(xs, ys);
        assert!(xs.windows(2).any(|w| w[0] != w[1]));
        let mean = (0..400).map(|_| a.validation().evaluate(&g).unwrap()).sum::<f64>() / 400.0;
        assert!((mean - a.baseline_loss()).abs() < 0.15, "{mean} vs {}", a.baseline_loss());
    }

    #[test]
    fn invalid_suffix() {
        assert!(PolicyTask::new(0, 3).is_err());
    }
}
