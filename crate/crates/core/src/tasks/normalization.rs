//! Input normalization retrofit.
//!
//! The frozen small model maps a 3-channel signal `x` to
//! `softplus(M (a * x + b))`; the six parameters are the per-channel scale
//! `a` and bias `b`. The teacher applies its own mix matrix to its own
//! planted normalization `(a*, b*)`. The loss is the fraction of output
//! entries whose ratio to the teacher exceeds `1.25^level`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{softplus, RetrofitTask, TEST, VALIDATION};
use crate::domain::{Domain, Genome};
use crate::harness::{LossOracle, OracleError};
use crate::metrics::{threshold_failure_rate, MetricError, ThresholdSpec};
use crate::seed;

pub const VALIDATION_SIZE: usize = 300;
pub const TEST_SIZE: usize = 500;

type Mix = [[f64; 3]; 3];

fn random_mix(rng: &mut ChaCha8Rng, spread: f64, base: &Mix) -> Mix {
    let mut m = *base;
    for row in &mut m {
        for v in row.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v += spread * z;
        }
    }
    m
}

fn forward(mix: &Mix, scale: &[f64], bias: &[f64], x: &[f64; 3]) -> [f64; 3] {
    let h: Vec<f64> = (0..3).map(|c| scale[c] * x[c] + bias[c]).collect();
    std::array::from_fn(|r| softplus(mix[r].iter().zip(&h).map(|(m, v)| m * v).sum()))
}

#[derive(Debug)]
pub struct NormalizationSplit {
    mix: Mix,
    signals: Vec<[f64; 3]>,
    truth: Vec<f64>,
    spec: ThresholdSpec,
}

impl NormalizationSplit {
    fn outputs(&self, genome: &Genome) -> Vec<f64> {
        let (scale, bias) = genome.values.split_at(3);
        self.signals.iter().flat_map(|x| forward(&self.mix, scale, bias, x)).collect()
    }

    fn loss(&self, genome: &Genome) -> Result<f64, OracleError> {
        if genome.len() != 6 {
            return Err(OracleError(format!("expected 6 parameters, got {}", genome.len())));
        }
        threshold_failure_rate(&self.outputs(genome), &self.truth, self.spec).map_err(|e| OracleError(e.to_string()))
    }
}

impl LossOracle for NormalizationSplit {
    fn evaluate(&self, genome: &Genome) -> Result<f64, OracleError> {
        self.loss(genome)
    }
}

#[derive(Debug)]
pub struct NormalizationTask {
    domain: Domain,
    optimum: Genome,
    validation: NormalizationSplit,
    test: NormalizationSplit,
    baseline: f64,
}

impl NormalizationTask {
    /// Teacher with a different mix than the small model.
    pub fn new(seed: u64, level: u8) -> Result<Self, MetricError> {
        Self::build(seed, level, false)
    }

    /// Teacher equal to the small model at `(a*, b*)`, so that the planted
    /// optimum has loss 0.
    pub fn planted(seed: u64, level: u8) -> Result<Self, MetricError> {
        Self::build(seed, level, true)
    }

    fn build(seed: u64, level: u8, planted: bool) -> Result<Self, MetricError> {
        let spec = ThresholdSpec::new(level)?;
        let mut rng = seed::rng(seed, &[0]);
        let identity: Mix = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let small = random_mix(&mut rng, 0.3, &identity);
        let teacher_mix = if planted { small } else { random_mix(&mut rng, 0.15, &small) };
        let a_star: Vec<f64> = (0..3).map(|_| 2f64.powf(rng.random_range(-1.0..1.0))).collect();
        let b_star: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..0.5)).collect();

        let split = |label: u64, n: usize| {
            let mut r = seed::rng(seed, &[label]);
            let signals: Vec<[f64; 3]> = (0..n).map(|_| std::array::from_fn(|_| StandardNormal.sample(&mut r))).collect();
            let truth = signals.iter().flat_map(|x| forward(&teacher_mix, &a_star, &b_star, x)).collect();
            NormalizationSplit { mix: small, signals, truth, spec }
        };
        let validation = split(VALIDATION, VALIDATION_SIZE);
        let test = split(TEST, TEST_SIZE);
        let domain = Domain::continuous(
            vec![0.25, 0.25, 0.25, -1.0, -1.0, -1.0],
            vec![4.0, 4.0, 4.0, 1.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0],
        )
        .expect("valid box");
        let baseline = validation.loss(&domain.neutral()).expect("six parameters");
        let optimum = Genome::new(a_star.into_iter().chain(b_star).collect());
        Ok(Self { domain, optimum, validation, test, baseline })
    }

    /// The teacher's normalization `(a*, b*)`.
    pub fn planted_optimum(&self) -> &Genome {
        &self.optimum
    }
}

impl RetrofitTask for NormalizationTask {
    fn name(&self) -> &'static str {
        "normalization"
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn noisy(&self) -> bool {
        false
    }

    fn baseline_loss(&self) -> f64 {
        self.baseline
    }

    fn validation(&self) -> &dyn LossOracle {
        &self.validation
    }

    fn test_loss(&self, genome: &Genome) -> f64 {
        self.test.loss(genome).unwrap_or(f64::INFINITY)
    }
}
