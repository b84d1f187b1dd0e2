//! Two inference constants on a noisy plateau landscape.
//!
//! The underlying loss is `0.3 + 0.05 * floor(|p - p*| / 0.1)`: flat rings
//! around an optimum `p*` drawn from `[0.2, 0.6]^2`, away from the default
//! point (0.9, 0.1). Each validation evaluation adds fresh `N(0, 0.05^2)`
//! noise; the test loss adds an independent, fixed per-genome draw.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{DrawCounter, RetrofitTask, TEST, VALIDATION};
use crate::domain::{Domain, Genome};
use crate::harness::{LossOracle, OracleError};
use crate::seed;

pub const DEFAULT_POINT: [f64; 2] = [0.9, 0.1];
pub const NOISE_SD: f64 = 0.05;
const FLOOR: f64 = 0.3;
const STEP: f64 = 0.05;
const RING_WIDTH: f64 = 0.1;

#[derive(Clone, Copy, Debug)]
struct Landscape {
    optimum: [f64; 2],
}

impl Landscape {
    fn value(&self, p: &[f64]) -> f64 {
        let d = ((p[0] - self.optimum[0]).powi(2) + (p[1] - self.optimum[1]).powi(2)).sqrt();
        FLOOR + STEP * (d / RING_WIDTH).floor()
    }
}

#[derive(Debug)]
pub struct TwoConstantValidation {
    landscape: Landscape,
    noise_seed: u64,
    noise: bool,
    draws: DrawCounter,
}

impl LossOracle for TwoConstantValidation {
    fn evaluate(&self, genome: &Genome) -> Result<f64, OracleError> {
        if genome.len() != 2 {
            return Err(OracleError(format!("expected 2 parameters, got {}", genome.len())));
        }
        let clean = self.landscape.value(&genome.values);
        if !self.noise {
            return Ok(clean);
        }
        let draw = self.draws.next(genome);
        let mut rng = seed::rng(self.noise_seed, &[VALIDATION, genome.fingerprint(), draw]);
        Ok(clean + Normal::new(0.0, NOISE_SD).expect("positive sd").sample(&mut rng))
    }
}

#[derive(Debug)]
pub struct TwoConstantTask {
    domain: Domain,
    validation: TwoConstantValidation,
}

impl TwoConstantTask {
    /// Landscape and noise streams both derived from `seed`.
    pub fn new(seed: u64) -> Self {
        let mut rng = seed::rng(seed, &[0]);
        let optimum = [rng.random_range(0.2..0.6), rng.random_range(0.2..0.6)];
        let domain = Domain::continuous(vec![0.0, 0.0], vec![1.0, 1.0], DEFAULT_POINT.to_vec()).expect("valid box");
        let validation =
            TwoConstantValidation { landscape: Landscape { optimum }, noise_seed: seed, noise: true, draws: DrawCounter::default() };
        Self { domain, validation }
    }

    /// Same landscape, independent noise streams.
    pub fn with_noise_seed(mut self, noise_seed: u64) -> Self {
        self.validation.noise_seed = noise_seed;
        self.validation.draws = DrawCounter::default();
        self
    }

    pub fn with_noise(mut self, noise: bool) -> Self {
        self.validation.noise = noise;
        self
    }

    pub fn optimum(&self) -> Genome {
        Genome::new(self.validation.landscape.optimum.to_vec())
    }

    /// Noise-free loss.
    pub fn landscape(&self, genome: &Genome) -> f64 {
        self.validation.landscape.value(&genome.values)
    }
}

impl RetrofitTask for TwoConstantTask {
    fn name(&self) -> &'static str {
        "two-constant"
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn noisy(&self) -> bool {
        self.validation.noise
    }

    fn baseline_loss(&self) -> f64 {
        self.landscape(&self.domain.neutral())
    }

    fn validation(&self) -> &dyn LossOracle {
        &self.validation
    }

    fn test_loss(&self, genome: &Genome) -> f64 {
        if genome.len() != 2 {
            return f64::INFINITY;
        }
        let clean = self.landscape(genome);
        if !self.validation.noise {
            return clean;
        }
        let mut rng = seed::rng(self.validation.noise_seed, &[TEST, genome.fingerprint()]);
        clean + Normal::new(0.0, NOISE_SD).expect("positive sd").sample(&mut rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_off_baseline_is_fixed() {
        let t = TwoConstantTask::new(3).with_noise(false);
        let g = t.domain().neutral();
        assert_eq!(g.values, DEFAULT_POINT.to_vec());
        let v = t.validation().evaluate(&g).unwrap();
        assert_eq!(v, t.baseline_loss());
        assert_eq!(v, t.validation().evaluate(&g).unwrap());
        assert_eq!(t.test_loss(&g), v);
    }

    #[test]
    fn optimum_beats_baseline() {
        for seed in 0..50 {
            let t = TwoConstantTask::new(seed);
            assert_eq!(t.landscape(&t.optimum()), FLOOR);
            assert!(t.landscape(&t.optimum()) < t.baseline_loss());
        }
    }

    #[test]
    fn noise_has_the_stated_spread() {
        let t = TwoConstantTask::new(9);
        let g = t.domain().neutral();
        let xs: Vec<f64> = (0..4000).map(|_| t.validation().evaluate(&g).unwrap() - t.baseline_loss()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
        assert!(mean.abs() < 0.005);
        assert!((sd - NOISE_SD).abs() < 0.005);
    }

    #[test]
    fn replicas_share_the_landscape_not_the_noise() {
        let a = TwoConstantTask::new(1).with_noise_seed(10);
        let b = TwoConstantTask::new(1).with_noise_seed(11);
        let g = a.domain().neutral();
        assert_eq!(a.baseline_loss(), b.baseline_loss());
        assert_ne!(a.validation().evaluate(&g).unwrap(), b.validation().evaluate(&g).unwrap());
    }
}
