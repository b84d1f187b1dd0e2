//! Separable evolution strategy with per-coordinate step sizes.
//!
//! Population `lambda = 4 + floor(3 ln d)`, `mu = lambda / 2` parents with
//! log-rank weights. Each coordinate keeps its own evolution path and its own
//! sigma, adapted by cumulative step-size adaptation on that coordinate:
//! `sigma_i *= exp(c / (2 damp) * (p_i^2 - 1))`.
//!
//! Results are consumed in completion order: as soon as `lambda` losses are
//! available the distribution is updated from those samples.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{Candidate, Domain, Genome};

const SIGMA_FLOOR: f64 = 1e-12;
const SIGMA_CEIL: f64 = 1e3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Told {
    #[serde(with = "crate::float_serde")]
    loss: f64,
    x: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(super) struct EsState {
    lambda: usize,
    weights: Vec<f64>,
    mu_eff: f64,
    c_sigma: f64,
    damping: f64,
    pub(super) mean: Vec<f64>,
    pub(super) sigma: Vec<f64>,
    path: Vec<f64>,
    initial_sigma: Vec<f64>,
    told: Vec<Told>,
    pub(super) generation: usize,
}

pub(super) fn default_lambda(dim: usize) -> usize {
    4 + (3.0 * (dim as f64).ln()).floor() as usize
}

impl EsState {
    pub(super) fn new(domain: &Domain, population: Option<usize>) -> Self {
        let dim = domain.dim();
        let lambda = population.unwrap_or_else(|| default_lambda(dim));
        let mu = (lambda / 2).max(1);
        let raw: Vec<f64> = (1..=mu).map(|i| ((mu as f64) + 0.5).ln() - (i as f64).ln()).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let n = dim as f64;
        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let damping = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let initial_sigma = domain.default_sigma();
        Self {
            lambda,
            weights,
            mu_eff,
            c_sigma,
            damping,
            mean: domain.neutral().values,
            sigma: initial_sigma.clone(),
            path: vec![0.0; dim],
            initial_sigma,
            told: Vec::new(),
            generation: 0,
        }
    }

    pub(super) fn propose(&mut self, domain: &Domain, rng: &mut ChaCha8Rng) -> Genome {
        let values = self
            .mean
            .iter()
            .zip(&self.sigma)
            .map(|(m, s)| { let z: f64 = StandardNormal.sample(rng); m + s * z })
            .collect::<Vec<f64>>();
        domain.repair(values)
    }

    pub(super) fn observe(&mut self, domain: &Domain, candidate: &Candidate) {
        let loss = candidate.loss.unwrap_or(f64::INFINITY);
        self.told.push(Told { loss, x: candidate.genome.values.clone() });
        if self.told.len() >= self.lambda {
            self.update(domain);
        }
    }

    fn update(&mut self, domain: &Domain) {
        let mut batch = std::mem::take(&mut self.told);
        // Stable sort keeps completion order among ties.
        batch.sort_by(|a, b| a.loss.total_cmp(&b.loss));
        let dim = self.mean.len();
        let mut step = vec![0.0; dim];
        for (w, Told { x, .. }) in self.weights.iter().zip(&batch) {
            for j in 0..dim {
                step[j] += w * (x[j] - self.mean[j]) / self.sigma[j];
            }
        }
        let norm = (self.c_sigma * (2.0 - self.c_sigma) * self.mu_eff).sqrt();
        for j in 0..dim {
            self.mean[j] += self.sigma[j] * step[j];
            self.path[j] = (1.0 - self.c_sigma) * self.path[j] + norm * step[j];
            let change = (self.c_sigma / (2.0 * self.damping)) * (self.path[j] * self.path[j] - 1.0);
            let s = self.sigma[j] * change.exp();
            let base = self.initial_sigma[j].max(f64::MIN_POSITIVE);
            self.sigma[j] = if s.is_finite() { s.clamp(SIGMA_FLOOR * base, SIGMA_CEIL * base) } else { base };
        }
        // Keep the mean inside the box without rounding discrete coordinates.
        let clamped = domain.repair(self.mean.clone());
        if !domain.is_discrete() {
            self.mean = clamped.values;
        } else {
            let neutral = domain.neutral();
            for (j, m) in self.mean.iter_mut().enumerate() {
                if !m.is_finite() {
                    *m = neutral.values[j];
                }
            }
        }
        self.generation += 1;
    }
}
