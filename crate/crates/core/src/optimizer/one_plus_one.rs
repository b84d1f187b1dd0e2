//! Single-parent elitist optimizers.
//!
//! - `Standard`: on continuous domains every coordinate takes a Gaussian step
//!   whose scale follows the one-fifth rule (x2 on success, x2^(-1/4) on
//!   failure); on discrete domains `max(1, Binomial(d, 1/d))` coordinates
//!   are resampled.
//! - `Lengler`: at iteration `t`, `max(1, floor(d / (t + 1)))` coordinates are
//!   resampled.
//! - `Optimistic`: discrete-style mutation; re-evaluation of the incumbent is
//!   scheduled by the owning optimizer.
//!
//! A child replaces the incumbent when its loss is lower or equal.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::domain::{Candidate, Domain, DomainError, Genome};

const STEP_GROWTH: f64 = 2.0;
const MIN_STEP: f64 = 1e-12;
const MAX_STEP: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub(super) enum Variant {
    Standard,
    Lengler,
    Optimistic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(super) struct OnePlusOneState {
    variant: Variant,
    start: Genome,
    start_asked: bool,
    pub(super) incumbent: Option<Candidate>,
    /// Multiplier on the domain's default sigma (Standard variant, continuous).
    step: f64,
}

/// Number of coordinates touched by a standard bit-flip style mutation.
fn binomial_count(dim: usize, rng: &mut ChaCha8Rng) -> usize {
    let p = 1.0 / dim as f64;
    let n = Binomial::new(dim as u64, p).map(|b| b.sample(rng)).unwrap_or(1);
    (n as usize).max(1)
}

/// Lengler schedule: `max(1, floor(d / (t + 1)))`.
pub(super) fn lengler_count(dim: usize, t: usize) -> usize {
    (dim / (t + 1)).max(1)
}

impl OnePlusOneState {
    pub(super) fn new(variant: Variant, domain: &Domain, rng: &mut ChaCha8Rng) -> Self {
        let start = if domain.is_discrete() { domain.sample_uniform(rng) } else { domain.neutral() };
        Self { variant, start, start_asked: false, incumbent: None, step: 1.0 }
    }

    pub(super) fn propose(
        &mut self,
        domain: &Domain,
        t: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Genome, Vec<u64>), DomainError> {
        if self.incumbent.is_none() && !self.start_asked {
            self.start_asked = true;
            return Ok((self.start.clone(), vec![]));
        }
        let (parent, parents) = match &self.incumbent {
            Some(c) => (&c.genome, vec![c.uid]),
            None => (&self.start, vec![]),
        };
        let dim = domain.dim();
        let child = match self.variant {
            Variant::Standard if !domain.is_discrete() => {
                domain.mutate_coordinates(parent, dim, self.step, rng)?
            }
            Variant::Lengler => domain.mutate_coordinates(parent, lengler_count(dim, t), 1.0, rng)?,
            Variant::Standard | Variant::Optimistic => {
                let n = binomial_count(dim, rng);
                domain.mutate_coordinates(parent, n, 1.0, rng)?
            }
        };
        Ok((child, parents))
    }

    pub(super) fn observe(&mut self, candidate: Candidate, reevaluation: bool) {
        if reevaluation {
            if let Some(inc) = &mut self.incumbent {
                if inc.genome == candidate.genome {
                    inc.loss = candidate.loss;
                    inc.eval_count = candidate.eval_count;
                }
            }
            return;
        }
        let loss = candidate.loss.unwrap_or(f64::INFINITY);
        let success = match &self.incumbent {
            None => true,
            Some(inc) => loss <= inc.loss.unwrap_or(f64::INFINITY),
        };
        if success {
            self.incumbent = Some(candidate);
        }
        if self.variant == Variant::Standard {
            let factor = if success { STEP_GROWTH } else { STEP_GROWTH.powf(-0.25) };
            self.step = (self.step * factor).clamp(MIN_STEP, MAX_STEP);
        }
    }

    #[cfg(test)]
    pub(super) fn step(&self) -> f64 {
        self.step
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengler_schedule_decays_to_one() {
        assert_eq!(lengler_count(20, 0), 20);
        assert_eq!(lengler_count(20, 1), 10);
        assert_eq!(lengler_count(20, 3), 5);
        assert_eq!(lengler_count(20, 19), 1);
        assert_eq!(lengler_count(20, 1000), 1);
        assert_eq!(lengler_count(1, 0), 1);
    }

    #[test]
    fn binomial_count_is_at_least_one() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for dim in [1, 2, 10, 100] {
            for _ in 0..200 {
                let n = binomial_count(dim, &mut rng);
                assert!((1..=dim).contains(&n));
            }
        }
    }
}
