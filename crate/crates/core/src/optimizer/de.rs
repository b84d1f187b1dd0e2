//! Asynchronous DE/rand/1/bin.
//!
//! The first `population` asks fill the population slots (slot 0 is the
//! domain's neutral point, the rest are uniform samples). Afterwards each ask
//! targets the next slot in round-robin order, builds `a + F (b - c)` from
//! three other distinct slots, applies binomial crossover with the target and
//! the trial replaces the target when its loss is lower or equal.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Origin;
use crate::domain::{Candidate, Domain, Genome};

pub(super) const DEFAULT_POPULATION: usize = 30;
pub(super) const DIFFERENTIAL_WEIGHT: f64 = 0.8;
pub(super) const CROSSOVER_RATE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(super) struct Slot {
    pub(super) uid: u64,
    pub(super) genome: Genome,
    #[serde(with = "crate::float_serde::option")]
    pub(super) loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(super) struct DeState {
    population: usize,
    pub(super) slots: Vec<Slot>,
    cursor: usize,
}

impl DeState {
    pub(super) fn new(population: Option<usize>) -> Self {
        Self { population: population.unwrap_or(DEFAULT_POPULATION), slots: Vec::new(), cursor: 0 }
    }

    pub(super) fn propose(
        &mut self,
        domain: &Domain,
        uid: u64,
        rng: &mut ChaCha8Rng,
    ) -> (Genome, Vec<u64>, Origin) {
        if self.slots.len() < self.population {
            let genome =
                if self.slots.is_empty() { domain.neutral() } else { domain.sample_uniform(rng) };
            let slot = self.slots.len();
            self.slots.push(Slot { uid, genome: genome.clone(), loss: None });
            return (genome, vec![], Origin::DeInit { slot });
        }
        let target = self.cursor;
        self.cursor = (self.cursor + 1) % self.population;

        // Three distinct donors, all different from the target.
        let picks = index::sample(rng, self.population - 1, 3);
        let donor = |k: usize| {
            let i = picks.index(k);
            if i >= target { i + 1 } else { i }
        };
        let (a, b, c) = (&self.slots[donor(0)], &self.slots[donor(1)], &self.slots[donor(2)]);
        let parent = &self.slots[target].genome.values;
        let dim = parent.len();
        let forced = rng.random_range(0..dim);
        let trial: Vec<f64> = (0..dim)
            .map(|j| {
                if j == forced || rng.random::<f64>() < CROSSOVER_RATE {
                    a.genome.values[j] + DIFFERENTIAL_WEIGHT * (b.genome.values[j] - c.genome.values[j])
                } else {
                    parent[j]
                }
            })
            .collect();
        let parents = vec![self.slots[target].uid, a.uid, b.uid, c.uid];
        (domain.repair(trial), parents, Origin::DeTrial { target })
    }

    pub(super) fn observe(&mut self, origin: &Origin, candidate: &Candidate) {
        let loss = candidate.loss.unwrap_or(f64::INFINITY);
        match *origin {
            Origin::DeInit { slot } => {
                let s = &mut self.slots[slot];
                if s.uid == candidate.uid {
                    s.loss = Some(loss);
                }
            }
            Origin::DeTrial { target } => {
                let s = &mut self.slots[target];
                if s.loss.is_none_or(|current| loss <= current) {
                    *s = Slot { uid: candidate.uid, genome: candidate.genome.clone(), loss: Some(loss) };
                }
            }
            _ => {}
        }
    }
}
