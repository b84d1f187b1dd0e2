//! Hidden-state rescaling between a frozen encoder and decoder.
//!
//! The encoder sums token embeddings (dimension 32); its output has been
//! corrupted by a fixed per-coordinate factor `1/c`. The greedy decoder emits,
//! at step `t`, the token whose prototype is nearest to `h ⊙ g_t + p_t`.
//! Retrofitting multiplies the hidden state by `s`; `s = c` restores the
//! clean model, whose outputs are the references.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{RetrofitTask, TEST, VALIDATION};
use crate::domain::{Domain, Genome};
use crate::harness::{LossOracle, OracleError};
use crate::metrics::bleu;
use crate::seed;

pub const HIDDEN: usize = 32;
pub const VOCAB: usize = 24;
pub const VALIDATION_PAIRS: usize = 50;
pub const TEST_PAIRS: usize = 100;
const MIN_LEN: usize = 4;
const MAX_LEN: usize = 8;
const POSITION_WEIGHT: f64 = 0.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeqLoss {
    /// `1 - mean sentence BLEU`.
    #[default]
    Bleu,
    /// `1 - fraction of outputs equal to their reference`.
    ExactMatch,
}

impl std::str::FromStr for SeqLoss {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bleu" => Ok(SeqLoss::Bleu),
            "exact-match" => Ok(SeqLoss::ExactMatch),
            _ => Err(format!("unknown sequence loss {s:?} (expected bleu or exact-match)")),
        }
    }
}

#[derive(Debug)]
struct Model {
    embeddings: Vec<Vec<f64>>,
    prototypes: Vec<Vec<f64>>,
    gates: Vec<Vec<f64>>,
    positions: Vec<Vec<f64>>,
    corruption: Vec<f64>,
}

impl Model {
    fn encode(&self, source: &[u32]) -> Vec<f64> {
        let norm = (source.len() as f64).sqrt();
        (0..HIDDEN)
            .map(|j| source.iter().map(|&t| self.embeddings[t as usize][j]).sum::<f64>() / norm / self.corruption[j])
            .collect()
    }

    fn decode(&self, hidden: &[f64], len: usize) -> Vec<u32> {
        (0..len)
            .map(|t| {
                let query: Vec<f64> = (0..HIDDEN)
                    .map(|j| hidden[j] * self.gates[t][j] + POSITION_WEIGHT * self.positions[t][j])
                    .collect();
                let mut best = (f64::INFINITY, 0u32);
                for (v, p) in self.prototypes.iter().enumerate() {
                    let d: f64 = p.iter().zip(&query).map(|(a, b)| (a - b).powi(2)).sum();
                    if d < best.0 {
                        best = (d, v as u32);
                    }
                }
                best.1
            })
            .collect()
    }

    fn translate(&self, source: &[u32], scale: &[f64]) -> Vec<u32> {
        let hidden: Vec<f64> = self.encode(source).iter().zip(scale).map(|(h, s)| h * s).collect();
        self.decode(&hidden, source.len())
    }
}

#[derive(Debug)]
pub struct SeqSplit {
    model: std::sync::Arc<Model>,
    sources: Vec<Vec<u32>>,
    references: Vec<Vec<u32>>,
    loss: SeqLoss,
}

impl SeqSplit {
    fn loss(&self, genome: &Genome) -> Result<f64, OracleError> {
        if genome.len() != HIDDEN {
            return Err(OracleError(format!("expected {HIDDEN} parameters, got {}", genome.len())));
        }
        let mut score = 0.0;
        for (src, reference) in self.sources.iter().zip(&self.references) {
            let out = self.model.translate(src, &genome.values);
            score += match self.loss {
                SeqLoss::Bleu => bleu(&out, reference).map_err(|e| OracleError(e.to_string()))?,
                SeqLoss::ExactMatch => f64::from(u8::from(out == *reference)),
            };
        }
        Ok(1.0 - score / self.sources.len() as f64)
    }
}

impl LossOracle for SeqSplit {
    fn evaluate(&self, genome: &Genome) -> Result<f64, OracleError> {
        self.loss(genome)
    }
}

#[derive(Debug)]
pub struct SeqRescaleTask {
    domain: Domain,
    validation: SeqSplit,
    test: SeqSplit,
    baseline: f64,
}

impl SeqRescaleTask {
    pub fn new(seed: u64, loss: SeqLoss) -> Self {
        let mut rng = seed::rng(seed, &[0]);
        let mut gaussian = |n: usize| -> Vec<Vec<f64>> {
            (0..n).map(|_| (0..HIDDEN).map(|_| StandardNormal.sample(&mut rng)).collect()).collect()
        };
        let embeddings = gaussian(VOCAB);
        let prototypes = gaussian(VOCAB);
        let gates = gaussian(MAX_LEN);
        let positions = gaussian(MAX_LEN);
        let corruption = (0..HIDDEN).map(|_| rng.random_range(-1.2f64..1.2).exp()).collect();
        let model = std::sync::Arc::new(Model { embeddings, prototypes, gates, positions, corruption });

        let split = |label: u64, n: usize| {
            let mut r = seed::rng(seed, &[label]);
            let sources: Vec<Vec<u32>> = (0..n)
                .map(|_| {
                    let len = r.random_range(MIN_LEN..=MAX_LEN);
                    (0..len).map(|_| r.random_range(0..VOCAB as u32)).collect()
                })
                .collect();
            let references = sources.iter().map(|s| model.translate(s, &model.corruption)).collect();
            SeqSplit { model: model.clone(), sources, references, loss }
        };
        let validation = split(VALIDATION, VALIDATION_PAIRS);
        let test = split(TEST, TEST_PAIRS);
        let domain = Domain::uniform_box(HIDDEN, 0.1, 10.0, 1.0).expect("valid box");
        let baseline = validation.loss(&domain.neutral()).expect("matching dimension");
        Self { domain, validation, test, baseline }
    }

    /// The scale `c` that undoes the corruption.
    pub fn planted_scale(&self) -> Genome {
        Genome::new(self.validation.model.corruption.clone())
    }
}

impl RetrofitTask for SeqRescaleTask {
    fn name(&self) -> &'static str {
        "seq-rescale"
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_scale_recovers_references() {
        for loss in [SeqLoss::Bleu, SeqLoss::ExactMatch] {
            let t = SeqRescaleTask::new(7, loss);
            let c = t.planted_scale();
            assert!(t.domain().contains(&c));
            assert_eq!(t.validation().evaluate(&c).unwrap(), 0.0);
            assert_eq!(t.test_loss(&c), 0.0);
            assert!(t.baseline_loss() > 0.0);
        }
    }

    #[test]
    fn baseline_is_deterministic() {
        assert_eq!(SeqRescaleTask::new(1, SeqLoss::Bleu).baseline_loss(), SeqRescaleTask::new(1, SeqLoss::Bleu).baseline_loss());
        assert_eq!("exact-match".parse::<SeqLoss>().unwrap(), SeqLoss::ExactMatch);
    }
}
