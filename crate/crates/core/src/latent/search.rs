//! Latent search against a surrogate.
//!
//! Random search draws standard-normal latents until the surrogate predicts a
//! zero bad probability. The evolutionary variant keeps a starting latent
//! `z0` and minimizes `x -> P(bad | z0 + epsilon x)` from `x = 0` with the
//! wizard-selected optimizer, stopping as soon as the loss drops below 1e-5.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{tree_predict_bad, LatentError, LatentShape, LatentTensor, SurrogateModel};
use crate::domain::Genome;
use crate::optimizer::{wizard_select, Optimizer};

pub const EVOLVE_STOP_LOSS: f64 = 1e-5;

/// Returns the first draw predicted good and the number of draws used.
pub fn latent_random_search<R: Rng + ?Sized>(
    model: &SurrogateModel,
    shape: LatentShape,
    rng: &mut R,
    max_draws: usize,
) -> Result<(LatentTensor, usize), LatentError> {
    if max_draws == 0 {
        return Err(LatentError::NonPositive("max_draws"));
    }
    for draw in 1..=max_draws {
        let z = LatentTensor::standard_normal(shape, rng)?;
        if tree_predict_bad(model, z.values())? == 0.0 {
            return Ok((z, draw));
        }
    }
    Err(LatentError::Exhausted { draws: max_draws })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOutcome {
    /// `z0 + epsilon * x`.
    pub latent: LatentTensor,
    /// The recommended perturbation `x`.
    pub x: Genome,
    pub loss: f64,
    pub evaluations: usize,
}

pub fn latent_evolve(
    model: &SurrogateModel,
    z0: &LatentTensor,
    epsilon: f64,
    budget: usize,
    seed: u64,
) -> Result<EvolveOutcome, LatentError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(LatentError::NonPositive("epsilon"));
    }
    if budget == 0 {
        return Err(LatentError::NonPositive("budget"));
    }
    let shape = z0.shape();
    if model.dim != shape.len() {
        return Err(LatentError::DimensionMismatch { expected: model.dim, got: shape.len() });
    }
    let domain = shape.domain();
    let spec = wizard_select(&domain, budget, 1, false);
    let mut optimizer = Optimizer::new(spec, domain, seed).expect("wizard returns a valid spec");
    let loss = |x: &Genome| -> f64 {
        let z: Vec<f64> = z0.values().iter().zip(&x.values).map(|(a, b)| a + epsilon * b).collect();
        tree_predict_bad(model, &z).expect("dimension checked")
    };

    let start = optimizer.suggest(Genome::zeros(shape.len()), vec![]).expect("first ask fits the budget");
    let mut last = loss(&start.genome);
    optimizer.tell(start.uid, last).expect("in flight");
    let mut evaluations = 1;
    while last >= EVOLVE_STOP_LOSS && evaluations < budget {
        let c = optimizer.ask().expect("budget and parallelism respected");
        last = loss(&c.genome);
        optimizer.tell(c.uid, last).expect("in flight");
        evaluations += 1;
    }
    let best = optimizer.recommend().expect("at least one finite evaluation");
    let values = z0.values().iter().zip(&best.genome.values).map(|(a, b)| a + epsilon * b).collect();
    Ok(EvolveOutcome {
        latent: LatentTensor::new(shape, values)?,
        loss: best.loss.unwrap_or(f64::INFINITY),
        x: best.genome,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latent::{tree_fit, Label, TreeNode};

    fn half_space(shape: LatentShape) -> SurrogateModel {
        let bad = TreeNode::Leaf { bad: 1, total: 1 };
        let good = TreeNode::Leaf { bad: 0, total: 1 };
        SurrogateModel {
            dim: shape.len(),
            root: TreeNode::Split { feature: 0, threshold: 0.0, left: Box::new(good), right: Box::new(bad) },
        }
    }

    #[test]
    fn all_good_returns_first_draw() {
        let shape = LatentShape::new(2, 2, 1);
        let m = tree_fit(&[vec![0.0; 4]], &[Label::Good]).unwrap();
        let mut rng = crate::seed::rng(0, &[]);
        assert_eq!(latent_random_search(&m, shape, &mut rng, 10).unwrap().1, 1);
        let m = tree_fit(&[vec![0.0; 4]], &[Label::Bad]).unwrap();
        assert_eq!(latent_random_search(&m, shape, &mut rng, 10), Err(LatentError::Exhausted { draws: 10 }));
    }

    #[test]
    fn half_space_takes_about_two_draws() {
        let shape = LatentShape::new(2, 2, 1);
        let m = half_space(shape);
        let mut rng = crate::seed::rng(1, &[]);
        let total: usize = (0..1000).map(|_| latent_random_search(&m, shape, &mut rng, 100).unwrap().1).sum();
        let mean = total as f64 / 1000.0;
        assert!((1.5..=3.0).contains(&mean), "{mean}");
    }

    #[test]
    fn good_start_needs_one_evaluation() {
        let shape = LatentShape::new(4, 4, 2);
        let m = half_space(shape);
        let mut values = vec![0.3; shape.len()];
        values[0] = -1.0;
        let z0 = LatentTensor::new(shape, values).unwrap();
        let out = latent_evolve(&m, &z0, 0.01, 100, 0).unwrap();
        assert_eq!(out.evaluations, 1);
        assert_eq!(out.latent, z0);
        assert_eq!(out.x, Genome::zeros(shape.len()));
    }

    #[test]
    fn bad_start_is_repaired_locally() {
        let shape = LatentShape::new(4, 4, 2);
        let m = half_space(shape);
        for seed in 0..10 {
            let mut rng = crate::seed::rng(seed, &[]);
            let mut z0 = LatentTensor::standard_normal(shape, &mut rng).unwrap().into_values();
            z0[0] = 0.005;
            let z0 = LatentTensor::new(shape, z0).unwrap();
            let out = latent_evolve(&m, &z0, 0.01, 10_000, seed).unwrap();
            assert!(out.loss < EVOLVE_STOP_LOSS);
            let x_norm = out.x.values.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(out.latent.distance(&z0) <= 0.01 * x_norm * (1.0 + 1e-12));
        }
    }

    #[test]
    fn invalid_arguments() {
        let shape = LatentShape::new(1, 1, 1);
        let m = half_space(shape);
        let z0 = LatentTensor::zeros(shape).unwrap();
        assert!(latent_evolve(&m, &z0, 0.0, 10, 0).is_err());
        assert!(latent_evolve(&m, &z0, 0.01, 0, 0).is_err());
        let other = LatentTensor::zeros(LatentShape::new(2, 1, 1)).unwrap();
        assert!(latent_evolve(&m, &other, 0.01, 10, 0).is_err());
    }
}
