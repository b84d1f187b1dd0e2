//! Rule-table optimizer selection from problem characteristics.
//!
//! | domain     | condition                               | choice                      |
//! |------------|-----------------------------------------|-----------------------------|
//! | discrete   | noise-free                              | LenglerOnePlusOne           |
//! | discrete   | noisy                                   | OptimisticNoisyOnePlusOne   |
//! | continuous | budget < 10 d                           | RandomSearch                |
//! | continuous | d <= 100 and budget >= 100 d            | DiagonalES                  |
//! | continuous | otherwise                               | OnePlusOne                  |
//!
//! Noisy continuous problems keep the same algorithm and add re-evaluations:
//! optimistic for OnePlusOne, random re-evaluation otherwise.

use super::{NoiseHandling, OptimizerName, OptimizerSpec};
use crate::domain::Domain;

pub fn wizard_select(domain: &Domain, budget: usize, parallelism: usize, noisy: bool) -> OptimizerSpec {
    let dim = domain.dim();
    let name = if domain.is_discrete() {
        if noisy {
            OptimizerName::OptimisticNoisyOnePlusOne
        } else {
            OptimizerName::LenglerOnePlusOne
        }
    } else if budget < 10 * dim {
        OptimizerName::RandomSearch
    } else if dim <= 100 && budget >= 100 * dim {
        OptimizerName::DiagonalEs
    } else {
        OptimizerName::OnePlusOne
    };
    let noise = match (noisy, name) {
        (false, _) => NoiseHandling::None,
        (true, n) if n.is_one_plus_one() => NoiseHandling::Optimistic,
        (true, _) => NoiseHandling::RandomReeval,
    };
    OptimizerSpec::new(name, budget, parallelism).with_noise(noise)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_table() {
        let cat = Domain::categorical(vec![2; 20]).unwrap();
        assert_eq!(wizard_select(&cat, 100, 1, false).name, OptimizerName::LenglerOnePlusOne);
        let noisy = wizard_select(&cat, 100, 1, true);
        assert_eq!(noisy.name, OptimizerName::OptimisticNoisyOnePlusOne);
        assert_eq!(noisy.noise_handling, NoiseHandling::Optimistic);
        let ints = Domain::integer(35, 1, 4).unwrap();
        assert_eq!(wizard_select(&ints, 600, 1, true).name, OptimizerName::OptimisticNoisyOnePlusOne);

        let cont = Domain::uniform_box(10, -5.0, 5.0, 0.0).unwrap();
        assert_eq!(wizard_select(&cont, 1000, 1, false).name, OptimizerName::DiagonalEs);
        assert_eq!(wizard_select(&cont, 5000, 1, false).name, OptimizerName::DiagonalEs);
        assert_eq!(wizard_select(&cont, 99, 1, false).name, OptimizerName::RandomSearch);
        assert_eq!(wizard_select(&cont, 100, 1, false).name, OptimizerName::OnePlusOne);
        assert_eq!(wizard_select(&cont, 500, 1, false).name, OptimizerName::OnePlusOne);

        let big = Domain::latent(16, 16, 4).unwrap();
        assert_eq!(wizard_select(&big, 200, 1, false).name, OptimizerName::RandomSearch);
        assert_eq!(wizard_select(&big, 20_000, 1, false).name, OptimizerName::OnePlusOne);
    }

    #[test]
    fn selected_specs_are_valid() {
        let domains = [
            Domain::categorical(vec![3; 5]).unwrap(),
            Domain::uniform_box(3, 0.0, 1.0, 0.5).unwrap(),
            Domain::latent(2, 2, 2).unwrap(),
        ];
        for d in &domains {
            for budget in [1, 10, 100, 1000, 10_000] {
                for noisy in [false, true] {
                    let spec = wizard_select(d, budget, 4, noisy);
                    assert!(spec.validate().is_ok(), "{spec:?}");
                    assert_eq!(spec.parallelism, 4);
                    assert_eq!(spec.budget, budget);
                }
            }
        }
    }
}
