//! Post-training retrofitting of fully-trained models with black-box optimization.
//!
//! A small set of parameters (scales, biases, latent variables, ...) is tuned
//! against a possibly non-differentiable loss computed on a validation split,
//! using ask/tell optimizers and a multi-run wrapper that picks the best run.
//!
//! Layout:
//! - [`domain`]: search spaces, genomes and elementary variation operators.
//! - [`optimizer`]: ask/tell optimizers and the rule-table wizard.
//! - [`harness`]: parallel evaluation loop, multi-run wrapper, risk bound and
//!   the generalization experiment.
//! - [`metrics`]: threshold failure rate, WER, BLEU and loss smoothing.
//! - [`tasks`]: desk-scale retrofit tasks with disjoint validation/test splits.
//! - [`latent`]: toy generator, CART surrogate, latent search and Voronoi crossover.

pub mod domain;
pub mod float_serde;
pub mod harness;
pub mod latent;
pub mod metrics;
pub mod optimizer;
pub mod seed;
pub mod tasks;

pub use domain::{Candidate, Domain, DomainError, Genome};
pub use harness::{LossOracle, OracleError};
pub use optimizer::{NoiseHandling, Optimizer, OptimizerError, OptimizerName, OptimizerSpec};

/// Version tag written into every machine-readable artifact.
pub const SCHEMA_VERSION: u32 = 1;
