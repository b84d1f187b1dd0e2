//! Latent-space tools: a toy latent-to-image generator, a CART surrogate for
//! `P(bad | z)`, random and evolutionary latent search against it, Voronoi
//! crossover of spatial latents and seed-diversity ranking.

mod diversity;
mod render;
mod search;
mod tree;
mod voronoi;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Domain, Genome};

pub use diversity::{diversity_score, latent_batch, rank_by_diversity, seed_diversity_rank};
pub use render::{encode_png, toy_generate, RgbImage, IMAGE_SIZE};
pub use search::{latent_evolve, latent_random_search, EvolveOutcome, EVOLVE_STOP_LOSS};
pub use tree::{tree_fit, tree_predict_bad, Label, LabeledSample, SurrogateModel, TreeNode};
pub use voronoi::{click_cell, voronoi_crossover, voronoi_multi, voronoi_multi_random, ClickPoint, VoronoiOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatentError {
    #[error("latent shape must have positive height, width and channels (got {0:?})")]
    InvalidShape(LatentShape),
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("latent shapes differ: {0:?} vs {1:?}")]
    ShapeMismatch(LatentShape, LatentShape),
    #[error("latent values must be finite")]
    NonFinite,
    #[error("training set is empty")]
    EmptyInput,
    #[error("{samples} samples but {labels} labels")]
    LabelCount { samples: usize, labels: usize },
    #[error("click ({px}, {py}) lies outside the {size}x{size} image")]
    ClickOutOfBounds { px: u32, py: u32, size: u32 },
    #[error("no latent with zero predicted bad probability within {draws} draws")]
    Exhausted { draws: usize },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("at least one parent is required")]
    NoParents,
    #[error("contraction ratio r must be at least 1 (got {0})")]
    InvalidRatio(f64),
    #[error("at least two seeds are required")]
    TooFewSeeds,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatentShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl LatentShape {
    pub const fn new(height: usize, width: usize, channels: usize) -> Self {
        Self { height, width, channels }
    }

    pub fn len(self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    pub fn cells(self) -> usize {
        self.height * self.width
    }

    pub fn validate(self) -> Result<Self, LatentError> {
        if self.height == 0 || self.width == 0 || self.channels == 0 {
            Err(LatentError::InvalidShape(self))
        } else {
            Ok(self)
        }
    }

    pub fn domain(self) -> Domain {
        Domain::latent(self.height, self.width, self.channels).expect("validated shape")
    }
}

impl Default for LatentShape {
    fn default() -> Self {
        Self::new(16, 16, 4)
    }
}

#[derive(Deserialize)]
struct RawLatent {
    shape: LatentShape,
    values: Vec<f64>,
}

/// `H x W x C` latent, stored flat with index `(y * W + x) * C + c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLatent")]
pub struct LatentTensor {
    shape: LatentShape,
    values: Vec<f64>,
}

impl TryFrom<RawLatent> for LatentTensor {
    type Error = LatentError;

    fn try_from(raw: RawLatent) -> Result<Self, Self::Error> {
        LatentTensor::new(raw.shape, raw.values)
    }
}

impl LatentTensor {
    pub fn new(shape: LatentShape, values: Vec<f64>) -> Result<Self, LatentError> {
        shape.validate()?;
        if values.len() != shape.len() {
            return Err(LatentError::DimensionMismatch { expected: shape.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LatentError::NonFinite);
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: LatentShape) -> Result<Self, LatentError> {
        Self::new(shape, vec![0.0; shape.len()])
    }

    pub fn standard_normal<R: Rng + ?Sized>(shape: LatentShape, rng: &mut R) -> Result<Self, LatentError> {
        shape.validate()?;
        Ok(Self { shape, values: (0..shape.len()).map(|_| StandardNormal.sample(rng)).collect() })
    }

    pub fn shape(&self) -> LatentShape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.values[(y * self.shape.width + x) * self.shape.channels + c]
    }

    /// All channels of spatial cell `(y, x)`.
    pub fn cell(&self, y: usize, x: usize) -> &[f64] {
        let start = (y * self.shape.width + x) * self.shape.channels;
        &self.values[start..start + self.shape.channels]
    }

    pub fn channel_mean(&self, c: usize) -> f64 {
        self.values.iter().skip(c).step_by(self.shape.channels).sum::<f64>() / self.shape.cells() as f64
    }

    pub fn distance(&self, other: &LatentTensor) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }

    pub fn to_genome(&self) -> Genome {
        Genome::new(self.values.clone())
    }

    pub fn from_genome(shape: LatentShape, genome: &Genome) -> Result<Self, LatentError> {
        Self::new(shape, genome.values.clone())
    }

    fn check_same_shape(&self, other: &LatentTensor) -> Result<(), LatentError> {
        if self.shape == other.shape {
            Ok(())
        } else {
            Err(LatentError::ShapeMismatch(self.shape, other.shape))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_has_shape_header() {
        let z = LatentTensor::new(LatentShape::new(1, 2, 1), vec![0.5, -1.0]).unwrap();
        let text = serde_json::to_string(&z).unwrap();
        assert_eq!(text, r#"{"shape":{"height":1,"width":2,"channels":1},"values":[0.5,-1.0]}"#);
        assert_eq!(serde_json::from_str::<LatentTensor>(&text).unwrap(), z);
        let bad = r#"{"shape":{"height":1,"width":2,"channels":1},"values":[0.5]}"#;
        assert!(serde_json::from_str::<LatentTensor>(bad).is_err());
    }

    #[test]
    fn layout_and_means() {
        let shape = LatentShape::new(2, 2, 2);
        let z = LatentTensor::new(shape, (0..8).map(f64::from).collect()).unwrap();
        assert_eq!(z.get(1, 0, 1), 5.0);
        assert_eq!(z.cell(0, 1), &[2.0, 3.0]);
        assert_eq!(z.channel_mean(0), 3.0);
        assert_eq!(z.channel_mean(1), 4.0);
        assert!(LatentTensor::new(LatentShape::new(0, 1, 1), vec![]).is_err());
        assert_eq!(LatentTensor::new(shape, vec![f64::NAN; 8]), Err(LatentError::NonFinite));
    }
}
