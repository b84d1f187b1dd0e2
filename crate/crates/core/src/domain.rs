//! Search spaces, genomes and the elementary variation operators shared by all
//! optimizers.
//!
//! All genomes store their coordinates as `f64`. Integer and categorical
//! coordinates hold exact integral values (categories are 0-based indices).
//!
//! JSON shape of a domain (tagged by `kind`):
//!
//! ```json
//! {"kind": "continuous_box", "lower": [0.0], "upper": [1.0], "init": [0.5]}
//! {"kind": "integer_box", "dim": 35, "lower": 1, "upper": 4}
//! {"kind": "categorical", "cardinalities": [2, 2, 3]}
//! {"kind": "latent_grid", "height": 16, "width": 16, "channels": 4}
//! ```
//!
//! and of a genome: `{"values": [0.5, 1.0]}`.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("domain dimension must be at least 1")]
    EmptyDomain,
    #[error("bounds have mismatched lengths (lower {lower}, upper {upper}, init {init})")]
    LengthMismatch { lower: usize, upper: usize, init: usize },
    #[error("coordinate {index}: expected lower <= init <= upper, got {lower} <= {init} <= {upper}")]
    InvalidBounds { index: usize, lower: f64, upper: f64, init: f64 },
    #[error("integer box requires lower <= upper, got {lower} > {upper}")]
    InvalidIntegerBounds { lower: i64, upper: i64 },
    #[error("categorical coordinate {index} has cardinality {cardinality}, need at least 2")]
    InvalidCardinality { index: usize, cardinality: u32 },
    #[error("latent grid dimensions must be positive, got {height}x{width}x{channels}")]
    InvalidLatentShape { height: usize, width: usize, channels: usize },
    #[error("genome has {actual} coordinates, domain expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("{operation} is not supported on {kind} domains")]
    Unsupported { operation: &'static str, kind: &'static str },
    #[error("n_coords must be in 1..={dim}, got {n_coords}")]
    MutationCount { n_coords: usize, dim: usize },
}

/// A typed search space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    ContinuousBox {
        lower: Vec<f64>,
        upper: Vec<f64>,
        init: Vec<f64>,
    },
    IntegerBox {
        dim: usize,
        lower: i64,
        upper: i64,
    },
    Categorical {
        cardinalities: Vec<u32>,
    },
    /// Flattened `height x width x channels` tensor, row-major with channels
    /// innermost. Unbounded; the reference distribution is standard normal.
    LatentGrid {
        height: usize,
        width: usize,
        channels: usize,
    },
}

/// A point of a [`Domain`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub values: Vec<f64>,
}

impl Genome {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { values: vec![0.0; dim] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of coordinates that differ (bitwise) from `other`.
    pub fn hamming(&self, other: &Genome) -> usize {
        self.values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a.to_bits() != b.to_bits())
            .count()
    }

    pub fn fingerprint(&self) -> u64 {
        crate::seed::fingerprint(&self.values)
    }
}

impl From<Vec<f64>> for Genome {
    fn from(values: Vec<f64>) -> Self {
        Self { values }
    }
}

/// A genome together with its evaluation bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub uid: u64,
    pub genome: Genome,
    /// Present iff `eval_count >= 1`. Running mean under noisy re-evaluation.
    #[serde(with = "crate::float_serde::option")]
    pub loss: Option<f64>,
    pub eval_count: u32,
    pub parent_uids: Vec<u64>,
}

impl Candidate {
    pub fn new(uid: u64, genome: Genome, parent_uids: Vec<u64>) -> Self {
        Self { uid, genome, loss: None, eval_count: 0, parent_uids }
    }
}

impl Domain {
    pub fn continuous(lower: Vec<f64>, upper: Vec<f64>, init: Vec<f64>) -> Result<Self, DomainError> {
        let domain = Domain::ContinuousBox { lower, upper, init };
        domain.validate()?;
        Ok(domain)
    }

    /// Box `[lower, upper]^dim` with the given initial point on every coordinate.
    pub fn uniform_box(dim: usize, lower: f64, upper: f64, init: f64) -> Result<Self, DomainError> {
        Self::continuous(vec![lower; dim], vec![upper; dim], vec![init; dim])
    }

    pub fn integer(dim: usize, lower: i64, upper: i64) -> Result<Self, DomainError> {
        let domain = Domain::IntegerBox { dim, lower, upper };
        domain.validate()?;
        Ok(domain)
    }

    pub fn categorical(cardinalities: Vec<u32>) -> Result<Self, DomainError> {
        let domain = Domain::Categorical { cardinalities };
        domain.validate()?;
        Ok(domain)
    }

    pub fn latent(height: usize, width: usize, channels: usize) -> Result<Self, DomainError> {
        let domain = Domain::LatentGrid { height, width, channels };
        domain.validate()?;
        Ok(domain)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        match self {
            Domain::ContinuousBox { lower, upper, init } => {
                if lower.len() != upper.len() || lower.len() != init.len() {
                    return Err(DomainError::LengthMismatch {
                        lower: lower.len(),
                        upper: upper.len(),
                        init: init.len(),
                    });
                }
                if lower.is_empty() {
                    return Err(DomainError::EmptyDomain);
                }
                for (index, ((&lo, &hi), &x0)) in lower.iter().zip(upper).zip(init).enumerate() {
                    // NaN fails every comparison, so it is rejected here too.
                    if !(lo <= x0 && x0 <= hi) || !lo.is_finite() || !hi.is_finite() {
                        return Err(DomainError::InvalidBounds { index, lower: lo, upper: hi, init: x0 });
                    }
                }
                Ok(())
            }
            Domain::IntegerBox { dim, lower, upper } => {
                if *dim == 0 {
                    return Err(DomainError::EmptyDomain);
                }
                if lower > upper {
                    return Err(DomainError::InvalidIntegerBounds { lower: *lower, upper: *upper });
                }
                Ok(())
            }
            Domain::Categorical { cardinalities } => {
                if cardinalities.is_empty() {
                    return Err(DomainError::EmptyDomain);
                }
                match cardinalities.iter().position(|&c| c < 2) {
                    Some(index) => Err(DomainError::InvalidCardinality {
                        index,
                        cardinality: cardinalities[index],
                    }),
                    None => Ok(()),
                }
            }
            Domain::LatentGrid { height, width, channels } => {
                if *height == 0 || *width == 0 || *channels == 0 {
                    return Err(DomainError::InvalidLatentShape {
                        height: *height,
                        width: *width,
                        channels: *channels,
                    });
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::ContinuousBox { lower, .. } => lower.len(),
            Domain::IntegerBox { dim, .. } => *dim,
            Domain::Categorical { cardinalities } => cardinalities.len(),
            Domain::LatentGrid { height, width, channels } => height * width * channels,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Domain::ContinuousBox { .. } => "continuous_box",
            Domain::IntegerBox { .. } => "integer_box",
            Domain::Categorical { .. } => "categorical",
            Domain::LatentGrid { .. } => "latent_grid",
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Domain::IntegerBox { .. } | Domain::Categorical { .. })
    }

    /// Bounds of coordinate `i` (infinite for latent grids).
    fn bounds(&self, i: usize) -> (f64, f64) {
        match self {
            Domain::ContinuousBox { lower, upper, .. } => (lower[i], upper[i]),
            Domain::IntegerBox { lower, upper, .. } => (*lower as f64, *upper as f64),
            Domain::Categorical { cardinalities } => (0.0, f64::from(cardinalities[i] - 1)),
            Domain::LatentGrid { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn check_dim(&self, genome: &Genome) -> Result<(), DomainError> {
        if genome.len() != self.dim() {
            return Err(DomainError::DimensionMismatch { expected: self.dim(), actual: genome.len() });
        }
        Ok(())
    }

    /// Whether `genome` has the right length, lies within bounds and is
    /// integral on discrete coordinates.
    pub fn contains(&self, genome: &Genome) -> bool {
        if genome.len() != self.dim() {
            return false;
        }
        genome.values.iter().enumerate().all(|(i, &v)| {
            let (lo, hi) = self.bounds(i);
            let integral = !self.is_discrete() || v.fract() == 0.0;
            v.is_finite() && lo <= v && v <= hi && integral
        })
    }

    /// The neutral starting point: `init` for boxes, zeros for latent grids,
    /// the lower bound for integer boxes and category 0 for categoricals.
    pub fn neutral(&self) -> Genome {
        match self {
            Domain::ContinuousBox { init, .. } => Genome::new(init.clone()),
            Domain::IntegerBox { dim, lower, .. } => Genome::new(vec![*lower as f64; *dim]),
            _ => Genome::zeros(self.dim()),
        }
    }

    /// Default per-coordinate Gaussian step: a tenth of the range, or 1 on
    /// latent grids.
    pub fn default_sigma(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| match self {
                Domain::LatentGrid { .. } => 1.0,
                _ => {
                    let (lo, hi) = self.bounds(i);
                    (hi - lo) / 10.0
                }
            })
            .collect()
    }

    /// Draws a genome uniformly in the box / categorical support, or standard
    /// normal on latent grids.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Genome {
        let values = match self {
            Domain::ContinuousBox { lower, upper, .. } => lower
                .iter()
                .zip(upper)
                .map(|(&lo, &hi)| if lo == hi { lo } else { rng.random_range(lo..=hi) })
                .collect(),
            Domain::IntegerBox { dim, lower, upper } => {
                (0..*dim).map(|_| rng.random_range(*lower..=*upper) as f64).collect()
            }
            Domain::Categorical { cardinalities } => {
                cardinalities.iter().map(|&c| f64::from(rng.random_range(0..c))).collect()
            }
            Domain::LatentGrid { .. } => {
                (0..self.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
            }
        };
        Genome::new(values)
    }

    /// Projects each coordinate onto `[lower, upper]` (integer boxes also round).
    /// Idempotent. Only defined for continuous and integer boxes.
    pub fn clamp(&self, genome: &Genome) -> Result<Genome, DomainError> {
        match self {
            Domain::ContinuousBox { .. } | Domain::IntegerBox { .. } => {
                self.check_dim(genome)?;
                Ok(self.repair(genome.values.clone()))
            }
            _ => Err(DomainError::Unsupported { operation: "clamp", kind: self.kind_name() }),
        }
    }

    /// Maps an arbitrary real vector of the right length into the domain:
    /// clamping boxes, rounding discrete coordinates, replacing non-finite
    /// entries by the neutral value. Latent grids only sanitize non-finite values.
    pub(crate) fn repair(&self, mut values: Vec<f64>) -> Genome {
        let neutral = self.neutral();
        for (i, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                *v = neutral.values[i];
            }
            if self.is_discrete() {
                *v = v.round();
            }
            let (lo, hi) = self.bounds(i);
            *v = v.clamp(lo, hi);
        }
        Genome::new(values)
    }

    /// Resamples exactly `n_coords` distinct coordinates of `genome`.
    ///
    /// Categorical and integer coordinates move to a uniformly drawn *other*
    /// value; continuous coordinates take a Gaussian step of
    /// `step_scale * default_sigma` and are clamped back into the box.
    pub fn mutate_coordinates<R: Rng + ?Sized>(
        &self,
        genome: &Genome,
        n_coords: usize,
        step_scale: f64,
        rng: &mut R,
    ) -> Result<Genome, DomainError> {
        self.check_dim(genome)?;
        let dim = self.dim();
        if n_coords == 0 || n_coords > dim {
            return Err(DomainError::MutationCount { n_coords, dim });
        }
        let sigma = self.default_sigma();
        let mut values = genome.values.clone();
        for i in index::sample(rng, dim, n_coords) {
            values[i] = self.mutate_one(i, values[i], step_scale * sigma[i], rng);
        }
        Ok(self.repair(values))
    }

    fn mutate_one<R: Rng + ?Sized>(&self, i: usize, current: f64, sigma: f64, rng: &mut R) -> f64 {
        match self {
            Domain::Categorical { .. } | Domain::IntegerBox { .. } => {
                let (lo, hi) = self.bounds(i);
                let (lo, hi) = (lo as i64, hi as i64);
                if lo == hi {
                    return lo as f64;
                }
                // Uniform over the other values of [lo, hi].
                let current = current as i64;
                let draw = rng.random_range(lo..hi);
                (if draw >= current { draw + 1 } else { draw }) as f64
            }
            Domain::ContinuousBox { .. } | Domain::LatentGrid { .. } => {
                current + sigma * rng.sample::<f64, _>(StandardNormal)
            }
        }
    }
}
