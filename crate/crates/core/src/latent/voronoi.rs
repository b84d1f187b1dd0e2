//! Crossover of spatial latents by nearest click point.
//!
//! Clicks are given in image pixels and mapped to latent cells by
//! `floor(p * W_latent / W_image)`. Distances are Euclidean in latent-cell
//! units.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{LatentError, LatentTensor, IMAGE_SIZE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickPoint {
    pub px: u32,
    pub py: u32,
}

impl ClickPoint {
    pub fn new(px: u32, py: u32) -> Self {
        Self { px, py }
    }

    pub fn center() -> Self {
        Self::new(IMAGE_SIZE / 2, IMAGE_SIZE / 2)
    }
}

/// Latent cell `(row, column)` under a click.
pub fn click_cell(click: ClickPoint, height: usize, width: usize) -> Result<(usize, usize), LatentError> {
    if click.px >= IMAGE_SIZE || click.py >= IMAGE_SIZE {
        return Err(LatentError::ClickOutOfBounds { px: click.px, py: click.py, size: IMAGE_SIZE });
    }
    let map = |p: u32, n: usize| (p as usize * n) / IMAGE_SIZE as usize;
    Ok((map(click.py, height), map(click.px, width)))
}

fn dist(a: (usize, usize), b: (usize, usize)) -> f64 {
    let dy = a.0 as f64 - b.0 as f64;
    let dx = a.1 as f64 - b.1 as f64;
    (dy * dy + dx * dx).sqrt()
}

/// Each cell copies `z1` when strictly closer to `p1` than to `p2`, else `z2`.
pub fn voronoi_crossover(
    z1: &LatentTensor,
    z2: &LatentTensor,
    p1: ClickPoint,
    p2: ClickPoint,
) -> Result<LatentTensor, LatentError> {
    z1.check_same_shape(z2)?;
    let shape = z1.shape();
    let c1 = click_cell(p1, shape.height, shape.width)?;
    let c2 = click_cell(p2, shape.height, shape.width)?;
    let mut values = Vec::with_capacity(shape.len());
    for y in 0..shape.height {
        for x in 0..shape.width {
            let source = if dist((y, x), c1) < dist((y, x), c2) { z1 } else { z2 };
            values.extend_from_slice(source.cell(y, x));
        }
    }
    LatentTensor::new(shape, values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoronoiOutcome {
    pub latent: LatentTensor,
    /// Parent index per spatial cell (row-major); `None` for Gaussian cells.
    pub assignment: Vec<Option<usize>>,
    pub r: f64,
}

impl VoronoiOutcome {
    pub fn gaussian_fraction(&self) -> f64 {
        self.assignment.iter().filter(|a| a.is_none()).count() as f64 / self.assignment.len() as f64
    }
}

/// Cell `x` copies parent `j` when `|x - p_j| < |x - p_u| / r` for every
/// other parent `u`; all other cells get fresh standard-normal channels.
pub fn voronoi_multi<R: Rng + ?Sized>(
    parents: &[(LatentTensor, ClickPoint)],
    r: f64,
    rng: &mut R,
) -> Result<VoronoiOutcome, LatentError> {
    let Some((first, _)) = parents.first() else {
        return Err(LatentError::NoParents);
    };
    if !(r >= 1.0 && r.is_finite()) {
        return Err(LatentError::InvalidRatio(r));
    }
    let shape = first.shape();
    let mut cells = Vec::with_capacity(parents.len());
    for (z, p) in parents {
        first.check_same_shape(z)?;
        cells.push(click_cell(*p, shape.height, shape.width)?);
    }
    let mut values = Vec::with_capacity(shape.len());
    let mut assignment = Vec::with_capacity(shape.cells());
    for y in 0..shape.height {
        for x in 0..shape.width {
            let d: Vec<f64> = cells.iter().map(|&c| dist((y, x), c)).collect();
            let owner = (0..parents.len()).find(|&j| (0..parents.len()).all(|u| u == j || d[j] < d[u] / r));
            match owner {
                Some(j) => values.extend_from_slice(parents[j].0.cell(y, x)),
                None => values.extend((0..shape.channels).map(|_| -> f64 { StandardNormal.sample(rng) })),
            }
            assignment.push(owner);
        }
    }
    Ok(VoronoiOutcome { latent: LatentTensor::new(shape, values)?, assignment, r })
}

/// [`voronoi_multi`] with `r ~ U[1, 2]` drawn once.
pub fn voronoi_multi_random<R: Rng + ?Sized>(
    parents: &[(LatentTensor, ClickPoint)],
    rng: &mut R,
) -> Result<VoronoiOutcome, LatentError> {
    let r = rng.random_range(1.0..=2.0);
    voronoi_multi(parents, r, rng)
}
