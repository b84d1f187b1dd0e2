//! Ranking of seeds by the spread of the latents they generate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LatentError, LatentShape, LatentTensor};

/// The `lambda` latents shown for a seed.
pub fn latent_batch(seed: u64, lambda: usize, shape: LatentShape) -> Result<Vec<LatentTensor>, LatentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..lambda).map(|_| LatentTensor::standard_normal(shape, &mut rng)).collect()
}

/// Mean pairwise Euclidean distance (0 for fewer than two latents).
pub fn diversity_score(latents: &[LatentTensor]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, a) in latents.iter().enumerate() {
        for b in &latents[i + 1..] {
            total += a.distance(b);
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

/// Scores each batch; descending score, ties by ascending seed.
pub fn rank_by_diversity(batches: &[(u64, Vec<LatentTensor>)]) -> Vec<(u64, f64)> {
    let mut ranked: Vec<(u64, f64)> = batches.iter().map(|(s, b)| (*s, diversity_score(b))).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
}

pub fn seed_diversity_rank(seeds: &[u64], lambda: usize, shape: LatentShape) -> Result<Vec<(u64, f64)>, LatentError> {
    if seeds.len() < 2 {
        return Err(LatentError::TooFewSeeds);
    }
    let batches = seeds.iter().map(|&s| Ok((s, latent_batch(s, lambda, shape)?))).collect::<Result<Vec<_>, LatentError>>()?;
    Ok(rank_by_diversity(&batches))
}
