//! Deterministic noise injection for robustness testing.

use crate::cloud::PointCloud;
use crate::geometry::WorldPoint;
use crate::image::{quantize_u8, GrayImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

/// Adds Gaussian pixel noise clamped to the 8-bit range. Each image row
/// draws from its own counter-derived stream, so the result is bit-identical
/// for a given seed regardless of thread count.
pub fn add_noise(image: &GrayImage, sigma: f64, seed: u64) -> GrayImage {
    if sigma == 0.0 {
        return image.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma is non-negative");
    let w = image.width();
    let mut out = image.clone();
    out.as_mut_slice()
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(row, data)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(row as u64);
            for v in data.iter_mut() {
                *v = quantize_u8(*v as f64 + normal.sample(&mut rng));
            }
        });
    out
}

/// Appends `round(fraction · n)` uniform outlier points inside `bounds`.
/// Normals and provenance do not survive (outliers have neither).
pub fn add_outliers(
    cloud: &PointCloud,
    fraction: f64,
    bounds: (WorldPoint, WorldPoint),
    seed: u64,
) -> PointCloud {
    assert!((0.0..1.0).contains(&fraction), "fraction must be in [0, 1)");
    let count = (cloud.len() as f64 * fraction).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = cloud.points.clone();
    for _ in 0..count {
        points.push(WorldPoint::new(
            rng.random_range(bounds.0.x..=bounds.1.x),
            rng.random_range(bounds.0.y..=bounds.1.y),
            rng.random_range(bounds.0.z..=bounds.1.z),
        ));
    }
    PointCloud::new(points)
}
