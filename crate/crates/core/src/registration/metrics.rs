//! Alignment error metrics.

use super::{Pairs, RegistrationError};
use crate::geometry::{RigidTransform, Vec3, WorldPoint};

/// Mean squared Euclidean residual `(1/N)Σ‖x_i − Rp_i − t‖²` over the
/// pairs, with `transform` applied to the source side.
pub fn error_point_point(
    source: &[WorldPoint],
    target: &[WorldPoint],
    pairs: &Pairs,
    transform: &RigidTransform,
) -> Result<f64, RegistrationError> {
    if pairs.is_empty() {
        return Err(RegistrationError::EmptyPairs);
    }
    let sum: f64 = pairs
        .iter()
        .map(|(si, ti)| (target[*ti] - transform.apply(&source[*si])).norm_squared())
        .sum();
    Ok(sum / pairs.len() as f64)
}

/// Mean squared point-to-plane residual `(1/N)Σ((x_i − Rp_i − t)·n_i)²`,
/// with `n_i` the unit normal at the target point.
pub fn error_point_plane(
    source: &[WorldPoint],
    target: &[WorldPoint],
    target_normals: &[Vec3],
    pairs: &Pairs,
    transform: &RigidTransform,
) -> Result<f64, RegistrationError> {
    if pairs.is_empty() {
        return Err(RegistrationError::EmptyPairs);
    }
    if target_normals.len() != target.len() {
        return Err(RegistrationError::MissingNormals);
    }
    let sum: f64 = pairs
        .iter()
        .map(|(si, ti)| {
            let residual = target[*ti] - transform.apply(&source[*si]);
            residual.dot(&target_normals[*ti]).powi(2)
        })
        .sum();
    Ok(sum / pairs.len() as f64)
}
