//! Closed-form rigid fit from known correspondences.

use super::RegistrationError;
use crate::geometry::{Mat3, RigidTransform, Vec3, WorldPoint};

/// Least-squares rotation and translation aligning paired `source` points
/// onto `target` points (same length, paired by index), minimizing the mean
/// squared residual `(1/N)Σ‖x_i − R p_i − t‖²`.
///
/// Centroids are removed, the 3×3 cross-covariance `Q = Σ x'_i p'_iᵀ` is
/// decomposed by SVD, and `R = U·diag(1, 1, det(UVᵀ))·Vᵀ` — the determinant
/// guard keeps near-planar configurations from collapsing into reflections.
/// `t = μ_x − R μ_p`.
pub fn rigid_from_correspondences(
    target: &[WorldPoint],
    source: &[WorldPoint],
) -> Result<RigidTransform, RegistrationError> {
    if target.len() != source.len() {
        return Err(RegistrationError::DegenerateConfiguration(format!(
            "{} target vs {} source points",
            target.len(),
            source.len()
        )));
    }
    let n = target.len();
    if n < 3 {
        return Err(RegistrationError::DegenerateConfiguration(format!(
            "need at least 3 pairs, got {n}"
        )));
    }

    let mu_x = target.iter().fold(Vec3::zeros(), |a, p| a + p.coords) / n as f64;
    let mu_p = source.iter().fold(Vec3::zeros(), |a, p| a + p.coords) / n as f64;

    let mut q = Mat3::zeros();
    for (x, p) in target.iter().zip(source) {
        q += (x.coords - mu_x) * (p.coords - mu_p).transpose();
    }

    let svd = q.svd(true, true);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
    });
    // Rank ≥ 2 pins the rotation; collinear or coincident points do not.
    if svd.singular_values[order[1]] <= 1e-12 * svd.singular_values[order[0]].max(1e-300) {
        return Err(RegistrationError::DegenerateConfiguration(
            "cross-covariance rank < 2 (collinear points)".into(),
        ));
    }
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let det = (u * v_t).determinant();
    let rotation = u * Mat3::from_diagonal(&Vec3::new(1.0, 1.0, det.signum())) * v_t;
    Ok(RigidTransform {
        rotation,
        translation: mu_x - rotation * mu_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Unit;

    fn pseudo_random_cloud(n: usize, seed: f64) -> Vec<WorldPoint> {
        let mut state = seed;
        let mut next = move || {
            state = (state * 9301.0 + 49297.0) % 233280.0;
            state / 233280.0 * 2.0 - 1.0
        };
        (0..n)
            .map(|_| WorldPoint::new(next() * 50.0, next() * 50.0, next() * 50.0))
            .collect()
    }

    #[test]
    fn identical_clouds_give_identity() {
        let cloud = pseudo_random_cloud(100, 5.0);
        let t = rigid_from_correspondences(&cloud, &cloud).unwrap();
        assert!((t.rotation - Mat3::identity()).amax() < 1e-12);
        assert!(t.translation.norm() < 1e-12);
    }

    #[test]
    fn recovers_quarter_turn_with_translation() {
        let source = pseudo_random_cloud(100, 11.0);
        let truth = {
            let mut t = RigidTransform::from_axis_angle(
                Unit::new_normalize(Vec3::z()),
                std::f64::consts::FRAC_PI_2,
            );
            t.translation = Vec3::new(1.0, 0.0, 0.0);
            t
        };
        let target: Vec<WorldPoint> = source.iter().map(|p| truth.apply(p)).collect();
        let est = rigid_from_correspondences(&target, &source).unwrap();
        assert!((est.rotation - truth.rotation).amax() < 1e-12);
        assert!((est.translation - truth.translation).norm() < 1e-12);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let source: Vec<WorldPoint> = (0..5)
            .map(|i| WorldPoint::new(i as f64, 2.0 * i as f64, -i as f64))
            .collect();
        let target = source.clone();
        assert!(matches!(
            rigid_from_correspondences(&target, &source),
            Err(RegistrationError::DegenerateConfiguration(_))
        ));
    }

    fn mean_sq_error(target: &[WorldPoint], source: &[WorldPoint], t: &RigidTransform) -> f64 {
        target
            .iter()
            .zip(source)
            .map(|(x, p)| (x - t.apply(p)).norm_squared())
            .sum::<f64>()
            / target.len() as f64
    }

    #[test]
    fn reflection_guard_beats_exhaustive_sign_choices_on_planar_sets() {
        // Near-planar 4-point sets whose mirror images tempt the unguarded
        // solution into det −1. The guard must pick the best PROPER
        // rotation among all sign assignments U·diag(±1,±1,±1)·Vᵀ.
        let mut state = 77.0;
        let mut next = move || {
            state = (state * 9301.0 + 49297.0) % 233280.0;
            state / 233280.0 * 2.0 - 1.0
        };
        for _case in 0..50 {
            let source: Vec<WorldPoint> = (0..4)
                .map(|_| WorldPoint::new(next() * 10.0, next() * 10.0, next() * 0.01))
                .collect();
            // Mirror the z axis: a reflection the fit must NOT reproduce.
            let target: Vec<WorldPoint> = source
                .iter()
                .map(|p| WorldPoint::new(p.x, p.y, -p.z + next() * 0.002))
                .collect();
            let Ok(est) = rigid_from_correspondences(&target, &source) else {
                continue;
            };
            assert!(est.rotation.determinant() > 0.0);
            assert!(est.max_rotation_error() < 1e-9);

            // Exhaustive sign-choice oracle.
            let mu_x = target.iter().fold(Vec3::zeros(), |a, p| a + p.coords) / 4.0;
            let mu_p = source.iter().fold(Vec3::zeros(), |a, p| a + p.coords) / 4.0;
            let mut q = Mat3::zeros();
            for (x, p) in target.iter().zip(&source) {
                q += (x.coords - mu_x) * (p.coords - mu_p).transpose();
            }
            let svd = q.svd(true, true);
            let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
            let mut best: Option<f64> = None;
            for signs in 0..8u8 {
                let d = Vec3::new(
                    if signs & 1 == 0 { 1.0 } else { -1.0 },
                    if signs & 2 == 0 { 1.0 } else { -1.0 },
                    if signs & 4 == 0 { 1.0 } else { -1.0 },
                );
                let r = u * Mat3::from_diagonal(&d) * v_t;
                if r.determinant() < 0.0 {
                    continue;
                }
                let t = RigidTransform {
                    rotation: r,
                    translation: mu_x - r * mu_p,
                };
                let e = mean_sq_error(&target, &source, &t);
                best = Some(best.map_or(e, |b: f64| b.min(e)));
            }
            let est_err = mean_sq_error(&target, &source, &est);
            assert!(
                est_err <= best.unwrap() + 1e-9,
                "closed form {est_err} worse than oracle {}",
                best.unwrap()
            );
        }
    }
}
