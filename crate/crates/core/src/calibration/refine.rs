//! Reprojection error and damped least-squares calibration refinement.

use super::{CalibrationError, CalibrationResult, CalibrationView};
use crate::geometry::{
    nearest_rotation, project, CameraModel, DistortionCoeffs, RigidTransform, Vec3, WorldPoint,
};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct ReprojectionReport {
    /// Root mean square of Euclidean pixel residuals over all corners.
    pub rms: f64,
    /// Mean Euclidean pixel residual per view.
    pub per_view_mean: Vec<f64>,
}

/// Reprojects every board corner through `(model, poses)` and reports the
/// RMS pixel error plus per-view means.
pub fn reprojection_error(
    views: &[CalibrationView],
    model: &CameraModel,
    poses: &[RigidTransform],
) -> Result<ReprojectionReport, CalibrationError> {
    if views.len() != poses.len() {
        return Err(CalibrationError::BadView {
            view: poses.len(),
            message: format!("{} views but {} poses", views.len(), poses.len()),
        });
    }
    let mut sq_sum = 0.0;
    let mut count = 0usize;
    let mut per_view_mean = Vec::with_capacity(views.len());
    for (v, (view, pose)) in views.iter().zip(poses).enumerate() {
        let mut view_sum = 0.0;
        for (board, observed) in view.board_points.iter().zip(&view.image_points) {
            let world = WorldPoint::new(board[0], board[1], 0.0);
            let (projected, _) = project(model, pose, &world).map_err(|e| {
                CalibrationError::BadView {
                    view: v,
                    message: e.to_string(),
                }
            })?;
            let d = projected.distance_to(observed);
            view_sum += d;
            sq_sum += d * d;
            count += 1;
        }
        per_view_mean.push(view_sum / view.board_points.len().max(1) as f64);
    }
    Ok(ReprojectionReport {
        rms: (sq_sum / count.max(1) as f64).sqrt(),
        per_view_mean,
    })
}

struct Problem<'a> {
    views: &'a [CalibrationView],
    image_size: (u32, u32),
    estimate_distortion: bool,
    residual_len: usize,
}

impl Problem<'_> {
    fn param_len(&self, n_views: usize) -> usize {
        self.pose_base() + 6 * n_views
    }

    fn pose_base(&self) -> usize {
        5 + if self.estimate_distortion { 5 } else { 0 }
    }

    /// Packs the linearization point: intrinsics and per-view translations
    /// are absolute, rotation deltas are zero.
    fn pack(&self, model: &CameraModel, poses: &[RigidTransform]) -> DVector<f64> {
        let mut p = DVector::zeros(self.param_len(poses.len()));
        p[0] = model.fx;
        p[1] = model.fy;
        p[2] = model.cx;
        p[3] = model.cy;
        p[4] = model.skew;
        if self.estimate_distortion {
            let d = model.dist.as_array();
            for i in 0..5 {
                p[5 + i] = d[i];
            }
        }
        let base = self.pose_base();
        for (v, pose) in poses.iter().enumerate() {
            for i in 0..3 {
                p[base + 6 * v + 3 + i] = pose.translation[i];
            }
        }
        p
    }

    fn unpack(&self, p: &DVector<f64>, reference_poses: &[RigidTransform]) -> Option<(CameraModel, Vec<RigidTransform>)> {
        if !(p[0] > 0.0 && p[1] > 0.0) {
            return None;
        }
        let mut model = CameraModel::new(p[0], p[1], p[2], p[3], self.image_size.0, self.image_size.1).ok()?;
        model.skew = p[4];
        if self.estimate_distortion {
            model.dist = DistortionCoeffs::from_array([p[5], p[6], p[7], p[8], p[9]]);
        }
        let base = self.pose_base();
        let poses = reference_poses
            .iter()
            .enumerate()
            .map(|(v, reference)| {
                let w = Vec3::new(p[base + 6 * v], p[base + 6 * v + 1], p[base + 6 * v + 2]);
                let rotation = if w.norm() > 0.0 {
                    nearest_rotation(
                        &(nalgebra::Rotation3::new(w).into_inner() * reference.rotation),
                    )
                } else {
                    reference.rotation
                };
                RigidTransform {
                    rotation,
                    translation: Vec3::new(
                        p[base + 6 * v + 3],
                        p[base + 6 * v + 4],
                        p[base + 6 * v + 5],
                    ),
                }
            })
            .collect();
        Some((model, poses))
    }

    /// Residual vector (observed − projected, both pixel components), or
    /// None when a corner projects behind the camera.
    fn residuals(&self, p: &DVector<f64>, reference_poses: &[RigidTransform]) -> Option<DVector<f64>> {
        let (model, poses) = self.unpack(p, reference_poses)?;
        let mut r = DVector::zeros(self.residual_len);
        let mut k = 0;
        for (view, pose) in self.views.iter().zip(&poses) {
            for (board, observed) in view.board_points.iter().zip(&view.image_points) {
                let world = WorldPoint::new(board[0], board[1], 0.0);
                let (projected, _) = project(&model, pose, &world).ok()?;
                r[k] = observed.u - projected.u;
                r[k + 1] = observed.v - projected.v;
                k += 2;
            }
        }
        Some(r)
    }
}

const MAX_ITERATIONS: usize = 100;
const COST_TOLERANCE: f64 = 1e-12;

/// Refines the intrinsics (fx, fy, cx, cy, skew), per-view poses, and
/// optionally the five distortion coefficients by Levenberg-style damped
/// least squares on the total squared reprojection error.
///
/// Accepted steps never increase the cost; the loop stops on a relative
/// cost change below 1e-12 or after 100 iterations. Rotations update
/// through a 3-parameter local exponential map and are re-orthonormalized
/// each accepted step. If no step improves on the initial cost the initial
/// result is returned unchanged.
pub fn refine_calibration(
    views: &[CalibrationView],
    initial: &CalibrationResult,
    estimate_distortion: bool,
) -> Result<CalibrationResult, CalibrationError> {
    if views.len() != initial.poses.len() {
        return Err(CalibrationError::BadView {
            view: initial.poses.len(),
            message: format!("{} views but {} poses", views.len(), initial.poses.len()),
        });
    }
    let residual_len = 2 * views
        .iter()
        .map(|v| v.board_points.len())
        .sum::<usize>();
    let problem = Problem {
        views,
        image_size: (initial.model.image_width, initial.model.image_height),
        estimate_distortion,
        residual_len,
    };

    let mut model = initial.model.clone();
    if !estimate_distortion {
        // The distortion of the initial model still applies during
        // projection; it just is not optimized.
        model.dist = initial.model.dist;
    }
    let mut poses = initial.poses.clone();
    let mut mu = 1e-3;
    let mut improved_ever = false;

    for _iter in 0..MAX_ITERATIONS {
        let p0 = problem.pack(&model, &poses);
        let Some(r0) = problem.residuals(&p0, &poses) else {
            break;
        };
        let cost0 = r0.norm_squared();

        // Central-difference Jacobian of the residual vector.
        let n_params = p0.len();
        let mut jac = DMatrix::<f64>::zeros(problem.residual_len, n_params);
        let mut feasible = true;
        for j in 0..n_params {
            let h = 1e-6 * p0[j].abs().max(1.0);
            let mut plus = p0.clone();
            plus[j] += h;
            let mut minus = p0.clone();
            minus[j] -= h;
            let (Some(rp), Some(rm)) = (
                problem.residuals(&plus, &poses),
                problem.residuals(&minus, &poses),
            ) else {
                feasible = false;
                break;
            };
            let col = (rp - rm) / (2.0 * h);
            jac.set_column(j, &col);
        }
        if !feasible {
            break;
        }

        let jtj = jac.transpose() * &jac;
        let neg_jtr = -(jac.transpose() * &r0);

        let mut accepted = false;
        for _attempt in 0..12 {
            let mut damped = jtj.clone();
            for i in 0..n_params {
                damped[(i, i)] += mu * jtj[(i, i)].max(1e-12);
            }
            let Some(chol) = damped.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let delta = chol.solve(&neg_jtr);
            let candidate = &p0 + &delta;
            let Some((cand_model, cand_poses)) = problem.unpack(&candidate, &poses) else {
                mu *= 10.0;
                continue;
            };
            let repacked = problem.pack(&cand_model, &cand_poses);
            let Some(r1) = problem.residuals(&repacked, &cand_poses) else {
                mu *= 10.0;
                continue;
            };
            let cost1 = r1.norm_squared();
            if cost1 < cost0 {
                model = cand_model;
                poses = cand_poses;
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                improved_ever = true;
                if (cost0 - cost1) <= COST_TOLERANCE * cost0.max(f64::MIN_POSITIVE) {
                    let rms = reprojection_error(views, &model, &poses)?.rms;
                    return Ok(CalibrationResult {
                        model,
                        poses,
                        rms_reprojection: rms,
                    });
                }
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }

    if !improved_ever {
        // No step reduced the cost; hand the caller's result back.
        return Ok(initial.clone());
    }
    let rms = reprojection_error(views, &model, &poses)?.rms;
    Ok(CalibrationResult {
        model,
        poses,
        rms_reprojection: rms,
    })
}
