//! Normalized direct linear transform for plane homographies.

use super::CalibrationError;
use crate::geometry::Mat3;
use nalgebra::{DMatrix, Vector3};

/// Similarity normalization: centroid to the origin, mean distance √2.
fn normalizing_transform(points: &[[f64; 2]]) -> Mat3 {
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
    let (mx, my) = (mx / n, my / n);
    let mean_dist = points
        .iter()
        .map(|p| ((p[0] - mx).powi(2) + (p[1] - my).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    let s = if mean_dist > 0.0 {
        2.0f64.sqrt() / mean_dist
    } else {
        1.0
    };
    Mat3::new(s, 0.0, -s * mx, 0.0, s, -s * my, 0.0, 0.0, 1.0)
}

fn apply_h(h: &Mat3, p: [f64; 2]) -> [f64; 2] {
    let v = h * Vector3::new(p[0], p[1], 1.0);
    [v[0] / v[2], v[1] / v[2]]
}

/// Estimates the 3×3 homography mapping `src` to `dst` (both planar point
/// lists in one-to-one order) by normalized DLT: both sets are isotropically
/// scaled, the 2N×9 design matrix is solved by SVD, and the result is
/// denormalized and scaled so `H[2][2] = 1` when that entry is nonzero.
pub fn estimate_homography(src: &[[f64; 2]], dst: &[[f64; 2]]) -> Result<Mat3, CalibrationError> {
    if src.len() != dst.len() || src.len() < 4 {
        return Err(CalibrationError::Degenerate(format!(
            "need ≥ 4 paired points, got {} and {}",
            src.len(),
            dst.len()
        )));
    }
    let t_src = normalizing_transform(src);
    let t_dst = normalizing_transform(dst);

    // Padded to at least 9 rows so the thin SVD carries the full right
    // singular basis including the null vector.
    let mut a = DMatrix::<f64>::zeros((2 * src.len()).max(9), 9);
    for (i, (s, d)) in src.iter().zip(dst).enumerate() {
        let [x, y] = apply_h(&t_src, *s);
        let [u, v] = apply_h(&t_dst, *d);
        a.row_mut(2 * i).copy_from_slice(&[
            -x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u,
        ]);
        a.row_mut(2 * i + 1).copy_from_slice(&[
            0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v,
        ]);
    }

    let svd = a.svd(true, true);
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
    });
    // Rank must be 8: a second vanishing singular value means the points do
    // not determine a homography (e.g. collinear configurations).
    if svd.singular_values[order[7]] <= 1e-12 * svd.singular_values[order[0]] {
        return Err(CalibrationError::Degenerate(
            "design matrix rank < 8".into(),
        ));
    }
    let v_t = svd.v_t.as_ref().expect("svd v_t");
    let h = v_t.row(order[8]);
    let h_norm = Mat3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);

    let t_dst_inv = t_dst.try_inverse().expect("similarity is invertible");
    let mut hmtx = t_dst_inv * h_norm * t_src;
    if hmtx[(2, 2)].abs() > 1e-12 {
        hmtx /= hmtx[(2, 2)];
    }
    Ok(hmtx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const UNIT_SQUARE: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

    #[test]
    fn identity_mapping() {
        let h = estimate_homography(&UNIT_SQUARE, &UNIT_SQUARE).unwrap();
        assert_relative_eq!(h, Mat3::identity(), epsilon = 1e-10);
    }

    #[test]
    fn pure_translation() {
        let dst: Vec<[f64; 2]> = UNIT_SQUARE.iter().map(|p| [p[0] + 2.0, p[1] + 3.0]).collect();
        let h = estimate_homography(&UNIT_SQUARE, &dst).unwrap();
        let expected = Mat3::new(1.0, 0.0, 2.0, 0.0, 1.0, 3.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(h, expected, epsilon = 1e-10);
    }

    #[test]
    fn recovers_random_projective_map() {
        let truth = Mat3::new(0.9, -0.15, 4.0, 0.2, 1.1, -2.5, 1e-4, -2e-4, 1.0);
        let mut src = Vec::new();
        let mut dst = Vec::new();
        for i in 0..5 {
            for j in 0..4 {
                let p = [i as f64 * 25.0, j as f64 * 30.0];
                src.push(p);
                dst.push(apply_h(&truth, p));
            }
        }
        let h = estimate_homography(&src, &dst).unwrap();
        assert_relative_eq!(h, truth, epsilon = 1e-8);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let src: Vec<[f64; 2]> = (0..6).map(|i| [i as f64, 2.0 * i as f64]).collect();
        let dst = src.clone();
        assert!(matches!(
            estimate_homography(&src, &dst),
            Err(CalibrationError::Degenerate(_))
        ));
    }

    #[test]
    fn invariant_to_input_scaling() {
        let truth = Mat3::new(1.2, 0.1, -3.0, -0.2, 0.8, 5.0, 2e-4, 1e-4, 1.0);
        let mut src = Vec::new();
        let mut dst = Vec::new();
        for i in 0..4 {
            for j in 0..5 {
                let p = [i as f64 * 12.0 - 20.0, j as f64 * 9.0 + 3.0];
                src.push(p);
                dst.push(apply_h(&truth, p));
            }
        }
        let h1 = estimate_homography(&src, &dst).unwrap();
        let src_scaled: Vec<[f64; 2]> = src.iter().map(|p| [p[0] * 250.0, p[1] * 250.0]).collect();
        let scale = Mat3::new(250.0, 0.0, 0.0, 0.0, 250.0, 0.0, 0.0, 0.0, 1.0);
        let h2 = estimate_homography(&src_scaled, &dst).unwrap() * scale;
        let h2 = h2 / h2[(2, 2)];
        assert_relative_eq!(h1, h2, epsilon = 1e-8);
    }
}
