//! Checkerboard corner transfer from camera to projector coordinates via
//! local homographies over the decoded correspondence map.

use super::{estimate_homography, CalibrationError, CalibrationView};
use crate::geometry::PixelPoint;
use nalgebra::Vector3;

/// Minimum number of valid decoded pixels required in a corner's window.
pub const MIN_SUPPORT: usize = 20;

/// Per-corner transfer outcome: `points[i]` is the projector-space corner,
/// `None` when the corner was dropped for insufficient support (its index
/// then appears in `dropped`).
#[derive(Debug, Clone, PartialEq)]
pub struct TransferredCorners {
    pub points: Vec<Option<PixelPoint>>,
    pub dropped: Vec<usize>,
}

impl TransferredCorners {
    pub fn transferred_count(&self) -> usize {
        self.points.iter().filter(|p| p.is_some()).count()
    }
}

/// For each camera-space corner of the view, fits a homography
/// (camera px → projector px) over the valid decoded pixels inside the
/// square window of `window_radius` around it and maps the corner through
/// it. Corners whose window holds fewer than [`MIN_SUPPORT`] valid pixels
/// (or a degenerate configuration) are dropped and reported.
pub fn transfer_corners_local_homography(
    view: &CalibrationView,
    window_radius: usize,
) -> Result<TransferredCorners, CalibrationError> {
    let corr = view
        .correspondence
        .as_ref()
        .ok_or(CalibrationError::MissingCorrespondence)?;

    let mut points = Vec::with_capacity(view.image_points.len());
    let mut dropped = Vec::new();
    for (index, corner) in view.image_points.iter().enumerate() {
        let col0 = corner.u.floor() as i64;
        let row0 = corner.v.floor() as i64;
        let mut src = Vec::new();
        let mut dst = Vec::new();
        let r = window_radius as i64;
        for row in (row0 - r).max(0)..=(row0 + r).min(corr.height as i64 - 1) {
            for col in (col0 - r).max(0)..=(col0 + r).min(corr.width as i64 - 1) {
                let (c, w) = (col as usize, row as usize);
                if !corr.is_valid(c, w) {
                    continue;
                }
                let i = corr.index(c, w);
                src.push([col as f64 + 0.5, row as f64 + 0.5]);
                dst.push([corr.proj_x[i], corr.proj_y[i]]);
            }
        }
        if src.len() < MIN_SUPPORT {
            points.push(None);
            dropped.push(index);
            continue;
        }
        match estimate_homography(&src, &dst) {
            Ok(h) => {
                let v = h * Vector3::new(corner.u, corner.v, 1.0);
                points.push(Some(PixelPoint::new(v[0] / v[2], v[1] / v[2])));
            }
            Err(_) => {
                points.push(None);
                dropped.push(index);
            }
        }
    }
    Ok(TransferredCorners { points, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{CorrespondenceMap, PixelStatus};
    use crate::geometry::Mat3;
    use nalgebra::Vector3;

    /// Correspondence map whose field is a single global homography.
    fn projective_map(h: &Mat3, width: usize, height: usize) -> CorrespondenceMap {
        let mut corr = CorrespondenceMap::empty(width, height, 1920, 1080);
        corr.has_x = true;
        corr.has_y = true;
        for row in 0..height {
            for col in 0..width {
                let p = h * Vector3::new(col as f64 + 0.5, row as f64 + 0.5, 1.0);
                let i = corr.index(col, row);
                corr.proj_x[i] = p[0] / p[2];
                corr.proj_y[i] = p[1] / p[2];
                corr.status[i] = PixelStatus::Valid;
            }
        }
        corr
    }

    fn view_with_map(corr: CorrespondenceMap, corners: Vec<PixelPoint>) -> CalibrationView {
        let board = corners.iter().map(|c| [c.u, c.v]).collect();
        let mut view = CalibrationView::new(board, corners);
        view.correspondence = Some(corr);
        view
    }

    #[test]
    fn local_equals_global_on_projective_field() {
        let h = Mat3::new(1.4, 0.02, 300.0, -0.03, 1.5, 120.0, 1e-5, -2e-5, 1.0);
        let corr = projective_map(&h, 160, 120);
        let corners = vec![
            PixelPoint::new(40.25, 30.75),
            PixelPoint::new(80.0, 60.5),
            PixelPoint::new(120.6, 90.1),
        ];
        let view = view_with_map(corr, corners.clone());
        let result = transfer_corners_local_homography(&view, 30).unwrap();
        assert!(result.dropped.is_empty());
        for (corner, transferred) in corners.iter().zip(&result.points) {
            let expected = h * Vector3::new(corner.u, corner.v, 1.0);
            let expected = PixelPoint::new(expected[0] / expected[2], expected[1] / expected[2]);
            let got = transferred.unwrap();
            assert!(
                got.distance_to(&expected) < 1e-4,
                "corner {corner:?}: got {got:?}, expected {expected:?}"
            );
        }
    }

    #[test]
    fn shadowed_window_is_dropped_with_insufficient_support() {
        let h = Mat3::identity();
        let mut corr = projective_map(&h, 160, 120);
        // Fully shadow a region around the second corner.
        for row in 50..120 {
            for col in 90..160 {
                let i = corr.index(col, row);
                corr.status[i] = PixelStatus::LowDirect;
            }
        }
        let corners = vec![PixelPoint::new(30.0, 25.0), PixelPoint::new(130.0, 90.0)];
        let view = view_with_map(corr, corners);
        let result = transfer_corners_local_homography(&view, 20).unwrap();
        assert_eq!(result.dropped, vec![1]);
        assert!(result.points[0].is_some());
        assert!(result.points[1].is_none());
    }

    #[test]
    fn missing_correspondence_is_an_error() {
        let view = CalibrationView::new(vec![[0.0, 0.0]; 4], vec![PixelPoint::new(0.0, 0.0); 4]);
        assert!(matches!(
            transfer_corners_local_homography(&view, 30),
            Err(CalibrationError::MissingCorrespondence)
        ));
    }
}
