//! Point clouds with optional per-point normals and source-pixel provenance.

use crate::geometry::{RigidTransform, Vec3, WorldPoint};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CloudError {
    #[error("normals count {normals} does not match point count {points}")]
    NormalCountMismatch { normals: usize, points: usize },
    #[error("normal {index} is not unit length (norm {norm})")]
    NonUnitNormal { index: usize, norm: f64 },
    #[error("provenance count {provenance} does not match point count {points}")]
    ProvenanceCountMismatch { provenance: usize, points: usize },
}

/// A 3D point cloud. `provenance[i]` is the `(col, row)` camera pixel the
/// point was triangulated or rendered from, when known.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<WorldPoint>,
    pub normals: Option<Vec<Vec3>>,
    pub provenance: Option<Vec<[u32; 2]>>,
}

impl PointCloud {
    pub fn new(points: Vec<WorldPoint>) -> Self {
        Self {
            points,
            normals: None,
            provenance: None,
        }
    }

    /// Attaches normals, enforcing unit length within 1e-9.
    pub fn with_normals(mut self, normals: Vec<Vec3>) -> Result<Self, CloudError> {
        if normals.len() != self.points.len() {
            return Err(CloudError::NormalCountMismatch {
                normals: normals.len(),
                points: self.points.len(),
            });
        }
        for (index, n) in normals.iter().enumerate() {
            let norm = n.norm();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(CloudError::NonUnitNormal { index, norm });
            }
        }
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn with_provenance(mut self, provenance: Vec<[u32; 2]>) -> Result<Self, CloudError> {
        if provenance.len() != self.points.len() {
            return Err(CloudError::ProvenanceCountMismatch {
                provenance: provenance.len(),
                points: self.points.len(),
            });
        }
        self.provenance = Some(provenance);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<WorldPoint> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self
            .points
            .iter()
            .fold(Vec3::zeros(), |acc, p| acc + p.coords);
        Some(WorldPoint::from(sum / self.points.len() as f64))
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> Option<(WorldPoint, WorldPoint)> {
        let first = *self.points.first()?;
        let mut lo = first;
        let mut hi = first;
        for p in &self.points {
            for i in 0..3 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        Some((lo, hi))
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        self.bounding_box()
            .map(|(lo, hi)| (hi - lo).norm())
            .unwrap_or(0.0)
    }

    /// Applies a rigid transform to points and (if present) normals,
    /// preserving provenance.
    pub fn transformed(&self, t: &RigidTransform) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| t.apply(p)).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| ns.iter().map(|n| t.rotate(n)).collect()),
            provenance: self.provenance.clone(),
        }
    }

    /// Concatenates `other` onto `self`. Normals/provenance survive only if
    /// both sides carry them.
    pub fn extend(&mut self, other: &PointCloud) {
        if let (Some(a), Some(b)) = (&mut self.normals, &other.normals) {
            a.extend_from_slice(b);
        } else {
            self.normals = None;
        }
        if let (Some(a), Some(b)) = (&mut self.provenance, &other.provenance) {
            a.extend_from_slice(b);
        } else {
            self.provenance = None;
        }
        self.points.extend_from_slice(&other.points);
    }
}
