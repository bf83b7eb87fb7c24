//! Synthetic camera–projector scene simulator.
//!
//! Renders what the camera would capture while the projector shows a given
//! pattern, with exact per-pixel ground truth (hit depth, continuous
//! projector coordinates, shadow/visibility flags). Pattern sampling is
//! nearest-neighbor and shading is single-bounce
//! (`albedo·pattern + ambient`, plus an optional uniform inter-reflection
//! constant on projector-lit pixels), which keeps the ground truth exact;
//! the constant inter-reflection term is only a crude stand-in for real
//! indirect light. Deterministic: identical inputs and seeds produce
//! bit-identical images.

mod noise;
mod render;
mod shapes;
mod turntable;

pub use noise::{add_noise, add_outliers};
pub use render::{ground_truth, render, render_stack, GroundTruth};
pub use shapes::{cup_mesh, rectangle_mesh, two_plane_occluder};
pub use turntable::{turntable_views, TurntableAxis, TurntableView};

use crate::geometry::{CameraModel, RigidTransform, Vec3, WorldPoint};
use nalgebra::Unit;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimulatorError {
    #[error("invalid surface: {0}")]
    InvalidSurface(String),
    #[error("invalid rig: {0}")]
    InvalidRig(String),
}

/// Scene geometry.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceKind {
    Plane {
        point: WorldPoint,
        normal: Unit<Vec3>,
    },
    Sphere {
        center: WorldPoint,
        radius: f64,
    },
    Mesh {
        vertices: Vec<WorldPoint>,
        triangles: Vec<[usize; 3]>,
    },
}

/// Scene surface with its shading constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub kind: SurfaceKind,
    /// Fraction of projector light reflected, in [0, 1].
    pub albedo: f64,
    /// Intensity every pixel receives regardless of the projector.
    pub ambient: f64,
    /// Extra intensity on projector-lit pixels (uniform inter-reflection
    /// stand-in).
    pub interreflection: f64,
}

impl Surface {
    pub fn new(kind: SurfaceKind, albedo: f64, ambient: f64) -> Result<Self, SimulatorError> {
        let surface = Self {
            kind,
            albedo,
            ambient,
            interreflection: 0.0,
        };
        surface.validate()?;
        Ok(surface)
    }

    pub fn with_interreflection(mut self, value: f64) -> Self {
        self.interreflection = value;
        self
    }

    pub fn validate(&self) -> Result<(), SimulatorError> {
        if !(0.0..=1.0).contains(&self.albedo) {
            return Err(SimulatorError::InvalidSurface(format!(
                "albedo {} outside [0, 1]",
                self.albedo
            )));
        }
        match &self.kind {
            SurfaceKind::Sphere { radius, .. } if *radius <= 0.0 => Err(
                SimulatorError::InvalidSurface(format!("sphere radius {radius} must be positive")),
            ),
            SurfaceKind::Mesh {
                vertices,
                triangles,
            } => {
                for t in triangles {
                    if t.iter().any(|&i| i >= vertices.len()) {
                        return Err(SimulatorError::InvalidSurface(format!(
                            "triangle {t:?} indexes past {} vertices",
                            vertices.len()
                        )));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The surface moved by a rigid transform (plane point/normal, sphere
    /// center, or mesh vertices).
    pub fn transformed(&self, t: &RigidTransform) -> Surface {
        let kind = match &self.kind {
            SurfaceKind::Plane { point, normal } => SurfaceKind::Plane {
                point: t.apply(point),
                normal: Unit::new_normalize(t.rotate(normal)),
            },
            SurfaceKind::Sphere { center, radius } => SurfaceKind::Sphere {
                center: t.apply(center),
                radius: *radius,
            },
            SurfaceKind::Mesh {
                vertices,
                triangles,
            } => SurfaceKind::Mesh {
                vertices: vertices.iter().map(|v| t.apply(v)).collect(),
                triangles: triangles.clone(),
            },
        };
        Surface {
            kind,
            ..self.clone()
        }
    }

    /// Centroid of the geometry (plane point, sphere center, mesh vertex
    /// mean).
    pub fn centroid(&self) -> WorldPoint {
        match &self.kind {
            SurfaceKind::Plane { point, .. } => *point,
            SurfaceKind::Sphere { center, .. } => *center,
            SurfaceKind::Mesh { vertices, .. } => {
                let sum = vertices
                    .iter()
                    .fold(Vec3::zeros(), |acc, v| acc + v.coords);
                WorldPoint::from(sum / vertices.len().max(1) as f64)
            }
        }
    }
}

/// Camera–projector pair with world poses.
#[derive(Debug, Clone, PartialEq)]
pub struct Rig {
    pub camera: CameraModel,
    pub camera_pose: RigidTransform,
    pub projector: CameraModel,
    pub projector_pose: RigidTransform,
}

impl Rig {
    pub fn validate(&self) -> Result<(), SimulatorError> {
        if self.baseline() <= 0.0 {
            return Err(SimulatorError::InvalidRig(
                "camera and projector centers coincide (zero baseline)".into(),
            ));
        }
        Ok(())
    }

    /// Distance between the camera and projector centers.
    pub fn baseline(&self) -> f64 {
        (self.camera_pose.center() - self.projector_pose.center()).norm()
    }

    /// Camera→projector transform (the triangulation extrinsic).
    pub fn cam_to_proj(&self) -> RigidTransform {
        self.projector_pose.compose(&self.camera_pose.invert())
    }

    /// The calibrated-rig view of this simulator rig, world = camera frame.
    pub fn scan_rig(&self) -> crate::triangulation::ScanRig {
        crate::triangulation::ScanRig {
            camera: self.camera.clone(),
            projector: self.projector.clone(),
            cam_to_proj: self.cam_to_proj(),
        }
    }
}
