//! Rigid point-cloud registration.
//!
//! The closed-form SVD fit from known correspondences is the single
//! minimizing step everywhere; ICP alternates it with one of three
//! correspondence estimators (closest point, normal shooting, projective
//! data association). Point-plane error is available as an evaluation
//! metric only. Turntable sequences are stitched incrementally with
//! nominal-step seeding.

mod correspond;
mod icp;
mod kdtree;
mod metrics;
mod rigid;

pub use correspond::{
    correspond_closest, correspond_normal_shoot, correspond_projective, estimate_normals,
    Pairs, ProjectiveRig,
};
pub use icp::{icp, stitch_sequence, IcpParams, IcpReport, StitchParams, StitchReport, StitchVoxel};
pub use kdtree::KdTree3;
pub use metrics::{error_point_plane, error_point_point};
pub use rigid::rigid_from_correspondences;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegistrationError {
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("cloud of {points} points is too small for k = {k}")]
    TooFewPoints { points: usize, k: usize },
    #[error("source cloud has no normals")]
    MissingNormals,
    #[error("target cloud has no per-pixel provenance")]
    MissingProvenance,
    #[error("projective correspondence needs a rig in IcpParams")]
    MissingRig,
    #[error("no pairs to evaluate")]
    EmptyPairs,
    #[error("iteration {iteration} produced no correspondences")]
    NoCorrespondences { iteration: usize },
    #[error("stitching step {index} failed: {source}")]
    StepFailed {
        index: usize,
        source: Box<RegistrationError>,
    },
}

/// How ICP pairs points each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrespondenceMode {
    ClosestPoint,
    NormalShooting,
    Projective,
}

/// Which error the ICP trace reports and terminates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMetric {
    PointPoint,
    PointPlane,
}
