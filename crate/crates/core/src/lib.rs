//! Structured-light 3D scanning toolkit.
//!
//! A camera–projector pair forms a stereo rig in which the projector is a
//! "reverse camera": instead of observing pixels it emits coded patterns, so
//! every camera pixel can be matched to the projector row/column that lit it.
//! This crate implements the full pipeline on top of that idea:
//!
//! - [`geometry`] — pinhole model, radial/tangential lens distortion, rigid
//!   transforms, projection.
//! - [`codec`] — gray-code and phase-shift pattern generation and robust
//!   decoding into per-pixel camera→projector correspondences.
//! - [`calibration`] — Zhang-style camera calibration, projector calibration
//!   via local homographies over decoded correspondences, stereo extrinsics.
//! - [`triangulation`] — homogeneous linear least-squares recovery of 3D
//!   points from correspondences.
//! - [`registration`] — closed-form rigid fitting, ICP with three
//!   correspondence strategies, turntable sequence stitching.
//! - [`simulator`] — synthetic scene renderer with exact ground truth, used
//!   to verify the pipeline end to end.
//! - [`io`] — PGM, ASCII PLY, and JSON file codecs shared by all stages.
//!
//! Scene units are abstract; docs and defaults assume millimetres.

pub mod calibration;
pub mod cloud;
pub mod codec;
pub mod geometry;
pub mod image;
pub mod io;
pub mod registration;
pub mod simulator;
pub mod triangulation;

pub use cloud::PointCloud;
pub use geometry::{CameraModel, DistortionCoeffs, PixelPoint, RigidTransform, WorldPoint};
pub use image::GrayImage;
