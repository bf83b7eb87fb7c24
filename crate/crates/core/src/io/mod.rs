//! Bit-exact file codecs shared by all stages: binary/ASCII PGM, ASCII PLY,
//! and the JSON manifest/calibration/correspondence/view/scene schemas.
//!
//! All codecs are pure byte/string transforms; touching the file system is
//! the CLI layer's job. Writers are byte-deterministic for equal inputs.

mod json;
mod pgm;
mod ply;

pub use json::{
    from_json_str, read_calib, read_corr, read_manifest, read_scene, read_view, to_json_string,
    write_calib, write_corr, write_manifest, write_scene, write_view, CalibFile, CorrHeader,
    FrameEntry, RigSpec, SceneFile, StackManifest, SurfaceSpec, ViewFile, CORR_LAYOUT,
};
pub use pgm::{read_pgm, write_pgm};
pub use ply::{read_ply, write_ply, PlyReadResult};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated body: expected {expected} {unit}, got {got}")]
    TruncatedBody {
        expected: usize,
        got: usize,
        unit: &'static str,
    },
    #[error("unsupported maxval {0} (must be 1..=255)")]
    UnsupportedMaxval(u32),
    #[error("malformed body: {0}")]
    MalformedBody(String),
    #[error("element count mismatch: header says {expected}, body has {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
}
