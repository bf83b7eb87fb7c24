//! JSON schemas: pattern-stack manifests, calibration files, correspondence
//! headers (with their raw binary companion), calibration view files, and
//! simulator scene descriptions. All carry `"schema_version": 1`; unknown
//! fields are preserved across read/write.

use super::IoError;
use crate::codec::{CorrespondenceMap, FrameKind, PixelStatus};
use crate::geometry::{CameraModel, RigidTransform};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Deserializes JSON, reporting the path of the offending field on error.
pub fn from_json_str<T: DeserializeOwned>(s: &str) -> Result<T, IoError> {
    let de = &mut serde_json::Deserializer::from_str(s);
    serde_path_to_error::deserialize(de).map_err(|e| IoError::SchemaViolation {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("JSON serialization cannot fail");
    out.push('\n');
    out
}

/// One image of a projected or captured stack, as listed in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub file: String,
    pub kind: FrameKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bit: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<u32>,
}

/// Manifest describing a pattern stack stored as one PGM per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackManifest {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub projector_width: u32,
    pub projector_height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fringe_width: Option<u32>,
    pub frames: Vec<FrameEntry>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Default for StackManifest {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            projector_width: 0,
            projector_height: 0,
            fringe_width: None,
            frames: Vec::new(),
            extra: Map::new(),
        }
    }
}

pub fn read_manifest(s: &str) -> Result<StackManifest, IoError> {
    from_json_str(s)
}

pub fn write_manifest(manifest: &StackManifest) -> String {
    to_json_string(manifest)
}

/// Calibration output: intrinsics, per-view poses, and RMS reprojection
/// errors for whichever devices were calibrated, plus the camera→projector
/// extrinsic when available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibFile {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera_poses: Option<Vec<RigidTransform>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera_rms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projector: Option<CameraModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projector_poses: Option<Vec<RigidTransform>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projector_rms: Option<f64>,
    /// Camera→projector rigid transform.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cam_to_proj: Option<RigidTransform>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Default for CalibFile {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            camera: None,
            camera_poses: None,
            camera_rms: None,
            projector: None,
            projector_poses: None,
            projector_rms: None,
            cam_to_proj: None,
            extra: Map::new(),
        }
    }
}

pub fn read_calib(s: &str) -> Result<CalibFile, IoError> {
    from_json_str(s)
}

pub fn write_calib(calib: &CalibFile) -> String {
    to_json_string(calib)
}

/// Fixed plane layout of the raw correspondence companion file.
pub const CORR_LAYOUT: &str = "proj_x:f32le,proj_y:f32le,status:u8";

/// JSON half of a stored correspondence map; the dense planes live in the
/// companion raw file named by `data_file`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrHeader {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub width: usize,
    pub height: usize,
    pub projector_width: u32,
    pub projector_height: u32,
    pub has_x: bool,
    pub has_y: bool,
    pub data_file: String,
    pub layout: String,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// Serializes a correspondence map as (JSON header, raw plane bytes). The
/// raw file is `width·height` little-endian f32 proj_x values, then the
/// same for proj_y, then one status byte per pixel. Stored coordinates are
/// rounded to f32; decoded pixel-center coordinates survive exactly.
pub fn write_corr(map: &CorrespondenceMap, data_file: &str) -> (String, Vec<u8>) {
    let header = CorrHeader {
        schema_version: SCHEMA_VERSION,
        width: map.width,
        height: map.height,
        projector_width: map.projector_width,
        projector_height: map.projector_height,
        has_x: map.has_x,
        has_y: map.has_y,
        data_file: data_file.to_string(),
        layout: CORR_LAYOUT.to_string(),
        extra: Map::new(),
    };
    let n = map.width * map.height;
    let mut raw = Vec::with_capacity(n * 9);
    for v in &map.proj_x {
        raw.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    for v in &map.proj_y {
        raw.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    for s in &map.status {
        raw.push(*s as u8);
    }
    (to_json_string(&header), raw)
}

pub fn read_corr(header_json: &str, raw: &[u8]) -> Result<CorrespondenceMap, IoError> {
    let header: CorrHeader = from_json_str(header_json)?;
    if header.layout != CORR_LAYOUT {
        return Err(IoError::SchemaViolation {
            path: "layout".into(),
            message: format!("unsupported layout {:?}", header.layout),
        });
    }
    let n = header.width * header.height;
    let expected = n * 9;
    if raw.len() != expected {
        return Err(IoError::TruncatedBody {
            expected,
            got: raw.len(),
            unit: "bytes",
        });
    }
    let mut map = CorrespondenceMap::empty(
        header.width,
        header.height,
        header.projector_width,
        header.projector_height,
    );
    map.has_x = header.has_x;
    map.has_y = header.has_y;
    let f32_at = |offset: usize| {
        f32::from_le_bytes([raw[offset], raw[offset + 1], raw[offset + 2], raw[offset + 3]])
    };
    for i in 0..n {
        map.proj_x[i] = f32_at(i * 4) as f64;
        map.proj_y[i] = f32_at(n * 4 + i * 4) as f64;
        map.status[i] = PixelStatus::from_code(raw[n * 8 + i]).ok_or_else(|| {
            IoError::MalformedBody(format!("unknown status code {} at pixel {i}", raw[n * 8 + i]))
        })?;
    }
    Ok(map)
}

/// One calibration view: planar board points (board frame, Z = 0), their
/// observed camera pixels, and optionally the path of the decoded
/// correspondence map used for projector corner transfer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewFile {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub board: Vec<[f64; 2]>,
    pub image: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correspondence: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

pub fn read_view(s: &str) -> Result<ViewFile, IoError> {
    from_json_str(s)
}

pub fn write_view(view: &ViewFile) -> String {
    to_json_string(view)
}

/// Surface description in a scene file. `Cup` is a convenience generator
/// for the cylinder-plus-handle mesh fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SurfaceSpec {
    Plane {
        point: [f64; 3],
        normal: [f64; 3],
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    Mesh {
        vertices: Vec<[f64; 3]>,
        triangles: Vec<[usize; 3]>,
    },
    Cup {
        center: [f64; 3],
        radius: f64,
        height: f64,
    },
}

/// Camera/projector pair with poses, as embedded in scene files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigSpec {
    pub camera: CameraModel,
    pub camera_pose: RigidTransform,
    pub projector: CameraModel,
    pub projector_pose: RigidTransform,
}

/// Scene description: surface, shading constants, and the rig (inline or
/// referenced by path).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub surface: SurfaceSpec,
    pub albedo: f64,
    #[serde(default)]
    pub ambient: f64,
    #[serde(default)]
    pub interreflection: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rig: Option<RigSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rig_file: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

pub fn read_scene(s: &str) -> Result<SceneFile, IoError> {
    from_json_str(s)
}

pub fn write_scene(scene: &SceneFile) -> String {
    to_json_string(scene)
}
