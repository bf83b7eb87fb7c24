//! Structured-light pattern codecs.
//!
//! Generation produces projector-resolution stacks of gray-code stripe
//! patterns (optionally with per-bit inverses and white/black references)
//! and three-step phase-shifted sinusoids. Decoding turns captured
//! camera-resolution stacks into a per-pixel [`CorrespondenceMap`] using
//! direct/global light separation and the robust bit-classification rules,
//! with an optional phase-shift refinement pass whose fringe orders come
//! from the gray decode.

mod gray;
mod phase;

pub use gray::{
    classify_bit, decode_gray, decode_gray_auto, gray_bit, gray_bits, gray_decode, gray_encode,
    generate_gray_stack, select_high_frequency_frames, separate_direct_global, BitClass,
};
pub use phase::{
    decode_phase, fringe_order, fringe_orders_from_gray, generate_phase_stack, phase_modulation,
    refine_with_phase, unwrap_phase, unwrap_to_coordinate, wrapped_phase, PhasePatternParams,
    WrappedPhaseMap, PHASE_SHIFTS,
};

use crate::image::GrayImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("index {index} does not fit in {bits} gray-code bits")]
    OutOfRange { index: u32, bits: u32 },
    #[error("malformed gray code: {0}")]
    MalformedCode(String),
    #[error("pattern would clip: bias {bias} ± amplitude {amplitude} exceeds [0, 255]")]
    ClippingError { bias: f64, amplitude: f64 },
    #[error("stack mismatch: {0}")]
    StackMismatch(String),
}

/// Which projector coordinate a pattern encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// Role of a single frame within a pattern stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameKind {
    #[serde(rename = "gray-x")]
    GrayX,
    #[serde(rename = "gray-y")]
    GrayY,
    #[serde(rename = "gray-x-inverse")]
    GrayXInverse,
    #[serde(rename = "gray-y-inverse")]
    GrayYInverse,
    #[serde(rename = "phase-x")]
    PhaseX,
    #[serde(rename = "phase-y")]
    PhaseY,
    #[serde(rename = "reference-white")]
    ReferenceWhite,
    #[serde(rename = "reference-black")]
    ReferenceBlack,
}

impl FrameKind {
    pub fn gray_pattern(axis: Axis) -> Self {
        match axis {
            Axis::X => FrameKind::GrayX,
            Axis::Y => FrameKind::GrayY,
        }
    }

    pub fn gray_inverse(axis: Axis) -> Self {
        match axis {
            Axis::X => FrameKind::GrayXInverse,
            Axis::Y => FrameKind::GrayYInverse,
        }
    }

    pub fn phase(axis: Axis) -> Self {
        match axis {
            Axis::X => FrameKind::PhaseX,
            Axis::Y => FrameKind::PhaseY,
        }
    }
}

/// One projected or captured image plus its role metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternFrame {
    pub kind: FrameKind,
    /// Gray-code bit index (0 = most significant) for gray frames.
    pub bit: Option<u32>,
    /// Shift index 0..3 for phase frames, in the order −2π/3, 0, +2π/3.
    pub shift: Option<u32>,
    pub image: GrayImage,
}

/// Ordered stack of projected (projector-resolution) or captured
/// (camera-resolution) patterns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PatternStack {
    pub frames: Vec<PatternFrame>,
    pub projector_width: u32,
    pub projector_height: u32,
    /// Fringe width in projector pixels, for phase frames.
    pub fringe_width: Option<u32>,
}

impl PatternStack {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Dimensions shared by every frame, or an error if they disagree.
    pub fn image_dimensions(&self) -> Result<(usize, usize), CodecError> {
        let first = self
            .frames
            .first()
            .ok_or_else(|| CodecError::StackMismatch("empty stack".into()))?;
        let dims = (first.image.width(), first.image.height());
        for f in &self.frames {
            if (f.image.width(), f.image.height()) != dims {
                return Err(CodecError::StackMismatch(format!(
                    "frame dimensions {}x{} differ from {}x{}",
                    f.image.width(),
                    f.image.height(),
                    dims.0,
                    dims.1
                )));
            }
        }
        Ok(dims)
    }

    pub fn frames_of(&self, kind: FrameKind) -> impl Iterator<Item = &PatternFrame> {
        self.frames.iter().filter(move |f| f.kind == kind)
    }

    /// Number of gray-code bits present for an axis.
    pub fn gray_bit_count(&self, axis: Axis) -> u32 {
        self.frames_of(FrameKind::gray_pattern(axis)).count() as u32
    }

    pub fn frame(&self, kind: FrameKind, bit: Option<u32>) -> Option<&PatternFrame> {
        self.frames
            .iter()
            .find(|f| f.kind == kind && f.bit == bit)
    }

    pub fn has_axis(&self, axis: Axis) -> bool {
        self.gray_bit_count(axis) > 0
    }

    /// Appends another stack's frames, skipping duplicate reference frames.
    pub fn merge(&mut self, other: PatternStack) {
        for frame in other.frames {
            let duplicate_reference = matches!(
                frame.kind,
                FrameKind::ReferenceWhite | FrameKind::ReferenceBlack
            ) && self.frames.iter().any(|f| f.kind == frame.kind);
            if !duplicate_reference {
                self.frames.push(frame);
            }
        }
        if self.fringe_width.is_none() {
            self.fringe_width = other.fringe_width;
        }
    }
}

/// Reason a camera pixel failed to decode. `Valid` marks decoded pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[repr(u8)]
pub enum PixelStatus {
    Valid = 0,
    /// Some gray bit could not be classified as one or zero.
    UncertainBit = 1,
    /// Phase modulation amplitude below threshold.
    LowModulation = 2,
    /// Direct illumination below the minimum threshold `m`.
    LowDirect = 3,
    /// Pixel never decoded (missing data).
    NoData = 4,
    /// Decoded coordinate fell outside the projector frame.
    OutOfRange = 5,
}

impl PixelStatus {
    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => PixelStatus::Valid,
            1 => PixelStatus::UncertainBit,
            2 => PixelStatus::LowModulation,
            3 => PixelStatus::LowDirect,
            4 => PixelStatus::NoData,
            5 => PixelStatus::OutOfRange,
            _ => return None,
        })
    }
}

/// Per-camera-pixel decoded projector coordinates, validity, and
/// diagnostics. Planes are row-major at camera resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceMap {
    pub width: usize,
    pub height: usize,
    pub projector_width: u32,
    pub projector_height: u32,
    pub has_x: bool,
    pub has_y: bool,
    /// Projector coordinates (f64 in memory; files store f32 planes).
    pub proj_x: Vec<f64>,
    pub proj_y: Vec<f64>,
    pub status: Vec<PixelStatus>,
    /// Direct-light estimate per pixel.
    pub direct: Vec<f32>,
    /// Global-light estimate per pixel.
    pub global: Vec<f32>,
    /// Fringe order K per pixel, present after phase refinement.
    pub fringe_order: Option<Vec<i32>>,
}

impl CorrespondenceMap {
    pub fn empty(width: usize, height: usize, projector_width: u32, projector_height: u32) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            projector_width,
            projector_height,
            has_x: false,
            has_y: false,
            proj_x: vec![0.0; n],
            proj_y: vec![0.0; n],
            status: vec![PixelStatus::NoData; n],
            direct: vec![0.0; n],
            global: vec![0.0; n],
            fringe_order: None,
        }
    }

    #[inline]
    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn is_valid(&self, col: usize, row: usize) -> bool {
        self.status[self.index(col, row)] == PixelStatus::Valid
    }

    pub fn valid_count(&self) -> usize {
        self.status
            .iter()
            .filter(|s| **s == PixelStatus::Valid)
            .count()
    }
}
