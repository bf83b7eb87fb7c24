//! Three-step phase-shifted sinusoidal patterns: generation, wrapped-phase
//! decoding, and unwrapping with gray-code fringe orders.

use super::{Axis, CodecError, CorrespondenceMap, FrameKind, PatternFrame, PatternStack, PixelStatus};
use crate::image::{quantize_u8, GrayImage};
use std::f64::consts::{PI, TAU};

/// The three phase shifts, in frame order: −2π/3, 0, +2π/3.
pub const PHASE_SHIFTS: [f64; 3] = [-2.0 * PI / 3.0, 0.0, 2.0 * PI / 3.0];

/// Sinusoidal pattern parameters: intensity `bias ± amplitude` (the I′ and
/// I″ of the three-step model) and the fringe width in projector pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePatternParams {
    pub bias: f64,
    pub amplitude: f64,
    pub fringe_width: u32,
}

impl Default for PhasePatternParams {
    fn default() -> Self {
        Self {
            bias: 127.0,
            amplitude: 127.0,
            fringe_width: 20,
        }
    }
}

impl PhasePatternParams {
    pub fn validate(&self) -> Result<(), CodecError> {
        if self.bias + self.amplitude > 255.0 || self.bias - self.amplitude < 0.0 {
            return Err(CodecError::ClippingError {
                bias: self.bias,
                amplitude: self.amplitude,
            });
        }
        if self.fringe_width < 2 {
            return Err(CodecError::StackMismatch(format!(
                "fringe width {} too small",
                self.fringe_width
            )));
        }
        Ok(())
    }
}

/// Generates the three phase-shifted images for one axis. Column (or row)
/// `c` carries phase `φ = 2πc / fringe_width`; frame `k` paints
/// `bias + amplitude·cos(φ + shift_k)` rounded to 8 bits.
pub fn generate_phase_stack(
    projector_width: u32,
    projector_height: u32,
    axis: Axis,
    params: &PhasePatternParams,
) -> Result<PatternStack, CodecError> {
    params.validate()?;
    let (w, h) = (projector_width as usize, projector_height as usize);
    let mut frames = Vec::with_capacity(3);
    for (k, shift) in PHASE_SHIFTS.iter().enumerate() {
        let image = GrayImage::from_fn(w, h, |col, row| {
            let coord = match axis {
                Axis::X => col as f64,
                Axis::Y => row as f64,
            };
            let phi = TAU * coord / params.fringe_width as f64;
            quantize_u8(params.bias + params.amplitude * (phi + shift).cos())
        });
        frames.push(PatternFrame {
            kind: FrameKind::phase(axis),
            bit: None,
            shift: Some(k as u32),
            image,
        });
    }
    Ok(PatternStack {
        frames,
        projector_width,
        projector_height,
        fringe_width: Some(params.fringe_width),
    })
}

/// Wrapped phase in `[0, 2π)` from three intensities captured under the
/// shifts of [`PHASE_SHIFTS`]: the two-argument arctangent of
/// `(√3(I₁ − I₃), 2I₂ − I₁ − I₃)`.
#[inline]
pub fn wrapped_phase(i1: f64, i2: f64, i3: f64) -> f64 {
    let num = 3.0f64.sqrt() * (i1 - i3);
    let den = 2.0 * i2 - i1 - i3;
    let phi = num.atan2(den);
    if phi < 0.0 {
        phi + TAU
    } else {
        phi
    }
}

/// Modulation amplitude (the I″ estimate) of a three-intensity sample;
/// below-threshold pixels carry no usable phase.
#[inline]
pub fn phase_modulation(i1: f64, i2: f64, i3: f64) -> f64 {
    let num = 3.0f64.sqrt() * (i1 - i3);
    let den = 2.0 * i2 - i1 - i3;
    (num * num + den * den).sqrt() / 3.0
}

/// Per-pixel wrapped phase with validity.
#[derive(Debug, Clone, PartialEq)]
pub struct WrappedPhaseMap {
    pub width: usize,
    pub height: usize,
    pub phase: Vec<f64>,
    pub modulation: Vec<f64>,
    pub valid: Vec<bool>,
}

impl WrappedPhaseMap {
    #[inline]
    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }
}

/// Decodes three captured phase images into a wrapped phase map. Pixels
/// whose modulation amplitude falls below `modulation_threshold` are
/// marked invalid.
pub fn decode_phase(
    i1: &GrayImage,
    i2: &GrayImage,
    i3: &GrayImage,
    modulation_threshold: f64,
) -> Result<WrappedPhaseMap, CodecError> {
    if !(i1.same_dimensions(i2) && i2.same_dimensions(i3)) {
        return Err(CodecError::StackMismatch(
            "phase images differ in size".into(),
        ));
    }
    let (width, height) = (i1.width(), i1.height());
    let n = width * height;
    let mut phase = vec![0.0f64; n];
    let mut modulation = vec![0.0f64; n];
    let mut valid = vec![false; n];
    for i in 0..n {
        let (a, b, c) = (
            i1.as_slice()[i] as f64,
            i2.as_slice()[i] as f64,
            i3.as_slice()[i] as f64,
        );
        let m = phase_modulation(a, b, c);
        modulation[i] = m;
        if m >= modulation_threshold {
            phase[i] = wrapped_phase(a, b, c);
            valid[i] = true;
        }
    }
    Ok(WrappedPhaseMap {
        width,
        height,
        phase,
        modulation,
        valid,
    })
}

/// Absolute projector coordinate from a wrapped phase and its fringe order:
/// `fringe_width · (φ + 2πK) / 2π`.
#[inline]
pub fn unwrap_to_coordinate(phi: f64, k: i32, fringe_width: u32) -> f64 {
    fringe_width as f64 * (phi + TAU * k as f64) / TAU
}

/// Unwraps a whole phase map given per-pixel fringe orders. Invalid phase
/// pixels produce NaN.
pub fn unwrap_phase(
    wrapped: &WrappedPhaseMap,
    fringe_orders: &[i32],
    fringe_width: u32,
) -> Result<Vec<f64>, CodecError> {
    if fringe_orders.len() != wrapped.phase.len() {
        return Err(CodecError::StackMismatch(format!(
            "fringe-order plane size {} does not match phase map size {}",
            fringe_orders.len(),
            wrapped.phase.len()
        )));
    }
    Ok(wrapped
        .phase
        .iter()
        .zip(&wrapped.valid)
        .zip(fringe_orders)
        .map(|((phi, ok), k)| {
            if *ok {
                unwrap_to_coordinate(*phi, *k, fringe_width)
            } else {
                f64::NAN
            }
        })
        .collect())
}

/// Fringe order from a gray-decoded coordinate, snapped toward phase
/// consistency when the wrapped phase is available: near a fringe boundary
/// the gray residue and the phase can disagree by one period, and rounding
/// `(gray − fringe·φ/2π) / fringe` resolves it.
#[inline]
pub fn fringe_order(gray_coord: f64, wrapped_phi: Option<f64>, fringe_width: u32) -> i32 {
    let w = fringe_width as f64;
    match wrapped_phi {
        Some(phi) => {
            let phase_pos = w * phi / TAU;
            ((gray_coord - phase_pos) / w).round() as i32
        }
        None => (gray_coord / w).floor() as i32,
    }
}

/// Per-pixel fringe orders for an axis of a gray-decoded map. Where the
/// wrapped phase is invalid the plain `floor(gray / fringe)` order is used;
/// pixels invalid in the gray map get order 0.
pub fn fringe_orders_from_gray(
    gray: &CorrespondenceMap,
    wrapped: &WrappedPhaseMap,
    fringe_width: u32,
    axis: Axis,
) -> Result<Vec<i32>, CodecError> {
    if (gray.width, gray.height) != (wrapped.width, wrapped.height) {
        return Err(CodecError::StackMismatch(
            "gray map and phase map differ in size".into(),
        ));
    }
    let plane = match axis {
        Axis::X => &gray.proj_x,
        Axis::Y => &gray.proj_y,
    };
    Ok((0..gray.status.len())
        .map(|i| {
            if gray.status[i] != PixelStatus::Valid {
                return 0;
            }
            let phi = wrapped.valid[i].then_some(wrapped.phase[i]);
            fringe_order(plane[i], phi, fringe_width)
        })
        .collect())
}

/// Replaces one axis of a gray-decoded map with the sub-period phase
/// estimate, unwrapped by gray-derived fringe orders. The refined
/// coordinate is reported at the fringe sample center (`+0.5`), matching
/// the gray decode convention. Pixels with unusable phase are downgraded to
/// `LowModulation`.
pub fn refine_with_phase(
    gray: &CorrespondenceMap,
    i1: &GrayImage,
    i2: &GrayImage,
    i3: &GrayImage,
    fringe_width: u32,
    modulation_threshold: f64,
    axis: Axis,
) -> Result<CorrespondenceMap, CodecError> {
    let wrapped = decode_phase(i1, i2, i3, modulation_threshold)?;
    if (gray.width, gray.height) != (wrapped.width, wrapped.height) {
        return Err(CodecError::StackMismatch(
            "gray map and phase images differ in size".into(),
        ));
    }
    let orders = fringe_orders_from_gray(gray, &wrapped, fringe_width, axis)?;
    let mut refined = gray.clone();
    let extent = match axis {
        Axis::X => gray.projector_width,
        Axis::Y => gray.projector_height,
    } as f64;
    for i in 0..refined.status.len() {
        if refined.status[i] != PixelStatus::Valid {
            continue;
        }
        if !wrapped.valid[i] {
            refined.status[i] = PixelStatus::LowModulation;
            continue;
        }
        let coord = unwrap_to_coordinate(wrapped.phase[i], orders[i], fringe_width) + 0.5;
        if !(0.0..extent).contains(&coord) {
            refined.status[i] = PixelStatus::OutOfRange;
            continue;
        }
        match axis {
            Axis::X => refined.proj_x[i] = coord,
            Axis::Y => refined.proj_y[i] = coord,
        }
    }
    refined.fringe_order = Some(orders);
    Ok(refined)
}
