//! Reflected-binary gray-code patterns: encoding, stack generation, robust
//! decoding with direct/global separation.

use super::{Axis, CodecError, CorrespondenceMap, FrameKind, PatternFrame, PatternStack, PixelStatus};
use crate::image::GrayImage;
use rayon::prelude::*;

/// Bits needed to encode coordinates `0..extent`: `⌈log2(extent)⌉`.
pub fn gray_bits(extent: u32) -> u32 {
    assert!(extent >= 2, "extent must be at least 2");
    32 - (extent - 1).leading_zeros()
}

/// Bit `bit` (0 = most significant of `bits`) of the gray code of `index`.
#[inline]
pub fn gray_bit(index: u32, bit: u32, bits: u32) -> bool {
    let gray = index ^ (index >> 1);
    (gray >> (bits - 1 - bit)) & 1 == 1
}

/// Reflected-binary gray code of `index`, MSB first, zero-padded to `bits`
/// characters.
pub fn gray_encode(index: u32, bits: u32) -> Result<String, CodecError> {
    if bits == 0 || bits > 32 || (bits < 32 && index >= 1u32 << bits) {
        return Err(CodecError::OutOfRange { index, bits });
    }
    Ok((0..bits)
        .map(|b| if gray_bit(index, b, bits) { '1' } else { '0' })
        .collect())
}

/// Inverse of [`gray_encode`] (prefix-XOR scan, MSB first).
pub fn gray_decode(code: &str) -> Result<u32, CodecError> {
    if code.is_empty() || code.len() > 32 {
        return Err(CodecError::MalformedCode(format!(
            "code length {} out of range",
            code.len()
        )));
    }
    let mut value: u32 = 0;
    let mut prev: u32 = 0;
    for ch in code.chars() {
        let g = match ch {
            '0' => 0,
            '1' => 1,
            other => {
                return Err(CodecError::MalformedCode(format!(
                    "invalid character {other:?}"
                )))
            }
        };
        prev ^= g;
        value = (value << 1) | prev;
    }
    Ok(value)
}

/// Generates the gray-code stripe stack for one projector axis.
///
/// Image `i` paints column (or row) `c` white iff bit `i` of the gray code
/// of `c` is set. With `with_inverses`, each bit image is followed by its
/// 255-complement and all-white/all-black reference frames are appended —
/// the inputs the robust decoding rules need.
pub fn generate_gray_stack(
    projector_width: u32,
    projector_height: u32,
    axis: Axis,
    with_inverses: bool,
) -> Result<PatternStack, CodecError> {
    let extent = match axis {
        Axis::X => projector_width,
        Axis::Y => projector_height,
    };
    if extent < 2 {
        return Err(CodecError::StackMismatch(format!(
            "projector extent {extent} too small to encode"
        )));
    }
    let bits = gray_bits(extent);
    let (w, h) = (projector_width as usize, projector_height as usize);

    let mut frames = Vec::new();
    for bit in 0..bits {
        let image = GrayImage::from_fn(w, h, |col, row| {
            let coord = match axis {
                Axis::X => col as u32,
                Axis::Y => row as u32,
            };
            if gray_bit(coord, bit, bits) {
                255
            } else {
                0
            }
        });
        if with_inverses {
            let inverse = image.inverted();
            frames.push(PatternFrame {
                kind: FrameKind::gray_pattern(axis),
                bit: Some(bit),
                shift: None,
                image,
            });
            frames.push(PatternFrame {
                kind: FrameKind::gray_inverse(axis),
                bit: Some(bit),
                shift: None,
                image: inverse,
            });
        } else {
            frames.push(PatternFrame {
                kind: FrameKind::gray_pattern(axis),
                bit: Some(bit),
                shift: None,
                image,
            });
        }
    }
    if with_inverses {
        frames.push(PatternFrame {
            kind: FrameKind::ReferenceWhite,
            bit: None,
            shift: None,
            image: GrayImage::constant(w, h, 255),
        });
        frames.push(PatternFrame {
            kind: FrameKind::ReferenceBlack,
            bit: None,
            shift: None,
            image: GrayImage::constant(w, h, 0),
        });
    }

    Ok(PatternStack {
        frames,
        projector_width,
        projector_height,
        fringe_width: None,
    })
}

/// Splits per-pixel intensity into direct and global components from a set
/// of high-frequency binary patterns at 50% duty cycle: with `Lmax`/`Lmin`
/// the per-pixel extremes over the set, `direct = Lmax − Lmin` and
/// `global = 2·Lmin`.
pub fn separate_direct_global(
    images: &[&GrayImage],
) -> Result<(Vec<f32>, Vec<f32>), CodecError> {
    if images.len() < 3 {
        return Err(CodecError::StackMismatch(format!(
            "direct/global separation needs at least 3 images, got {}",
            images.len()
        )));
    }
    let (w, h) = (images[0].width(), images[0].height());
    for img in images {
        if !(img.width() == w && img.height() == h) {
            return Err(CodecError::StackMismatch(
                "separation images differ in size".into(),
            ));
        }
    }
    let n = w * h;
    let mut direct = vec![0.0f32; n];
    let mut global = vec![0.0f32; n];
    direct
        .par_chunks_mut(w)
        .zip(global.par_chunks_mut(w))
        .enumerate()
        .for_each(|(row, (d_row, g_row))| {
            for col in 0..w {
                let mut lmax = u8::MIN;
                let mut lmin = u8::MAX;
                for img in images {
                    let v = img.get(col, row);
                    lmax = lmax.max(v);
                    lmin = lmin.min(v);
                }
                d_row[col] = (lmax - lmin) as f32;
                g_row[col] = 2.0 * lmin as f32;
            }
        });
    Ok((direct, global))
}

/// Picks the highest-frequency gray frames (finest two bits per available
/// axis, patterns and inverses) for direct/global separation. Falls back to
/// including reference frames when fewer than three qualify.
pub fn select_high_frequency_frames(stack: &PatternStack) -> Vec<&GrayImage> {
    let mut selected = Vec::new();
    for axis in [Axis::X, Axis::Y] {
        let bits = stack.gray_bit_count(axis);
        if bits == 0 {
            continue;
        }
        let finest = bits.saturating_sub(2)..bits;
        for bit in finest {
            if let Some(f) = stack.frame(FrameKind::gray_pattern(axis), Some(bit)) {
                selected.push(&f.image);
            }
            if let Some(f) = stack.frame(FrameKind::gray_inverse(axis), Some(bit)) {
                selected.push(&f.image);
            }
        }
    }
    if selected.len() < 3 {
        for kind in [FrameKind::ReferenceWhite, FrameKind::ReferenceBlack] {
            if let Some(f) = stack.frame(kind, None) {
                selected.push(&f.image);
            }
        }
    }
    selected
}

/// Outcome of classifying one captured bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitClass {
    One,
    Zero,
    Uncertain,
}

/// Robust bit classification from a pattern/inverse intensity pair `(p, q)`
/// given the pixel's direct (`d`) and global (`g`) estimates and the
/// minimum-direct threshold `m`:
///
/// 1. `d < m` → uncertain (too little projector light to decide);
/// 2. `d > g` → one if `p > q`, else zero;
/// 3. `p < d` and `q > g` → zero;
/// 4. `p > g` and `q < d` → one;
/// 5. otherwise uncertain.
#[inline]
pub fn classify_bit(p: f64, q: f64, d: f64, g: f64, m: f64) -> BitClass {
    if d < m {
        BitClass::Uncertain
    } else if d > g {
        if p > q {
            BitClass::One
        } else {
            BitClass::Zero
        }
    } else if p < d && q > g {
        BitClass::Zero
    } else if p > g && q < d {
        BitClass::One
    } else {
        BitClass::Uncertain
    }
}

struct AxisFrames<'a> {
    patterns: Vec<&'a GrayImage>,
    inverses: Vec<&'a GrayImage>,
    extent: u32,
}

fn collect_axis_frames<'a>(
    stack: &'a PatternStack,
    axis: Axis,
) -> Result<Option<AxisFrames<'a>>, CodecError> {
    let bits = stack.gray_bit_count(axis);
    if bits == 0 {
        return Ok(None);
    }
    let extent = match axis {
        Axis::X => stack.projector_width,
        Axis::Y => stack.projector_height,
    };
    let expected = gray_bits(extent);
    if bits != expected {
        return Err(CodecError::StackMismatch(format!(
            "{axis:?} axis has {bits} bit planes, expected {expected} for extent {extent}"
        )));
    }
    let mut patterns = Vec::with_capacity(bits as usize);
    let mut inverses = Vec::with_capacity(bits as usize);
    for bit in 0..bits {
        let p = stack
            .frame(FrameKind::gray_pattern(axis), Some(bit))
            .ok_or_else(|| {
                CodecError::StackMismatch(format!("missing {axis:?} pattern for bit {bit}"))
            })?;
        let q = stack
            .frame(FrameKind::gray_inverse(axis), Some(bit))
            .ok_or_else(|| {
                CodecError::StackMismatch(format!("missing {axis:?} inverse for bit {bit}"))
            })?;
        patterns.push(&p.image);
        inverses.push(&q.image);
    }
    Ok(Some(AxisFrames {
        patterns,
        inverses,
        extent,
    }))
}

/// Decodes a captured axis at one pixel. `None` means an uncertain bit.
fn decode_pixel_axis(
    frames: &AxisFrames,
    col: usize,
    row: usize,
    d: f64,
    g: f64,
    m: f64,
) -> Option<u32> {
    let mut value: u32 = 0;
    let mut prev: u32 = 0;
    for (pattern, inverse) in frames.patterns.iter().zip(&frames.inverses) {
        let p = pattern.get(col, row) as f64;
        let q = inverse.get(col, row) as f64;
        let bit = match classify_bit(p, q, d, g, m) {
            BitClass::One => 1,
            BitClass::Zero => 0,
            BitClass::Uncertain => return None,
        };
        prev ^= bit;
        value = (value << 1) | prev;
    }
    Some(value)
}

/// Decodes captured gray stacks into a correspondence map using
/// pre-computed direct/global estimates and minimum-direct threshold `m`.
///
/// Every bit of every present axis is classified; a pixel with any
/// uncertain bit is invalid. Valid pixels report the decoded integer
/// coordinate at the pixel center (`c + 0.5`).
pub fn decode_gray(
    stack: &PatternStack,
    direct: &[f32],
    global: &[f32],
    m: f64,
) -> Result<CorrespondenceMap, CodecError> {
    let (width, height) = stack.image_dimensions()?;
    if direct.len() != width * height || global.len() != width * height {
        return Err(CodecError::StackMismatch(format!(
            "direct/global plane size {}/{} does not match {}x{} images",
            direct.len(),
            global.len(),
            width,
            height
        )));
    }
    let x_frames = collect_axis_frames(stack, Axis::X)?;
    let y_frames = collect_axis_frames(stack, Axis::Y)?;
    if x_frames.is_none() && y_frames.is_none() {
        return Err(CodecError::StackMismatch(
            "stack contains no gray pattern frames".into(),
        ));
    }

    let mut map = CorrespondenceMap::empty(
        width,
        height,
        stack.projector_width,
        stack.projector_height,
    );
    map.has_x = x_frames.is_some();
    map.has_y = y_frames.is_some();
    map.direct.copy_from_slice(direct);
    map.global.copy_from_slice(global);

    let rows: Vec<(Vec<f64>, Vec<f64>, Vec<PixelStatus>)> = (0..height)
        .into_par_iter()
        .map(|row| {
            let mut xs = vec![0.0f64; width];
            let mut ys = vec![0.0f64; width];
            let mut status = vec![PixelStatus::NoData; width];
            for col in 0..width {
                let i = row * width + col;
                let (d, g) = (direct[i] as f64, global[i] as f64);
                if d < m {
                    status[col] = PixelStatus::LowDirect;
                    continue;
                }
                let mut ok = true;
                let mut out_of_range = false;
                if let Some(frames) = &x_frames {
                    match decode_pixel_axis(frames, col, row, d, g, m) {
                        Some(v) if v < frames.extent => xs[col] = v as f64 + 0.5,
                        Some(_) => out_of_range = true,
                        None => ok = false,
                    }
                }
                if ok && !out_of_range {
                    if let Some(frames) = &y_frames {
                        match decode_pixel_axis(frames, col, row, d, g, m) {
                            Some(v) if v < frames.extent => ys[col] = v as f64 + 0.5,
                            Some(_) => out_of_range = true,
                            None => ok = false,
                        }
                    }
                }
                status[col] = if !ok {
                    PixelStatus::UncertainBit
                } else if out_of_range {
                    PixelStatus::OutOfRange
                } else {
                    PixelStatus::Valid
                };
            }
            (xs, ys, status)
        })
        .collect();

    for (row, (xs, ys, status)) in rows.into_iter().enumerate() {
        let start = row * width;
        map.proj_x[start..start + width].copy_from_slice(&xs);
        map.proj_y[start..start + width].copy_from_slice(&ys);
        map.status[start..start + width].copy_from_slice(&status);
    }
    Ok(map)
}

/// [`decode_gray`] with direct/global estimated from the stack's own
/// highest-frequency frames.
pub fn decode_gray_auto(stack: &PatternStack, m: f64) -> Result<CorrespondenceMap, CodecError> {
    let frames = select_high_frequency_frames(stack);
    let (direct, global) = separate_direct_global(&frames)?;
    decode_gray(stack, &direct, &global, m)
}
