//! Single-channel 8-bit raster, row-major.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0)
    }

    pub fn constant(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds an image by evaluating `f(col, row)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(col, row));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Takes ownership of a row-major buffer; `data.len()` must equal
    /// `width * height`.
    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Option<Self> {
        (data.len() == width * height).then_some(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, value: u8) {
        self.data[row * self.width + col] = value;
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    /// Pixelwise `255 - v`.
    pub fn inverted(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| 255 - v).collect(),
        }
    }

    pub fn same_dimensions(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Rounds a float intensity half-up and clamps to the 8-bit range.
#[inline]
pub fn quantize_u8(value: f64) -> u8 {
    (value + 0.5).floor().clamp(0.0, 255.0) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_fn_is_row_major() {
        let img = GrayImage::from_fn(3, 2, |c, r| (r * 3 + c) as u8);
        assert_eq!(img.as_slice(), &[0, 1, 2, 3, 4, 5]);
        assert_eq!(img.get(2, 1), 5);
        assert_eq!(img.row(1), &[3, 4, 5]);
    }

    #[test]
    fn inverted_is_complement() {
        let img = GrayImage::from_fn(2, 2, |c, r| (c + r) as u8 * 100);
        let inv = img.inverted();
        for (a, b) in img.as_slice().iter().zip(inv.as_slice()) {
            assert_eq!(*a as u16 + *b as u16, 255);
        }
    }

    #[test]
    fn quantize_rounds_half_up_and_clamps() {
        assert_eq!(quantize_u8(16.5), 17);
        assert_eq!(quantize_u8(16.49), 16);
        assert_eq!(quantize_u8(-3.0), 0);
        assert_eq!(quantize_u8(300.0), 255);
    }
}
