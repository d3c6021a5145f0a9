//! Pixel containers shared by every stage: the 8-bit RGB raster, binary
//! masks and axis-aligned rectangles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interleaved 8-bit RGB raster, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for RgbImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RgbImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be non-zero, got {width}x{height}"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(Error::invalid(format!(
                "expected {} bytes for a {width}x{height} RGB image, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Uniform image. Panics on zero dimensions.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "zero-sized image");
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width * height * 3)
            .collect();
        Self {
            width,
            height,
            data,
        }
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "zero-sized image");
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn put_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    /// Copies out the pixels under `rect`.
    pub fn crop(&self, rect: Rect) -> Result<RgbImage> {
        self.check_inside(rect)?;
        let mut data = Vec::with_capacity(rect.area() * 3);
        for y in rect.y..rect.bottom() {
            let start = (y * self.width + rect.x) * 3;
            data.extend_from_slice(&self.data[start..start + rect.w * 3]);
        }
        RgbImage::new(rect.w, rect.h, data)
    }

    /// Writes `patch` with its top-left corner at `(x, y)`.
    pub fn paste(&mut self, patch: &RgbImage, x: usize, y: usize) -> Result<()> {
        self.check_inside(Rect::new(x, y, patch.width, patch.height))?;
        for row in 0..patch.height {
            let dst = ((y + row) * self.width + x) * 3;
            let src = row * patch.width * 3;
            self.data[dst..dst + patch.width * 3]
                .copy_from_slice(&patch.data[src..src + patch.width * 3]);
        }
        Ok(())
    }

    pub(crate) fn check_inside(&self, rect: Rect) -> Result<()> {
        if rect.is_empty() || !self.bounds().contains_rect(rect) {
            return Err(Error::invalid(format!(
                "rectangle {rect} is empty or outside the {}x{} image",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

/// Axis-aligned rectangle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> usize {
        self.x + self.w
    }

    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    pub fn contains_rect(&self, other: Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }
}

impl std::fmt::Display for Rect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}@({},{})", self.w, self.h, self.x, self.y)
    }
}

/// One boolean per pixel, row-major; `true` marks tampered pixels.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl std::fmt::Debug for Mask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("count", &self.count())
            .finish()
    }
}

/// Predicted tamper mask produced by the ghost analysis.
pub type TamperMask = Mask;
/// Exact tamper mask recorded by the forgery synthesizer.
pub type GroundTruthMask = Mask;

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::invalid(format!(
                "mask of {width}x{height} needs {} bits, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_rect(width: usize, height: usize, rect: Rect) -> Self {
        let mut mask = Self::new(width, height);
        mask.fill_rect(rect);
        mask
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    /// Sets every in-bounds pixel of `rect`.
    pub fn fill_rect(&mut self, rect: Rect) {
        for y in rect.y..rect.bottom().min(self.height) {
            for x in rect.x..rect.right().min(self.width) {
                self.set(x, y, true);
            }
        }
    }

    /// Number of `true` pixels.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.bits.len().max(1) as f64
    }

    /// Chebyshev dilation by `radius` pixels (a `(2r+1)`-square element).
    pub fn dilated(&self, radius: usize) -> Mask {
        crate::morphology::dilate(self, radius)
    }

    /// Encodes the mask as an 8-bit grayscale PNG: 0 untampered, 255 tampered.
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let pixels: Vec<u8> = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        crate::io::encode_png_gray8(self.width, self.height, &pixels)
    }

    /// Decodes a grayscale PNG mask; any non-zero sample is tampered.
    pub fn from_png(bytes: &[u8]) -> Result<Mask> {
        let (width, height, pixels) = crate::io::decode_png_gray8(bytes)?;
        Mask::from_bits(width, height, pixels.into_iter().map(|p| p != 0).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffers() {
        assert!(RgbImage::new(0, 4, vec![]).is_err());
        assert!(RgbImage::new(2, 2, vec![0; 11]).is_err());
        assert!(RgbImage::new(2, 2, vec![0; 12]).is_ok());
    }

    #[test]
    fn crop_paste_round_trip() {
        let img = RgbImage::from_fn(20, 10, |x, y| [x as u8, y as u8, (x * y) as u8]);
        let patch = img.crop(Rect::new(3, 2, 5, 4)).unwrap();
        assert_eq!(patch.pixel(0, 0), [3, 2, 6]);
        let mut blank = RgbImage::filled(20, 10, [0, 0, 0]);
        blank.paste(&patch, 3, 2).unwrap();
        assert_eq!(blank.crop(Rect::new(3, 2, 5, 4)).unwrap(), patch);
        assert!(img.crop(Rect::new(18, 0, 5, 1)).is_err());
        assert!(img.crop(Rect::new(0, 0, 0, 1)).is_err());
    }

    #[test]
    fn mask_png_round_trip() {
        let mask = Mask::from_rect(13, 9, Rect::new(2, 3, 4, 5));
        assert_eq!(mask.count(), 20);
        let back = Mask::from_png(&mask.to_png().unwrap()).unwrap();
        assert_eq!(back, mask);
    }
}
