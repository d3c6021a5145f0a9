//! Studio-swing RGB to YCbCr conversion used by the analysis stage.
//!
//! The forward transform is
//!
//! ```text
//! Y  =  0.257 R + 0.504 G + 0.098 B +  16
//! Cb = -0.148 R - 0.291 G + 0.439 B + 128
//! Cr =  0.439 R - 0.368 G - 0.071 B + 128
//! ```
//!
//! with no rounding or clamping: the planes stay in floating point until the
//! difference stage. This is *not* the full-swing conversion the JPEG codec
//! uses internally (see [`crate::codec`]); the two are kept apart on purpose.

use std::sync::LazyLock;

use crate::error::{Error, Result};
pub use crate::raster::RgbImage;
use crate::scalar::Scalar;

const FORWARD: [[f64; 3]; 3] = [
    [0.257, 0.504, 0.098],
    [-0.148, -0.291, 0.439],
    [0.439, -0.368, -0.071],
];
const OFFSET: [f64; 3] = [16.0, 128.0, 128.0];

static INVERSE: LazyLock<[[f64; 3]; 3]> = LazyLock::new(|| invert3(&FORWARD));

fn invert3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let adj = [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ];
    let det = m[0][0] * adj[0][0] + m[0][1] * adj[1][0] + m[0][2] * adj[2][0];
    adj.map(|row| row.map(|v| v / det))
}

/// Three floating-point planes (Y, Cb, Cr), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct YcbcrImage<T: Scalar> {
    width: usize,
    height: usize,
    pub y: Vec<T>,
    pub cb: Vec<T>,
    pub cr: Vec<T>,
}

impl<T: Scalar> YcbcrImage<T> {
    pub fn new(width: usize, height: usize, y: Vec<T>, cb: Vec<T>, cr: Vec<T>) -> Result<Self> {
        let n = width * height;
        if n == 0 || y.len() != n || cb.len() != n || cr.len() != n {
            return Err(Error::invalid(format!(
                "YCbCr planes must each hold {width}x{height} samples"
            )));
        }
        Ok(Self {
            width,
            height,
            y,
            cb,
            cr,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn planes(&self) -> [&[T]; 3] {
        [&self.y, &self.cb, &self.cr]
    }
}

/// Converts one 8-bit RGB triple.
#[inline]
pub fn rgb_to_ycbcr_pixel<T: Scalar>(rgb: [u8; 3]) -> [T; 3] {
    let [r, g, b] = rgb.map(T::from_byte);
    std::array::from_fn(|i| {
        let c = FORWARD[i].map(T::lit);
        c[0] * r + c[1] * g + c[2] * b + T::lit(OFFSET[i])
    })
}

/// Inverts the forward map, rounding half away from zero and clamping to [0, 255].
#[inline]
pub fn ycbcr_to_rgb_pixel<T: Scalar>(ycc: [T; 3]) -> [u8; 3] {
    let shifted: [f64; 3] = std::array::from_fn(|i| ycc[i].to_f64_lossy() - OFFSET[i]);
    let inv = &*INVERSE;
    std::array::from_fn(|i| {
        let v = inv[i][0] * shifted[0] + inv[i][1] * shifted[1] + inv[i][2] * shifted[2];
        v.round().clamp(0.0, 255.0) as u8
    })
}

/// Luma plane only; what SSIM consumes.
pub fn luma_plane<T: Scalar>(image: &RgbImage) -> Vec<T> {
    let c = FORWARD[0].map(T::lit);
    let offset = T::lit(OFFSET[0]);
    image
        .data()
        .chunks_exact(3)
        .map(|p| c[0] * T::from_byte(p[0]) + c[1] * T::from_byte(p[1]) + c[2] * T::from_byte(p[2]) + offset)
        .collect()
}

pub fn rgb_to_ycbcr<T: Scalar>(image: &RgbImage) -> YcbcrImage<T> {
    let n = image.width() * image.height();
    let (mut y, mut cb, mut cr) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for p in image.data().chunks_exact(3) {
        let [a, b, c] = rgb_to_ycbcr_pixel::<T>([p[0], p[1], p[2]]);
        y.push(a);
        cb.push(b);
        cr.push(c);
    }
    YcbcrImage {
        width: image.width(),
        height: image.height(),
        y,
        cb,
        cr,
    }
}

pub fn ycbcr_to_rgb<T: Scalar>(image: &YcbcrImage<T>) -> RgbImage {
    let mut data = Vec::with_capacity(image.width * image.height * 3);
    for i in 0..image.width * image.height {
        data.extend_from_slice(&ycbcr_to_rgb_pixel([image.y[i], image.cb[i], image.cr[i]]));
    }
    RgbImage::new(image.width, image.height, data).expect("dimensions carried over")
}
