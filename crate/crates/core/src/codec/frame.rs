//! Quantized-coefficient frame shared by the encoder and the decoder.

use super::dct;
use crate::raster::RgbImage;

#[derive(Debug, Clone)]
pub(crate) struct Component {
    pub id: u8,
    pub h: usize,
    pub v: usize,
    pub quant_id: usize,
    /// Allocated block grid (a whole number of MCUs).
    pub blocks_w: usize,
    pub blocks_h: usize,
    /// Quantized coefficients, natural order.
    pub coeffs: Vec<[i16; 64]>,
}

#[derive(Debug, Clone)]
pub(crate) struct Frame {
    pub width: usize,
    pub height: usize,
    pub hmax: usize,
    pub vmax: usize,
    pub components: Vec<Component>,
    pub quant: [[u16; 64]; 4],
}

impl Frame {
    pub fn mcus_x(&self) -> usize {
        self.width.div_ceil(8 * self.hmax)
    }

    pub fn mcus_y(&self) -> usize {
        self.height.div_ceil(8 * self.vmax)
    }

    /// Dequantize, inverse DCT, upsample and convert to RGB.
    pub fn to_rgb(&self) -> RgbImage {
        let planes: Vec<Vec<u8>> = self.components.iter().map(|c| self.sample_plane(c)).collect();
        let (w, h) = (self.width, self.height);
        let mut out = Vec::with_capacity(w * h * 3);
        if self.components.len() == 1 {
            let c = &self.components[0];
            let stride = c.blocks_w * 8;
            for y in 0..h {
                for x in 0..w {
                    let s = planes[0][(y * c.v / self.vmax) * stride + x * c.h / self.hmax];
                    out.extend_from_slice(&[s, s, s]);
                }
            }
        } else {
            let strides: Vec<usize> = self.components.iter().map(|c| c.blocks_w * 8).collect();
            let full = self.components.iter().all(|c| c.h == self.hmax && c.v == self.vmax);
            if full {
                for y in 0..h {
                    let rows: Vec<&[u8]> = (0..3).map(|i| &planes[i][y * strides[i]..][..w]).collect();
                    for x in 0..w {
                        let rgb = ycc_to_rgb(f32::from(rows[0][x]), f32::from(rows[1][x]), f32::from(rows[2][x]));
                        out.extend_from_slice(&rgb);
                    }
                }
                return RgbImage::new(w, h, out).expect("frame dimensions are non-zero");
            }
            for y in 0..h {
                for x in 0..w {
                    let sample = |i: usize| -> f32 {
                        let c = &self.components[i];
                        let idx = (y * c.v / self.vmax) * strides[i] + x * c.h / self.hmax;
                        f32::from(planes[i][idx])
                    };
                    out.extend_from_slice(&ycc_to_rgb(sample(0), sample(1), sample(2)));
                }
            }
        }
        RgbImage::new(w, h, out).expect("frame dimensions are non-zero")
    }

    fn sample_plane(&self, c: &Component) -> Vec<u8> {
        let stride = c.blocks_w * 8;
        let mut plane = vec![0u8; stride * c.blocks_h * 8];
        let quant = &self.quant[c.quant_id];
        for by in 0..c.blocks_h {
            for bx in 0..c.blocks_w {
                let pixels = reconstruct_block(&c.coeffs[by * c.blocks_w + bx], quant);
                for y in 0..8 {
                    plane[(by * 8 + y) * stride + bx * 8..][..8].copy_from_slice(&pixels[y * 8..y * 8 + 8]);
                }
            }
        }
        plane
    }
}

/// Dequantize, inverse DCT and undo the level shift of one block.
#[inline]
pub(crate) fn reconstruct_block(coeffs: &[i16; 64], quant: &[u16; 64]) -> [u8; 64] {
    let deq: [f32; 64] = std::array::from_fn(|i| f32::from(coeffs[i]) * f32::from(quant[i]));
    dct::inverse(&deq).map(|v| to_byte(v + 128.0))
}

/// Rounds half away from zero. Equivalent to `f32::round` for finite
/// inputs but compiles to a truncating conversion instead of a libm call.
#[inline]
pub(crate) fn round_i32(v: f32) -> i32 {
    let t = v as i32;
    let frac = v - t as f32;
    t + i32::from(frac >= 0.5) - i32::from(frac <= -0.5)
}

#[inline]
fn to_byte(v: f32) -> u8 {
    round_i32(v).clamp(0, 255) as u8
}

#[inline]
pub(crate) fn rgb_to_ycc(r: f32, g: f32, b: f32) -> [u8; 3] {
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = -0.168_736 * r - 0.331_264 * g + 0.5 * b + 128.0;
    let cr = 0.5 * r - 0.418_688 * g - 0.081_312 * b + 128.0;
    [y, cb, cr].map(to_byte)
}

#[inline]
pub(crate) fn ycc_to_rgb(y: f32, cb: f32, cr: f32) -> [u8; 3] {
    let cb = cb - 128.0;
    let cr = cr - 128.0;
    let r = y + 1.402 * cr;
    let g = y - 0.344_136 * cb - 0.714_136 * cr;
    let b = y + 1.772 * cb;
    [r, g, b].map(to_byte)
}
