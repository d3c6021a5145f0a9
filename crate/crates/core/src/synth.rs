//! Procedural stand-ins for natural photographs.
//!
//! The scenes combine a smooth illumination gradient, multi-octave value
//! noise with a roughly `1/f` spectrum, a handful of hard-edged textured
//! objects and sensor grain. They are not photographs, but they have the
//! properties the ghost analysis relies on: texture in nearly every 8x8
//! block, edges, and saturated-free midtones. Output is a pure function of
//! the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::raster::RgbImage;

/// Desk-corpus landscape size.
pub const DESK_WIDTH: usize = 512;
pub const DESK_HEIGHT: usize = 384;

struct ValueNoise {
    cell: f64,
    cols: usize,
    lattice: Vec<f64>,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, width: usize, height: usize, cell: f64) -> Self {
        let cols = (width as f64 / cell).ceil() as usize + 2;
        let rows = (height as f64 / cell).ceil() as usize + 2;
        let lattice = (0..cols * rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Self { cell, cols, lattice }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let (fx, fy) = (x / self.cell, y / self.cell);
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let (tx, ty) = (smooth(fx - ix as f64), smooth(fy - iy as f64));
        let v = |cx: usize, cy: usize| self.lattice[cy * self.cols + cx];
        let top = v(ix, iy) * (1.0 - tx) + v(ix + 1, iy) * tx;
        let bottom = v(ix, iy + 1) * (1.0 - tx) + v(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

struct Fractal {
    octaves: Vec<(ValueNoise, f64)>,
}

impl Fractal {
    fn new(rng: &mut ChaCha8Rng, width: usize, height: usize, base_cell: f64, persistence: f64) -> Self {
        let mut octaves = Vec::new();
        let (mut cell, mut amp) = (base_cell, 1.0);
        while cell >= 1.5 {
            octaves.push((ValueNoise::new(rng, width, height, cell), amp));
            cell /= 2.0;
            amp *= persistence;
        }
        Self { octaves }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        self.octaves.iter().map(|(n, a)| a * n.at(x, y)).sum()
    }
}

enum Shape {
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Ellipse { cx, cy, rx, ry } => ((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2) <= 1.0,
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
        }
    }
}

/// Renders scene number `seed` at the requested size.
pub fn natural_scene(seed: u64, width: usize, height: usize) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6768_6f73_7400_0000 ^ seed);
    let (w, h) = (width as f64, height as f64);

    let palette: [[f64; 3]; 2] = [
        [rng.gen_range(60.0..190.0), rng.gen_range(60.0..190.0), rng.gen_range(60.0..190.0)],
        [rng.gen_range(60.0..190.0), rng.gen_range(60.0..190.0), rng.gen_range(60.0..190.0)],
    ];
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (gx, gy) = (angle.cos(), angle.sin());

    let persistence = rng.gen_range(0.65..0.8);
    let base_cell = rng.gen_range(48.0..128.0);
    let luma = Fractal::new(&mut rng, width, height, base_cell, persistence);
    let chroma_a = Fractal::new(&mut rng, width, height, 96.0, 0.5);
    let chroma_b = Fractal::new(&mut rng, width, height, 96.0, 0.5);
    let contrast = rng.gen_range(35.0..60.0);

    let n_shapes = rng.gen_range(6..14);
    let objects: Vec<(Shape, [f64; 3], Fractal, f64)> = (0..n_shapes)
        .map(|_| {
            let shape = if rng.gen_bool(0.5) {
                Shape::Ellipse {
                    cx: rng.gen_range(0.0..w),
                    cy: rng.gen_range(0.0..h),
                    rx: rng.gen_range(w * 0.04..w * 0.2),
                    ry: rng.gen_range(h * 0.04..h * 0.25),
                }
            } else {
                let (x0, y0) = (rng.gen_range(-w * 0.1..w), rng.gen_range(-h * 0.1..h));
                Shape::Rect {
                    x0,
                    y0,
                    x1: x0 + rng.gen_range(w * 0.05..w * 0.35),
                    y1: y0 + rng.gen_range(h * 0.05..h * 0.35),
                }
            };
            let color = [rng.gen_range(40.0..210.0), rng.gen_range(40.0..210.0), rng.gen_range(40.0..210.0)];
            let cell = rng.gen_range(3.0..16.0);
            let texture = Fractal::new(&mut rng, width, height, cell, 0.6);
            (shape, color, texture, rng.gen_range(15.0..50.0))
        })
        .collect();

    let grain = Normal::new(0.0, rng.gen_range(1.5..3.0)).expect("positive sigma");
    let mut out = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
            let t = (((fx / w - 0.5) * gx + (fy / h - 0.5) * gy) + 0.5).clamp(0.0, 1.0);
            let l = contrast * luma.at(fx, fy);
            let (ca, cb) = (18.0 * chroma_a.at(fx, fy), 18.0 * chroma_b.at(fx, fy));
            let mut rgb: [f64; 3] = std::array::from_fn(|c| palette[0][c] * (1.0 - t) + palette[1][c] * t + l);
            rgb[0] += ca;
            rgb[2] += cb;
            rgb[1] -= 0.5 * (ca + cb);
            for (shape, color, texture, amp) in &objects {
                if shape.contains(fx, fy) {
                    let tex = amp * texture.at(fx, fy);
                    rgb = std::array::from_fn(|c| color[c] + tex + 0.25 * l);
                }
            }
            for v in &rgb {
                let noisy = v + grain.sample(&mut rng);
                out.push(noisy.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    RgbImage::new(width, height, out).expect("non-zero scene size")
}

/// `count` scenes at the 512x384 desk size, seeds `0..count`.
pub fn desk_corpus(count: usize) -> Vec<RgbImage> {
    (0..count as u64).map(|s| natural_scene(s, DESK_WIDTH, DESK_HEIGHT)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(natural_scene(3, 64, 48), natural_scene(3, 64, 48));
        assert_ne!(natural_scene(3, 64, 48), natural_scene(4, 64, 48));
    }

    #[test]
    fn most_blocks_are_textured() {
        let img = natural_scene(1, 128, 96);
        let mut textured = 0;
        let mut total = 0;
        for by in 0..12 {
            for bx in 0..16 {
                let vals: Vec<f64> = (0..64)
                    .map(|i| img.pixel(bx * 8 + i % 8, by * 8 + i / 8)[1] as f64)
                    .collect();
                let mean = vals.iter().sum::<f64>() / 64.0;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 64.0;
                total += 1;
                if var > 4.0 {
                    textured += 1;
                }
            }
        }
        assert!(textured * 10 >= total * 9, "{textured}/{total}");
    }
}
