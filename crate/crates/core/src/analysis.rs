//! The ghost pipeline: amplified difference maps, the resave sweep,
//! binarization into a tamper mask, and end-to-end localization.
//!
//! For a dubious image `I` and its resave `Iq` at quality `q`, the
//! difference map holds `|I_c - Iq_c|³` for every pixel and every channel
//! `c` of the studio-swing YCbCr planes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{self, Quality};
use crate::colorspace::{luma_plane, rgb_to_ycbcr, rgb_to_ycbcr_pixel, YcbcrImage};
use crate::error::{Error, Result};
use crate::metrics::{self, Confidence, CurveSample, QualityEstimate, SsimParams, SsimReference, SweepCurve};
use crate::morphology;
use crate::raster::{Mask, RgbImage, TamperMask};
use crate::scalar::Scalar;

/// Per-pixel, per-channel cubed difference planes (Y, Cb, Cr).
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceMap<T: Scalar> {
    width: usize,
    height: usize,
    planes: [Vec<T>; 3],
    quality: Quality,
}

impl<T: Scalar> DifferenceMap<T> {
    /// Builds a map from raw planes, checking the value range `[0, 255³]`.
    pub fn new(width: usize, height: usize, planes: [Vec<T>; 3], quality: Quality) -> Result<Self> {
        let max = T::lit(255.0f64.powi(3));
        if planes.iter().any(|p| p.len() != width * height) {
            return Err(Error::invalid(format!("difference planes must hold {width}x{height} values")));
        }
        if planes.iter().flatten().any(|&v| !(v >= T::zero() && v <= max)) {
            return Err(Error::invalid("difference values must lie in [0, 255^3]"));
        }
        Ok(Self {
            width,
            height,
            planes,
            quality,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn quality(&self) -> Quality {
        self.quality
    }

    pub fn planes(&self) -> &[Vec<T>; 3] {
        &self.planes
    }

    /// Sum of the three planes, per pixel.
    pub fn summed(&self) -> Vec<T> {
        let [y, cb, cr] = &self.planes;
        y.iter().zip(cb).zip(cr).map(|((&a, &b), &c)| a + b + c).collect()
    }

    /// 16-bit grayscale PNG of the summed map on a log scale:
    /// `round(65535 · ln(1 + D) / ln(1 + 3·255³))`.
    pub fn to_png16(&self) -> Result<Vec<u8>> {
        let top = (1.0 + 3.0 * 255.0f64.powi(3)).ln();
        let pixels: Vec<u16> = self
            .summed()
            .into_iter()
            .map(|v| (65535.0 * v.to_f64_lossy().ln_1p() / top).round().clamp(0.0, 65535.0) as u16)
            .collect();
        crate::io::encode_png_gray16(self.width, self.height, &pixels)
    }
}

/// `|a - b|³` per channel of two already-converted images.
pub fn difference_map_ycbcr<T: Scalar>(
    dubious: &YcbcrImage<T>,
    resaved: &YcbcrImage<T>,
    quality: Quality,
) -> Result<DifferenceMap<T>> {
    if (dubious.width(), dubious.height()) != (resaved.width(), resaved.height()) {
        return Err(Error::DimensionMismatch {
            left_width: dubious.width(),
            left_height: dubious.height(),
            right_width: resaved.width(),
            right_height: resaved.height(),
        });
    }
    let cube = |a: &[T], b: &[T]| -> Vec<T> { a.iter().zip(b).map(|(&x, &y)| (x - y).abs().powi(3)).collect() };
    let [ay, acb, acr] = dubious.planes();
    let [by, bcb, bcr] = resaved.planes();
    Ok(DifferenceMap {
        width: dubious.width(),
        height: dubious.height(),
        planes: [cube(ay, by), cube(acb, bcb), cube(acr, bcr)],
        quality,
    })
}

/// Converts both images with the studio-swing transform and cubes the
/// absolute per-channel differences.
pub fn difference_map<T: Scalar>(dubious: &RgbImage, resaved: &RgbImage, quality: Quality) -> Result<DifferenceMap<T>> {
    if dubious.dimensions() != resaved.dimensions() {
        return Err(Error::DimensionMismatch {
            left_width: dubious.width(),
            left_height: dubious.height(),
            right_width: resaved.width(),
            right_height: resaved.height(),
        });
    }
    difference_map_ycbcr(&rgb_to_ycbcr(dubious), &rgb_to_ycbcr(resaved), quality)
}

/// Qualities `q_min, q_min + step, …, q_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSweepConfig")]
pub struct SweepConfig {
    q_min: Quality,
    q_max: Quality,
    step: u32,
}

#[derive(Deserialize)]
struct RawSweepConfig {
    q_min: u32,
    q_max: u32,
    step: u32,
}

impl TryFrom<RawSweepConfig> for SweepConfig {
    type Error = Error;

    fn try_from(raw: RawSweepConfig) -> Result<Self> {
        Self::new(raw.q_min, raw.q_max, raw.step)
    }
}

impl Default for SweepConfig {
    /// `[30, 100]` in steps of 2.
    fn default() -> Self {
        Self {
            q_min: Quality::new(30).expect("valid"),
            q_max: Quality::new(100).expect("valid"),
            step: 2,
        }
    }
}

impl SweepConfig {
    pub fn new(q_min: u32, q_max: u32, step: u32) -> Result<Self> {
        let (lo, hi) = (Quality::new(q_min)?, Quality::new(q_max)?);
        if lo > hi {
            return Err(Error::invalid(format!("sweep minimum {q_min} exceeds maximum {q_max}")));
        }
        if step == 0 || !(q_max - q_min).is_multiple_of(step) {
            return Err(Error::invalid(format!(
                "sweep step {step} must be positive and divide {q_max} - {q_min}"
            )));
        }
        Ok(Self {
            q_min: lo,
            q_max: hi,
            step,
        })
    }

    pub fn q_min(&self) -> Quality {
        self.q_min
    }

    pub fn q_max(&self) -> Quality {
        self.q_max
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    pub fn qualities(&self) -> Vec<Quality> {
        (self.q_min.get()..=self.q_max.get())
            .step_by(self.step as usize)
            .map(|q| Quality::new(q).expect("inside validated range"))
            .collect()
    }
}

/// Every difference map of a sweep plus its curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T: Scalar> {
    pub qualities: Vec<Quality>,
    pub maps: Vec<DifferenceMap<T>>,
    pub curve: SweepCurve<T>,
}

struct SweepPoint<T: Scalar> {
    sample: CurveSample<T>,
    map: Option<DifferenceMap<T>>,
}

/// Evaluates every sweep point; points are independent and run on the
/// current rayon pool, results come back in quality order.
fn sweep_points<T: Scalar>(
    dubious: &RgbImage,
    config: &SweepConfig,
    params: SsimParams<T>,
    keep_maps: bool,
) -> Result<Vec<SweepPoint<T>>> {
    let base: YcbcrImage<T> = rgb_to_ycbcr(dubious);
    let reference = SsimReference::from_plane(base.y.clone(), dubious.width(), dubious.height(), params)?;
    let resaver = codec::Resaver::new(dubious)?;
    config
        .qualities()
        .into_par_iter()
        .map(|quality| {
            let resaved = resaver.resave(quality);
            let ssim = reference.compare_plane(&luma_plane(&resaved));
            let (energy, map) = if keep_maps {
                let map = difference_map_ycbcr(&base, &rgb_to_ycbcr(&resaved), quality)?;
                (metrics::energy(&map), Some(map))
            } else {
                (streamed_energy(&base, &resaved), None)
            };
            Ok(SweepPoint {
                sample: CurveSample { quality, ssim, energy },
                map,
            })
        })
        .collect()
}

/// Same value and summation order as `metrics::energy` of the difference
/// map between `base` and the conversion of `resaved`, without
/// materialising either.
fn streamed_energy<T: Scalar>(base: &YcbcrImage<T>, resaved: &RgbImage) -> T {
    let mut sums = [T::zero(); 3];
    let planes = base.planes();
    for (i, p) in resaved.data().chunks_exact(3).enumerate() {
        let ycc = rgb_to_ycbcr_pixel::<T>([p[0], p[1], p[2]]);
        for c in 0..3 {
            sums[c] = sums[c] + (planes[c][i] - ycc[c]).abs().powi(3);
        }
    }
    sums[0] + sums[1] + sums[2]
}

/// Resaves `dubious` at every sweep quality and records the maps and curve.
pub fn run_sweep<T: Scalar>(dubious: &RgbImage, config: &SweepConfig) -> Result<SweepResult<T>> {
    run_sweep_with(dubious, config, SsimParams::default())
}

pub fn run_sweep_with<T: Scalar>(
    dubious: &RgbImage,
    config: &SweepConfig,
    params: SsimParams<T>,
) -> Result<SweepResult<T>> {
    let points = sweep_points(dubious, config, params, true)?;
    let curve = SweepCurve::new(points.iter().map(|p| p.sample).collect())?;
    let mut qualities = Vec::with_capacity(points.len());
    let mut maps = Vec::with_capacity(points.len());
    for p in points {
        qualities.push(p.sample.quality);
        maps.push(p.map.expect("maps kept"));
    }
    Ok(SweepResult { qualities, maps, curve })
}

/// Curve only; the maps are dropped as soon as their energy is known.
pub fn sweep_curve<T: Scalar>(dubious: &RgbImage, config: &SweepConfig, params: SsimParams<T>) -> Result<SweepCurve<T>> {
    let points = sweep_points(dubious, config, params, false)?;
    SweepCurve::new(points.into_iter().map(|p| p.sample).collect())
}

const HISTOGRAM_BINS: usize = 256;

/// Outcome of [`binarize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Binarization<T: Scalar> {
    pub mask: TamperMask,
    /// Otsu threshold on `ln(1 + D)`, absent for degenerate maps.
    pub threshold: Option<T>,
    /// The map was constant, so no threshold could be placed.
    pub degenerate: bool,
}

/// Otsu's threshold over a histogram: the last bin index of the lower class.
fn otsu_split(histogram: &[u64]) -> usize {
    let total: u64 = histogram.iter().sum();
    let weighted: f64 = histogram.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut best, mut best_var) = (0usize, -1.0f64);
    let (mut w0, mut sum0) = (0u64, 0f64);
    for (k, &count) in histogram.iter().enumerate().take(histogram.len() - 1) {
        w0 += count;
        sum0 += k as f64 * count as f64;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let (m0, m1) = (sum0 / w0 as f64, (weighted - sum0) / w1 as f64);
        let var = w0 as f64 * w1 as f64 * (m0 - m1).powi(2);
        if var > best_var {
            best_var = var;
            best = k;
        }
    }
    best
}

/// Collapses the map to `ln(1 + ΣD)`, thresholds it with Otsu's method, then
/// applies a 3x3 closing followed by a 3x3 opening. Closing first lets the
/// sparse responses inside a ghost merge before isolated specks are removed.
/// The mask never holds more pixels than the map has nonzero values.
pub fn binarize<T: Scalar>(map: &DifferenceMap<T>) -> Binarization<T> {
    let (w, h) = (map.width, map.height);
    let summed = map.summed();
    let logs: Vec<T> = summed.iter().map(|&v| v.ln_1p()).collect();
    let (lo, hi) = logs
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return Binarization {
            mask: Mask::new(w, h),
            threshold: None,
            degenerate: true,
        };
    }
    let bins = T::from_usize(HISTOGRAM_BINS).expect("small");
    let bin_of = |v: T| -> usize {
        ((v - lo) / (hi - lo) * bins).to_usize().unwrap_or(0).min(HISTOGRAM_BINS - 1)
    };
    let mut histogram = vec![0u64; HISTOGRAM_BINS];
    for &v in &logs {
        histogram[bin_of(v)] += 1;
    }
    let split = otsu_split(&histogram);
    let raw = Mask::from_bits(w, h, logs.iter().map(|&v| bin_of(v) > split).collect()).expect("sizes match");
    let cleaned = morphology::open(&morphology::close(&raw, 1), 1);
    let nonzero = summed.iter().filter(|&&s| s > T::zero()).count();
    let mask = if cleaned.count() > nonzero {
        let bits = summed.iter().zip(cleaned.bits()).map(|(&s, &b)| b && s > T::zero()).collect();
        Mask::from_bits(w, h, bits).expect("sizes match")
    } else {
        cleaned
    };
    let threshold = lo + (hi - lo) * T::from_usize(split + 1).expect("small") / bins;
    Binarization {
        mask,
        threshold: Some(threshold),
        degenerate: false,
    }
}

/// Result of [`localize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Localization<T: Scalar> {
    pub mask: TamperMask,
    /// Quality whose difference map was binarized: the estimate refined to
    /// the nearest integer quality by [`refine_quality`].
    pub quality: Quality,
    /// Absent when neither curve has an interior extremum.
    pub estimate: Option<QualityEstimate>,
    /// Whether the mask should be read as a detection.
    pub detection: Confidence,
    pub degenerate: bool,
    /// Mean summed difference inside the mask over the mean outside it.
    pub contrast: f64,
    /// Unclipped 8×8 blocks whose mean summed difference exceeds
    /// [`EVIDENCE_LEVEL`]; see [`evidence_blocks`].
    pub evidence: usize,
    pub curve: SweepCurve<T>,
}

/// Sweep, estimate the cover quality and binarize the map at that quality.
///
/// If no extremum is found the map at the global energy minimum is used and
/// the result is flagged low-confidence.
pub fn localize<T: Scalar>(dubious: &RgbImage, config: &SweepConfig) -> Result<Localization<T>> {
    let curve = sweep_curve(dubious, config, SsimParams::default())?;
    let (estimate, quality) = match metrics::estimate_cover_quality(&curve) {
        Ok(e) => (Some(e), e.q_final),
        Err(Error::EstimationFailure) => (None, curve.energy_argmin().ok_or_else(|| Error::invalid("empty sweep"))?),
        Err(e) => return Err(e),
    };
    let quality = refine_quality(dubious, config, quality)?;
    let map: DifferenceMap<T> = difference_map(dubious, &codec::resave(dubious, quality)?, quality)?;
    let binary = binarize(&map);
    let contrast = mask_contrast(&map.summed(), &binary.mask);
    let evidence = evidence_blocks(dubious, &map);
    let detection = match estimate {
        Some(e)
            if e.confidence == Confidence::High
                && !binary.degenerate
                && binary.mask.count() > 0
                && evidence >= MIN_EVIDENCE_BLOCKS =>
        {
            Confidence::High
        }
        _ => Confidence::Low,
    };
    Ok(Localization {
        mask: binary.mask,
        quality,
        estimate,
        detection,
        degenerate: binary.degenerate,
        contrast,
        evidence,
        curve,
    })
}

/// Mean summed difference per pixel above which a block counts as evidence.
pub const EVIDENCE_LEVEL: f64 = 1.0;

/// Evidence blocks required before a mask is reported as a detection.
pub const MIN_EVIDENCE_BLOCKS: usize = 8;

/// Count full 8×8 grid blocks free of clipped pixels (any channel at 0 or
/// 255) whose mean summed difference exceeds [`EVIDENCE_LEVEL`].
///
/// An image last saved at the map's quality sits at a fixed point of that
/// quantizer, so only clipped blocks fail to reproduce; ghost blocks carry
/// residue from the other quantizer.
pub fn evidence_blocks<T: Scalar>(dubious: &RgbImage, map: &DifferenceMap<T>) -> usize {
    let (w, h) = (map.width(), map.height());
    let summed = map.summed();
    let data = dubious.data();
    let mut count = 0;
    for by in 0..h / 8 {
        for bx in 0..w / 8 {
            let mut total = 0.0;
            let mut clipped = false;
            for y in by * 8..by * 8 + 8 {
                let row = y * w + bx * 8;
                clipped |= data[row * 3..(row + 8) * 3].iter().any(|&v| v == 0 || v == 255);
                total += summed[row..row + 8].iter().map(|v| v.to_f64_lossy()).sum::<f64>();
            }
            if !clipped && total / 64.0 > EVIDENCE_LEVEL {
                count += 1;
            }
        }
    }
    count
}

/// Integer quality of least energy strictly within one sweep step of
/// `estimate`, clipped to the sweep range. Covers saved between grid points
/// leave residue everywhere at the nearest grid quality; the exact quality
/// restores a clean background. Ties keep the quality closest to `estimate`.
pub fn refine_quality(dubious: &RgbImage, config: &SweepConfig, estimate: Quality) -> Result<Quality> {
    let step = config.step();
    if step <= 1 {
        return Ok(estimate);
    }
    let center = estimate.get();
    let lo = center.saturating_sub(step - 1).max(config.q_min().get());
    let hi = (center + step - 1).min(config.q_max().get());
    let base: YcbcrImage<f64> = rgb_to_ycbcr(dubious);
    let resaver = codec::Resaver::new(dubious)?;
    let mut candidates: Vec<u32> = (lo..=hi).collect();
    candidates.sort_by_key(|&q| (q.abs_diff(center), q));
    let mut best = (estimate, f64::INFINITY);
    for q in candidates {
        let quality = Quality::new(q)?;
        let energy = streamed_energy(&base, &resaver.resave(quality));
        if energy < best.1 {
            best = (quality, energy);
        }
    }
    Ok(best.0)
}

/// Ratio of the mean value inside `mask` to the mean outside; zero when
/// either side is empty or the inside is zero, infinite when only the
/// outside is zero.
pub fn mask_contrast<T: Scalar>(values: &[T], mask: &Mask) -> f64 {
    let (mut inside, mut outside, mut n_in) = (0.0f64, 0.0f64, 0usize);
    for (&v, &b) in values.iter().zip(mask.bits()) {
        if b {
            inside += v.to_f64_lossy();
            n_in += 1;
        } else {
            outside += v.to_f64_lossy();
        }
    }
    let n_out = values.len() - n_in;
    if n_in == 0 || n_out == 0 || inside == 0.0 {
        return 0.0;
    }
    (inside / n_in as f64) / (outside / n_out as f64)
}
