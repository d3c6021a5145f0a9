//! SSIM, difference energy, sweep curves and cover-quality estimation.
//!
//! SSIM is the product of the luminance, contrast and structure comparisons
//!
//! ```text
//! l = (2 μa μb + C1) / (μa² + μb² + C1)
//! c = (2 σa σb + C2) / (σa² + σb² + C2)
//! s = (σab + C3)     / (σa σb + C3)
//! ```
//!
//! with `C1 = (k1 L)²`, `C2 = (k2 L)²`, `C3 = C2 / 2`, evaluated over every
//! fully-contained Gaussian window of the studio-swing luma plane and
//! averaged. Energy is the plain sum of a difference map over all pixels
//! and channels.
//!
//! The cover quality is read off the sweep curves as the first interior
//! maximum of SSIM and the first interior minimum of energy; no smoothing
//! is applied.

use serde::{Deserialize, Serialize};

use crate::analysis::{DifferenceMap, SweepResult};
use crate::codec::{self, Quality};
use crate::colorspace::luma_plane;
use crate::error::{Error, Result};
use crate::raster::RgbImage;
use crate::scalar::Scalar;

/// SSIM constants and window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SsimParams<T: Scalar> {
    pub k1: T,
    pub k2: T,
    /// Dynamic range `L` of the samples.
    pub dynamic_range: T,
    /// Side of the square window in pixels (odd).
    pub window: usize,
    /// Standard deviation of the Gaussian window weights.
    pub sigma: T,
}

impl<T: Scalar> Default for SsimParams<T> {
    fn default() -> Self {
        Self {
            k1: T::lit(0.01),
            k2: T::lit(0.03),
            dynamic_range: T::lit(255.0),
            window: 11,
            sigma: T::lit(1.5),
        }
    }
}

impl<T: Scalar> SsimParams<T> {
    pub fn c1(&self) -> T {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> T {
        (self.k2 * self.dynamic_range).powi(2)
    }

    pub fn c3(&self) -> T {
        self.c2() / T::lit(2.0)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !(positive(self.k1) && positive(self.k2) && positive(self.dynamic_range) && positive(self.sigma)) {
            return Err(Error::invalid("SSIM constants and sigma must be positive"));
        }
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(Error::invalid(format!("SSIM window must be odd, got {}", self.window)));
        }
        Ok(())
    }

    /// Normalised 1-D Gaussian; the 2-D window is its outer product.
    pub fn kernel(&self) -> Vec<T> {
        let half = T::from_usize(self.window / 2).expect("small window");
        let two_sigma_sq = T::lit(2.0) * self.sigma * self.sigma;
        let raw: Vec<T> = (0..self.window)
            .map(|i| {
                let d = T::from_usize(i).expect("small window") - half;
                (-(d * d) / two_sigma_sq).exp()
            })
            .collect();
        let total: T = raw.iter().copied().sum();
        raw.into_iter().map(|v| v / total).collect()
    }

    /// Full 2-D window weights, row-major.
    pub fn weights(&self) -> Vec<T> {
        let k = self.kernel();
        k.iter().flat_map(|&a| k.iter().map(move |&b| a * b)).collect()
    }
}

/// Separable weighted filter keeping only fully-contained windows.
fn filter_valid<T: Scalar>(plane: &[T], width: usize, height: usize, kernel: &[T]) -> Vec<T> {
    let n = kernel.len();
    let (ow, oh) = (width + 1 - n, height + 1 - n);
    let mut horizontal = vec![T::zero(); ow * height];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        let dst = &mut horizontal[y * ow..(y + 1) * ow];
        for (k, &w) in kernel.iter().enumerate() {
            for (d, &s) in dst.iter_mut().zip(&row[k..k + ow]) {
                *d = *d + w * s;
            }
        }
    }
    let mut out = vec![T::zero(); ow * oh];
    for y in 0..oh {
        let dst = &mut out[y * ow..(y + 1) * ow];
        for (k, &w) in kernel.iter().enumerate() {
            let src = &horizontal[(y + k) * ow..(y + k + 1) * ow];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = *d + w * s;
            }
        }
    }
    out
}

/// Windowed statistics of a fixed reference plane, reused across a sweep.
#[derive(Debug, Clone)]
pub struct SsimReference<T: Scalar> {
    width: usize,
    height: usize,
    params: SsimParams<T>,
    kernel: Vec<T>,
    plane: Vec<T>,
    mean: Vec<T>,
    mean_sq: Vec<T>,
}

impl<T: Scalar> SsimReference<T> {
    /// Prepares the luma plane of `image` as the `a` side of SSIM.
    pub fn new(image: &RgbImage, params: SsimParams<T>) -> Result<Self> {
        Self::from_plane(luma_plane(image), image.width(), image.height(), params)
    }

    pub fn from_plane(plane: Vec<T>, width: usize, height: usize, params: SsimParams<T>) -> Result<Self> {
        params.validate()?;
        if width < params.window || height < params.window {
            return Err(Error::invalid(format!(
                "{width}x{height} image is smaller than the {0}x{0} SSIM window",
                params.window
            )));
        }
        let kernel = params.kernel();
        let squares: Vec<T> = plane.iter().map(|&v| v * v).collect();
        let mean = filter_valid(&plane, width, height, &kernel);
        let mean_sq = filter_valid(&squares, width, height, &kernel);
        Ok(Self {
            width,
            height,
            params,
            kernel,
            plane,
            mean,
            mean_sq,
        })
    }

    pub fn compare(&self, other: &RgbImage) -> Result<T> {
        if other.dimensions() != (self.width, self.height) {
            return Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width(),
                right_height: other.height(),
            });
        }
        Ok(self.compare_plane(&luma_plane(other)))
    }

    /// SSIM against a plane of identical dimensions.
    pub fn compare_plane(&self, other: &[T]) -> T {
        let (w, h) = (self.width, self.height);
        let n = self.kernel.len();
        let (ow, oh) = (w + 1 - n, h + 1 - n);

        // Horizontal pass over b, b² and ab together.
        let mut hb = vec![T::zero(); ow * h];
        let mut hbb = vec![T::zero(); ow * h];
        let mut hab = vec![T::zero(); ow * h];
        let mut sq = vec![T::zero(); w];
        let mut cross = vec![T::zero(); w];
        for y in 0..h {
            let b = &other[y * w..(y + 1) * w];
            let a = &self.plane[y * w..(y + 1) * w];
            for x in 0..w {
                sq[x] = b[x] * b[x];
                cross[x] = a[x] * b[x];
            }
            let rows = y * ow..(y + 1) * ow;
            let (db, dbb, dab) = (&mut hb[rows.clone()], &mut hbb[rows.clone()], &mut hab[rows]);
            for (k, &wk) in self.kernel.iter().enumerate() {
                for x in 0..ow {
                    db[x] = db[x] + wk * b[x + k];
                    dbb[x] = dbb[x] + wk * sq[x + k];
                    dab[x] = dab[x] + wk * cross[x + k];
                }
            }
        }

        let (c1, c2) = (self.params.c1(), self.params.c2());
        let two = T::lit(2.0);
        let mut total = T::zero();
        let (mut mb, mut mbb, mut mab) = (vec![T::zero(); ow], vec![T::zero(); ow], vec![T::zero(); ow]);
        for y in 0..oh {
            mb.fill(T::zero());
            mbb.fill(T::zero());
            mab.fill(T::zero());
            for (k, &wk) in self.kernel.iter().enumerate() {
                let rows = (y + k) * ow..(y + k + 1) * ow;
                let (sb, sbb, sab) = (&hb[rows.clone()], &hbb[rows.clone()], &hab[rows]);
                for x in 0..ow {
                    mb[x] = mb[x] + wk * sb[x];
                    mbb[x] = mbb[x] + wk * sbb[x];
                    mab[x] = mab[x] + wk * sab[x];
                }
            }
            for x in 0..ow {
                let i = y * ow + x;
                let (mu_a, mu_b) = (self.mean[i], mb[x]);
                let var_a = (self.mean_sq[i] - mu_a * mu_a).max(T::zero());
                let var_b = (mbb[x] - mu_b * mu_b).max(T::zero());
                let cov = mab[x] - mu_a * mu_b;
                // With c3 = c2 / 2 the contrast and structure terms share the
                // factor (2·sd_a·sd_b + c2) and their product needs no square root.
                let num = (two * mu_a * mu_b + c1) * (two * cov + c2);
                let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
                total = total + (num / den).max(-T::one()).min(T::one());
            }
        }
        total / T::from_usize(ow * oh).expect("window count")
    }
}

/// Mean SSIM of the studio-swing luma planes of `a` and `b`.
pub fn ssim<T: Scalar>(a: &RgbImage, b: &RgbImage, params: SsimParams<T>) -> Result<T> {
    SsimReference::new(a, params)?.compare(b)
}

/// Sum of every value of every plane of the map: each plane is summed in
/// raster order, then Y + Cb + Cr.
pub fn energy<T: Scalar>(map: &DifferenceMap<T>) -> T {
    let [y, cb, cr] = map.planes().each_ref().map(|p| p.iter().fold(T::zero(), |a, &v| a + v));
    y + cb + cr
}

/// One point of a resave sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CurveSample<T: Scalar> {
    pub quality: Quality,
    pub ssim: T,
    pub energy: T,
}

/// SSIM and energy against resave quality, qualities strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CurveSample<T>>", into = "Vec<CurveSample<T>>")]
#[serde(bound = "T: Scalar")]
pub struct SweepCurve<T: Scalar> {
    samples: Vec<CurveSample<T>>,
}

impl<T: Scalar> TryFrom<Vec<CurveSample<T>>> for SweepCurve<T> {
    type Error = Error;

    fn try_from(samples: Vec<CurveSample<T>>) -> Result<Self> {
        SweepCurve::new(samples)
    }
}

impl<T: Scalar> From<SweepCurve<T>> for Vec<CurveSample<T>> {
    fn from(curve: SweepCurve<T>) -> Self {
        curve.samples
    }
}

impl<T: Scalar> SweepCurve<T> {
    pub fn new(samples: Vec<CurveSample<T>>) -> Result<Self> {
        if samples.windows(2).any(|w| w[0].quality >= w[1].quality) {
            return Err(Error::invalid("curve qualities must be strictly increasing"));
        }
        if samples.iter().any(|s| !(s.energy >= T::zero())) {
            return Err(Error::invalid("curve energies must be non-negative"));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[CurveSample<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn ssim_series(&self) -> Vec<(Quality, T)> {
        self.samples.iter().map(|s| (s.quality, s.ssim)).collect()
    }

    pub fn energy_series(&self) -> Vec<(Quality, T)> {
        self.samples.iter().map(|s| (s.quality, s.energy)).collect()
    }

    /// Smallest gap between consecutive qualities.
    pub fn step(&self) -> Option<u32> {
        self.samples
            .windows(2)
            .map(|w| w[1].quality.get() - w[0].quality.get())
            .min()
    }

    /// Sample with the smallest energy (first one on ties).
    pub fn energy_argmin(&self) -> Option<Quality> {
        self.samples
            .iter()
            .fold(None::<&CurveSample<T>>, |best, s| match best {
                Some(b) if b.energy <= s.energy => Some(b),
                _ => Some(s),
            })
            .map(|s| s.quality)
    }

    /// CSV with header `quality,ssim,energy`, one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quality,ssim,energy\n");
        for s in &self.samples {
            out.push_str(&format!("{},{},{}\n", s.quality, s.ssim, s.energy));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("quality,ssim,energy") {
            return Err(Error::invalid("curve CSV must start with `quality,ssim,energy`"));
        }
        let parse_err = |line: &str| Error::invalid(format!("bad curve CSV row `{line}`"));
        let samples = lines
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != 3 {
                    return Err(parse_err(line));
                }
                let quality = fields[0].trim().parse::<u32>().map_err(|_| parse_err(line))?;
                let num = |f: &str| f.trim().parse::<f64>().map(T::lit).map_err(|_| parse_err(line));
                Ok(CurveSample {
                    quality: Quality::new(quality)?,
                    ssim: num(fields[1])?,
                    energy: num(fields[2])?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SweepCurve::new(samples)
    }
}

fn first_interior<T: Scalar>(
    samples: &[(Quality, T)],
    rises_into: impl Fn(T, T) -> bool,
    holds_after: impl Fn(T, T) -> bool,
) -> Result<Option<Quality>> {
    if samples.len() < 3 {
        return Err(Error::invalid(format!(
            "extremum search needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    Ok(samples.windows(3).find_map(|w| {
        let (prev, (q, v), next) = (w[0].1, w[1], w[2].1);
        (rises_into(v, prev) && holds_after(v, next)).then_some(q)
    }))
}

/// First interior `q_i` with `v(q_i) > v(q_{i-1})` and `v(q_i) >= v(q_{i+1})`.
///
/// Endpoints never qualify; on a plateau the first (smallest) quality wins.
pub fn first_local_max<T: Scalar>(samples: &[(Quality, T)]) -> Result<Option<Quality>> {
    first_interior(samples, |v, prev| v > prev, |v, next| v >= next)
}

/// Mirror of [`first_local_max`] with the inequalities reversed.
pub fn first_local_min<T: Scalar>(samples: &[(Quality, T)]) -> Result<Option<Quality>> {
    first_interior(samples, |v, prev| v < prev, |v, next| v <= next)
}

/// Relative depth below which an energy dip counts as ripple, not a minimum.
///
/// Measured on the desk corpus: dips below the cover quality caused by
/// quantizer harmonics stay under 0.5%, while the dip at the cover quality
/// is at least 1.1% deep.
pub const ENERGY_RIPPLE: f64 = 0.0075;

/// [`first_local_min`] that also requires both neighbours to exceed the
/// minimum by the relative `ripple` (a plateau to the right is still
/// allowed). A ripple of zero reproduces [`first_local_min`].
pub fn first_prominent_min<T: Scalar>(samples: &[(Quality, T)], ripple: f64) -> Result<Option<Quality>> {
    let factor = T::lit(1.0 + ripple.max(0.0));
    first_interior(
        samples,
        |v, prev| v < prev && prev >= v * factor,
        |v, next| next == v || next >= v * factor,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    High,
    Low,
}

/// Cover-quality estimate read off the SSIM and energy curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityEstimate {
    pub q_ssim: Option<Quality>,
    pub q_energy: Option<Quality>,
    pub q_final: Quality,
    pub confidence: Confidence,
}

/// First SSIM maximum and first energy minimum deeper than
/// [`ENERGY_RIPPLE`]; the energy estimate wins.
///
/// Confidence is high only when both extrema exist and lie within one sweep
/// step of each other.
pub fn estimate_cover_quality<T: Scalar>(curve: &SweepCurve<T>) -> Result<QualityEstimate> {
    let q_ssim = first_local_max(&curve.ssim_series())?;
    let q_energy = first_prominent_min(&curve.energy_series(), ENERGY_RIPPLE)?;
    let q_final = q_energy.or(q_ssim).ok_or(Error::EstimationFailure)?;
    let step = curve.step().unwrap_or(1);
    let confidence = match (q_ssim, q_energy) {
        (Some(a), Some(b)) if a.get().abs_diff(b.get()) <= step => Confidence::High,
        _ => Confidence::Low,
    };
    Ok(QualityEstimate {
        q_ssim,
        q_energy,
        q_final,
        confidence,
    })
}

/// Recomputes the curve of a sweep: SSIM of `dubious` against its resave at
/// each quality, and the energy of the sweep's map at that quality.
pub fn build_curve<T: Scalar>(
    sweep: &SweepResult<T>,
    dubious: &RgbImage,
    params: SsimParams<T>,
) -> Result<SweepCurve<T>> {
    if sweep.qualities.is_empty() {
        return Err(Error::invalid("empty sweep"));
    }
    let reference = SsimReference::new(dubious, params)?;
    let samples = sweep
        .qualities
        .iter()
        .zip(&sweep.maps)
        .map(|(&quality, map)| {
            let resaved = codec::resave(dubious, quality)?;
            Ok(CurveSample {
                quality,
                ssim: reference.compare(&resaved)?,
                energy: energy(map),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SweepCurve::new(samples)
}

/// JSON record of a curve together with its estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CurveRecord<T: Scalar> {
    pub estimate: Option<QualityEstimate>,
    pub curve: SweepCurve<T>,
}
