//! JPEG ghost forensics.
//!
//! A suspect image is resaved across a range of JPEG qualities; the cubed
//! YCbCr differences between the suspect and each resave form difference
//! maps whose energy, together with SSIM, reveals the cover image's
//! original quality. The map at that quality is binarized into a tamper
//! mask. Around the analysis sit a baseline JPEG codec, a forgery
//! synthesizer with exact ground truth and an evaluation harness.
//!
//! Floating-point stages are generic over [`Scalar`] (`f32` or `f64`);
//! the aliases below name the concrete instantiations.

pub mod analysis;
pub mod codec;
pub mod colorspace;
pub mod error;
pub mod eval;
pub mod forge;
pub mod io;
pub mod metrics;
pub mod morphology;
pub mod raster;
pub mod scalar;
pub mod synth;

pub use error::{CodecError, Error, Result};
pub use scalar::Scalar;

pub type YcbcrImageF64 = colorspace::YcbcrImage<f64>;
pub type YcbcrImageF32 = colorspace::YcbcrImage<f32>;
pub type DifferenceMapF64 = analysis::DifferenceMap<f64>;
pub type DifferenceMapF32 = analysis::DifferenceMap<f32>;
pub type SweepResultF64 = analysis::SweepResult<f64>;
pub type SweepResultF32 = analysis::SweepResult<f32>;
pub type SweepCurveF64 = metrics::SweepCurve<f64>;
pub type SweepCurveF32 = metrics::SweepCurve<f32>;
pub type SsimParamsF64 = metrics::SsimParams<f64>;
pub type SsimParamsF32 = metrics::SsimParams<f32>;
pub type LocalizationF64 = analysis::Localization<f64>;
pub type LocalizationF32 = analysis::Localization<f32>;
