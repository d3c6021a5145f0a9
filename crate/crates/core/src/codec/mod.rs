//! Baseline sequential JPEG codec with an explicit quality-to-table mapping.
//!
//! The encoder always writes 4:4:4 (no chroma subsampling) Huffman-coded
//! baseline streams with the Annex K Huffman tables, so the output is a
//! deterministic function of the pixels and the quality. The decoder reads
//! any baseline/extended-sequential 8-bit Huffman stream with one or three
//! components and arbitrary sampling factors.
//!
//! Colour conversion inside the codec is the JFIF full-swing transform,
//! rounded half away from zero and clamped to [0, 255] in both directions.

mod decoder;
mod dct;
mod encoder;
mod frame;
mod huffman;
pub mod tables;

use serde::{Deserialize, Serialize};

pub use crate::error::CodecError;
use crate::raster::RgbImage;

pub use decoder::read_quant_tables;

/// JPEG quality factor in `[1, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Quality(u8);

impl Quality {
    pub const MIN: Quality = Quality(1);
    pub const MAX: Quality = Quality(100);

    pub fn new(q: u32) -> Result<Self, CodecError> {
        if (1..=100).contains(&q) {
            Ok(Quality(q as u8))
        } else {
            Err(CodecError::InvalidQuality(q))
        }
    }

    pub fn get(self) -> u32 {
        u32::from(self.0)
    }
}

impl TryFrom<u32> for Quality {
    type Error = CodecError;

    fn try_from(q: u32) -> Result<Self, Self::Error> {
        Quality::new(q)
    }
}

impl From<Quality> for u32 {
    fn from(q: Quality) -> u32 {
        q.get()
    }
}

impl std::fmt::Display for Quality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Luma and chroma quantization tables, natural (row-major) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantTables {
    pub luma: [u16; 64],
    pub chroma: [u16; 64],
}

impl QuantTables {
    /// The tables as 8x8 grids (row = vertical frequency).
    pub fn luma_grid(&self) -> [[u16; 8]; 8] {
        std::array::from_fn(|r| std::array::from_fn(|c| self.luma[r * 8 + c]))
    }

    pub fn chroma_grid(&self) -> [[u16; 8]; 8] {
        std::array::from_fn(|r| std::array::from_fn(|c| self.chroma[r * 8 + c]))
    }
}

/// Scales the Annex K reference tables for quality `q`.
///
/// `scale = 5000/q` below 50 and `200 - 2q` from 50 up; each entry becomes
/// `clamp(floor((T * scale + 50) / 100), 1, 255)`.
pub fn quality_to_quant_tables(q: Quality) -> QuantTables {
    let q = q.get();
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    let scaled = |reference: &[u16; 64]| -> [u16; 64] {
        reference.map(|t| ((u32::from(t) * scale + 50) / 100).clamp(1, 255) as u16)
    };
    QuantTables {
        luma: scaled(&tables::LUMA_QUANT),
        chroma: scaled(&tables::CHROMA_QUANT),
    }
}

/// A complete JPEG stream, from SOI (`FF D8`) to EOI (`FF D9`).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct JpegBytes(Vec<u8>);

impl std::fmt::Debug for JpegBytes {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "JpegBytes({} bytes)", self.0.len())
    }
}

impl JpegBytes {
    /// Wraps bytes after checking the SOI/EOI framing.
    pub fn new(bytes: Vec<u8>) -> Result<Self, CodecError> {
        if bytes.len() < 4 || bytes[..2] != [0xFF, 0xD8] {
            return Err(CodecError::parse(0, "missing SOI marker"));
        }
        if bytes[bytes.len() - 2..] != [0xFF, 0xD9] {
            return Err(CodecError::parse(bytes.len(), "missing EOI marker"));
        }
        Ok(JpegBytes(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl AsRef<[u8]> for JpegBytes {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

/// Encodes `image` as a 4:4:4 baseline JFIF stream at quality `q`.
pub fn encode(image: &RgbImage, q: Quality) -> Result<JpegBytes, CodecError> {
    check_encodable(image)?;
    let tables = quality_to_quant_tables(q);
    let frame = encoder::quantize(image, &tables);
    Ok(JpegBytes(encoder::write_stream(&frame, &tables)))
}

/// Decodes a baseline JPEG stream into RGB (grayscale is replicated).
pub fn decode(bytes: &[u8]) -> Result<RgbImage, CodecError> {
    decoder::decode(bytes)
}

/// `decode(encode(image, q))`.
///
/// The entropy coding stage is lossless, so this skips it and reconstructs
/// directly from the quantized coefficients through the decoder's path; the
/// result is bit-identical to the round trip through bytes.
pub fn resave(image: &RgbImage, q: Quality) -> Result<RgbImage, CodecError> {
    Ok(Resaver::new(image)?.resave(q))
}

/// Repeated resaves of one image. The colour transform and forward DCT are
/// computed once; each [`Resaver::resave`] only quantizes and reconstructs.
/// Output is identical to [`resave`].
#[derive(Debug, Clone)]
pub struct Resaver {
    spectrum: encoder::Spectrum,
}

impl Resaver {
    pub fn new(image: &RgbImage) -> Result<Self, CodecError> {
        check_encodable(image)?;
        Ok(Self {
            spectrum: encoder::Spectrum::new(image),
        })
    }

    pub fn resave(&self, q: Quality) -> RgbImage {
        self.spectrum.reconstruct(&quality_to_quant_tables(q))
    }
}

fn check_encodable(image: &RgbImage) -> Result<(), CodecError> {
    let (w, h) = image.dimensions();
    if w == 0 || h == 0 || w > 65535 || h > 65535 {
        return Err(CodecError::InvalidInput(format!(
            "cannot encode a {w}x{h} image (dimensions must be in 1..=65535)"
        )));
    }
    Ok(())
}
