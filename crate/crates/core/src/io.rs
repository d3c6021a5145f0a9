//! Image file I/O: PNG/TIFF through the `image` crate, JPEG through our codec.

use std::io::Cursor;
use std::path::Path;

use image::{ImageBuffer, ImageFormat, Luma};

use crate::codec;
use crate::error::{Error, Result};
use crate::raster::RgbImage;

pub(crate) fn encode_png_gray8(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    let buf = ImageBuffer::<Luma<u8>, _>::from_raw(width as u32, height as u32, pixels.to_vec())
        .ok_or_else(|| Error::invalid("pixel buffer does not match mask size"))?;
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::invalid(format!("PNG encoding failed: {e}")))?;
    Ok(out.into_inner())
}

pub(crate) fn encode_png_gray16(width: usize, height: usize, pixels: &[u16]) -> Result<Vec<u8>> {
    let buf = ImageBuffer::<Luma<u16>, _>::from_raw(width as u32, height as u32, pixels.to_vec())
        .ok_or_else(|| Error::invalid("pixel buffer does not match map size"))?;
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::invalid(format!("PNG encoding failed: {e}")))?;
    Ok(out.into_inner())
}

pub(crate) fn decode_png_gray8(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| Error::invalid(format!("PNG decoding failed: {e}")))?
        .into_luma8();
    let (w, h) = img.dimensions();
    Ok((w as usize, h as usize, img.into_raw()))
}

fn is_jpeg(bytes: &[u8]) -> bool {
    bytes.starts_with(&[0xFF, 0xD8])
}

/// Decodes JPEG (own codec), PNG or TIFF bytes into RGB.
pub fn decode_image(bytes: &[u8]) -> Result<RgbImage> {
    if is_jpeg(bytes) {
        return Ok(codec::decode(bytes)?);
    }
    let format = image::guess_format(bytes).map_err(|e| Error::invalid(format!("unrecognised image format: {e}")))?;
    let img = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| Error::invalid(format!("image decoding failed: {e}")))?
        .into_rgb8();
    let (w, h) = img.dimensions();
    RgbImage::new(w as usize, h as usize, img.into_raw())
}

/// Reads and decodes an image file.
pub fn load_image(path: &Path) -> Result<RgbImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::format(path, msg),
        Error::Codec(c) => Error::format(path, c),
        other => other,
    })
}

fn is_png_or_tiff(bytes: &[u8]) -> bool {
    bytes.starts_with(b"\x89PNG") || bytes.starts_with(b"II*\0") || bytes.starts_with(b"MM\0*")
}

/// Reads a suspect image: PNG and TIFF through the `image` crate, anything
/// else as JPEG so that malformed input reports the failing byte offset.
pub fn load_suspect(path: &Path) -> Result<RgbImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if is_png_or_tiff(&bytes) {
        return load_image(path);
    }
    codec::decode(&bytes).map_err(|e| Error::format(path, e))
}

/// Lossless PNG encoding of an RGB image.
pub fn encode_png_rgb(image: &RgbImage) -> Result<Vec<u8>> {
    let buf = image::RgbImage::from_raw(image.width() as u32, image.height() as u32, image.data().to_vec())
        .expect("buffer length matches");
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::invalid(format!("PNG encoding failed: {e}")))?;
    Ok(out.into_inner())
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
