//! Forgery synthesis with exact ground truth: ghost insertion, copy-move,
//! text insertion, rescaled ghosts and the dataset grid built from them.
//!
//! Every operation first resaves the input at `cover_q`, applies its edit
//! and encodes the composite at `resave_q`.

mod dataset;
pub mod font;

use serde::{Deserialize, Serialize};

use crate::codec::{self, JpegBytes, Quality};
use crate::error::{Error, Result};
use crate::raster::{GroundTruthMask, Mask, Rect, RgbImage};

pub use dataset::{
    build_dataset, corpus_files, format_name, parse_name, DatasetEntry, DatasetError, DatasetGrid, DatasetManifest,
    DatasetName, DatasetOptions, MANIFEST_FILE,
};

/// Default placement of inserted ghosts.
pub const DEFAULT_GHOST_RECT: Rect = Rect::new(190, 60, 64, 64);
/// Default quality of the final composite save.
pub const DEFAULT_RESAVE_QUALITY: u32 = 100;
/// Ghost edge lengths of the tiny-ghost suite.
pub const TINY_GHOST_SIZES: [usize; 6] = [10, 20, 30, 40, 50, 60];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForgeryKind {
    GhostInsert,
    CopyMove,
    TextInsert,
    Rescale,
}

impl ForgeryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ForgeryKind::GhostInsert => "ghost_insert",
            ForgeryKind::CopyMove => "copy_move",
            ForgeryKind::TextInsert => "text_insert",
            ForgeryKind::Rescale => "rescale",
        }
    }
}

impl std::fmt::Display for ForgeryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: usize,
    pub y: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Size {
    pub w: usize,
    pub h: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TextSpec {
    pub text: String,
    /// Requested glyph height in pixels; rounded to a multiple of 7.
    pub height: usize,
}

fn default_resave() -> Quality {
    Quality::new(DEFAULT_RESAVE_QUALITY).expect("valid quality")
}

/// Declarative description of one synthesized forgery.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ForgerySpec {
    pub kind: ForgeryKind,
    pub cover_q: Quality,
    /// Quality of the pasted region; ghost insertion only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ghost_q: Option<Quality>,
    /// Source rectangle; unused by text insertion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Rect>,
    /// Destination top-left; defaults to the region origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dest_size: Option<Size>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<TextSpec>,
    #[serde(default = "default_resave")]
    pub resave_q: Quality,
}

impl ForgerySpec {
    pub fn ghost_insert(cover_q: Quality, ghost_q: Quality, region: Rect, target: Point) -> Self {
        Self {
            kind: ForgeryKind::GhostInsert,
            cover_q,
            ghost_q: Some(ghost_q),
            region: Some(region),
            target: Some(target),
            dest_size: None,
            text: None,
            resave_q: default_resave(),
        }
    }

    pub fn copy_move(cover_q: Quality, region: Rect, target: Point) -> Self {
        Self {
            kind: ForgeryKind::CopyMove,
            ghost_q: None,
            ..Self::ghost_insert(cover_q, cover_q, region, target)
        }
    }

    pub fn text_insert(cover_q: Quality, text: impl Into<String>, height: usize, target: Point) -> Self {
        Self {
            kind: ForgeryKind::TextInsert,
            cover_q,
            ghost_q: None,
            region: None,
            target: Some(target),
            dest_size: None,
            text: Some(TextSpec {
                text: text.into(),
                height,
            }),
            resave_q: default_resave(),
        }
    }

    pub fn rescale(cover_q: Quality, region: Rect, dest_size: Size, target: Point) -> Self {
        Self {
            kind: ForgeryKind::Rescale,
            ghost_q: None,
            dest_size: Some(dest_size),
            ..Self::ghost_insert(cover_q, cover_q, region, target)
        }
    }

    pub fn with_resave(mut self, q: Quality) -> Self {
        self.resave_q = q;
        self
    }

    fn region(&self) -> Result<Rect> {
        self.region
            .ok_or_else(|| Error::invalid(format!("{} spec needs a region", self.kind)))
    }

    fn target(&self) -> Result<Point> {
        match (self.target, self.region) {
            (Some(t), _) => Ok(t),
            (None, Some(r)) => Ok(Point { x: r.x, y: r.y }),
            (None, None) => Err(Error::invalid(format!("{} spec needs a target", self.kind))),
        }
    }

    /// Rectangle written by the forgery; `None` for text, whose footprint
    /// is the glyph coverage.
    pub fn dest_rect(&self) -> Result<Option<Rect>> {
        let t = self.target()?;
        match self.kind {
            ForgeryKind::TextInsert => Ok(None),
            ForgeryKind::Rescale => {
                let size = self
                    .dest_size
                    .ok_or_else(|| Error::invalid("rescale spec needs dest_size"))?;
                Ok(Some(Rect::new(t.x, t.y, size.w, size.h)))
            }
            _ => {
                let r = self.region()?;
                Ok(Some(Rect::new(t.x, t.y, r.w, r.h)))
            }
        }
    }
}

/// A forged JPEG and its exact tamper mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Forgery {
    pub jpeg: JpegBytes,
    pub mask: GroundTruthMask,
}

fn require_kind(spec: &ForgerySpec, kind: ForgeryKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::invalid(format!("expected a {kind} spec, got {}", spec.kind)));
    }
    Ok(())
}

fn check_rect(image: &RgbImage, rect: Rect, what: &str) -> Result<()> {
    if rect.is_empty() || !image.bounds().contains_rect(rect) {
        return Err(Error::invalid(format!(
            "{what} {rect} is empty or outside the {}x{} image",
            image.width(),
            image.height()
        )));
    }
    Ok(())
}

fn finish(composite: &RgbImage, mask: Mask, spec: &ForgerySpec) -> Result<Forgery> {
    Ok(Forgery {
        jpeg: codec::encode(composite, spec.resave_q)?,
        mask,
    })
}

/// Pastes the region, resaved at `ghost_q`, onto the cover resaved at
/// `cover_q`.
pub fn ghost_insert(image: &RgbImage, spec: &ForgerySpec) -> Result<Forgery> {
    require_kind(spec, ForgeryKind::GhostInsert)?;
    let region = spec.region()?;
    let dest = spec.dest_rect()?.expect("rectangular forgery");
    let ghost_q = spec
        .ghost_q
        .ok_or_else(|| Error::invalid("ghost_insert spec needs ghost_q"))?;
    check_rect(image, region, "region")?;
    check_rect(image, dest, "destination")?;
    let mut composite = codec::resave(image, spec.cover_q)?;
    let ghost = codec::resave(image, ghost_q)?.crop(region)?;
    composite.paste(&ghost, dest.x, dest.y)?;
    finish(&composite, Mask::from_rect(image.width(), image.height(), dest), spec)
}

/// Copies the region to the target within the cover resaved at `cover_q`.
pub fn copy_move(image: &RgbImage, spec: &ForgerySpec) -> Result<Forgery> {
    require_kind(spec, ForgeryKind::CopyMove)?;
    let region = spec.region()?;
    let dest = spec.dest_rect()?.expect("rectangular forgery");
    check_rect(image, region, "region")?;
    check_rect(image, dest, "destination")?;
    let mut composite = codec::resave(image, spec.cover_q)?;
    let patch = composite.crop(region)?;
    composite.paste(&patch, dest.x, dest.y)?;
    finish(&composite, Mask::from_rect(image.width(), image.height(), dest), spec)
}

/// Draws the text in black with the built-in font at the target.
pub fn text_insert(image: &RgbImage, spec: &ForgerySpec) -> Result<Forgery> {
    require_kind(spec, ForgeryKind::TextInsert)?;
    let text = spec
        .text
        .as_ref()
        .ok_or_else(|| Error::invalid("text_insert spec needs text"))?;
    let target = spec.target()?;
    let scale = font::scale_for_height(text.height);
    let (tw, th) = font::text_extent(&text.text, scale);
    if tw > 0 && (target.x + tw > image.width() || target.y + th > image.height()) {
        return Err(Error::invalid(format!(
            "text {tw}x{th} at ({},{}) exceeds the {}x{} image",
            target.x,
            target.y,
            image.width(),
            image.height()
        )));
    }
    let mut composite = codec::resave(image, spec.cover_q)?;
    let mut mask = Mask::new(image.width(), image.height());
    font::rasterize(&text.text, scale, |x, y| {
        composite.put_pixel(target.x + x, target.y + y, [0, 0, 0]);
        mask.set(target.x + x, target.y + y, true);
    });
    finish(&composite, mask, spec)
}

/// Bilinear resampling with pixel centres aligned; an identity resize
/// returns the input unchanged.
pub fn resize_bilinear(image: &RgbImage, w: usize, h: usize) -> Result<RgbImage> {
    if w == 0 || h == 0 {
        return Err(Error::invalid(format!("cannot resize to {w}x{h}")));
    }
    let (sw, sh) = (image.width(), image.height());
    let axis = |d: usize, dst: usize, src: usize| {
        let s = ((d as f64 + 0.5) * src as f64 / dst as f64 - 0.5).clamp(0.0, (src - 1) as f64);
        let i0 = s.floor() as usize;
        (i0, (i0 + 1).min(src - 1), s - i0 as f64)
    };
    Ok(RgbImage::from_fn(w, h, |x, y| {
        let (x0, x1, fx) = axis(x, w, sw);
        let (y0, y1, fy) = axis(y, h, sh);
        let (a, b, c, d) = (image.pixel(x0, y0), image.pixel(x1, y0), image.pixel(x0, y1), image.pixel(x1, y1));
        std::array::from_fn(|k| {
            let top = a[k] as f64 * (1.0 - fx) + b[k] as f64 * fx;
            let bottom = c[k] as f64 * (1.0 - fx) + d[k] as f64 * fx;
            (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8
        })
    }))
}

/// Resamples the region to `dest_size` and pastes it at the target.
pub fn rescale_ghost(image: &RgbImage, spec: &ForgerySpec) -> Result<Forgery> {
    require_kind(spec, ForgeryKind::Rescale)?;
    let region = spec.region()?;
    let dest = spec.dest_rect()?.expect("rectangular forgery");
    check_rect(image, region, "region")?;
    check_rect(image, dest, "destination")?;
    let mut composite = codec::resave(image, spec.cover_q)?;
    let patch = resize_bilinear(&composite.crop(region)?, dest.w, dest.h)?;
    composite.paste(&patch, dest.x, dest.y)?;
    finish(&composite, Mask::from_rect(image.width(), image.height(), dest), spec)
}

/// Dispatches on `spec.kind`.
pub fn forge(image: &RgbImage, spec: &ForgerySpec) -> Result<Forgery> {
    match spec.kind {
        ForgeryKind::GhostInsert => ghost_insert(image, spec),
        ForgeryKind::CopyMove => copy_move(image, spec),
        ForgeryKind::TextInsert => text_insert(image, spec),
        ForgeryKind::Rescale => rescale_ghost(image, spec),
    }
}

/// One square ghost insertion per size, all with their top-left at `origin`.
pub fn tiny_ghost_suite(
    image: &RgbImage,
    cover_q: Quality,
    ghost_q: Quality,
    sizes: &[usize],
    origin: Point,
) -> Result<Vec<Forgery>> {
    sizes
        .iter()
        .map(|&s| {
            let region = Rect::new(origin.x, origin.y, s, s);
            ghost_insert(image, &ForgerySpec::ghost_insert(cover_q, ghost_q, region, origin))
        })
        .collect()
}
