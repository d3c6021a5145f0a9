//! Dataset grid: every corpus image crossed with every (cover, ghost)
//! quality pair, laid out as `F_c{i}/Z_c{i}_g{j}/xx_yy_zz.jpg`.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ForgerySpec, Point, DEFAULT_GHOST_RECT, DEFAULT_RESAVE_QUALITY};
use crate::codec::{self, Quality, Resaver};
use crate::error::{Error, Result};
use crate::io;
use crate::raster::{Mask, Rect};

pub const MANIFEST_FILE: &str = "manifest.json";
const CORPUS_EXTENSIONS: [&str; 5] = ["tif", "tiff", "png", "jpg", "jpeg"];

/// Cover and ghost quality lists crossed into composite pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetGrid {
    pub covers: Vec<Quality>,
    pub ghosts: Vec<Quality>,
    /// Drop pairs whose ghost quality equals the cover quality.
    pub skip_equal: bool,
}

fn qualities(lo: u32, hi: u32, step: u32) -> Vec<Quality> {
    (lo..=hi)
        .step_by(step as usize)
        .map(|q| Quality::new(q).expect("grid quality in range"))
        .collect()
}

impl DatasetGrid {
    /// Covers 40..=90 and ghosts 40..=100 in steps of 5, ghost always
    /// differing from cover: 11 cover folders of 12 ghost sub-folders.
    pub fn standard() -> Self {
        Self {
            covers: qualities(40, 90, 5),
            ghosts: qualities(40, 100, 5),
            skip_equal: true,
        }
    }

    pub fn new(covers: Vec<Quality>, ghosts: Vec<Quality>, skip_equal: bool) -> Self {
        Self {
            covers,
            ghosts,
            skip_equal,
        }
    }

    /// `(cover, ghost)` pairs in cover-major order.
    pub fn pairs(&self) -> Vec<(Quality, Quality)> {
        self.covers
            .iter()
            .flat_map(|&c| self.ghosts.iter().map(move |&g| (c, g)))
            .filter(|(c, g)| !(self.skip_equal && c == g))
            .collect()
    }

    /// Composites planned for a corpus of `images` images.
    pub fn planned(&self, images: usize) -> usize {
        images * self.pairs().len()
    }

    /// Sorted union of cover and ghost qualities.
    pub fn quality_union(&self) -> Vec<Quality> {
        let mut all: Vec<Quality> = self.covers.iter().chain(&self.ghosts).copied().collect();
        all.sort();
        all.dedup();
        all
    }
}

/// Parsed `xx_yy_zz.jpg` name: image number, ghost quality, cover quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DatasetName {
    pub image: usize,
    pub ghost_q: Quality,
    pub cover_q: Quality,
}

pub fn format_name(name: &DatasetName) -> String {
    format!("{:03}_{:02}_{:02}.jpg", name.image, name.ghost_q.get(), name.cover_q.get())
}

pub fn parse_name(file_name: &str) -> Result<DatasetName> {
    let bad = || Error::invalid(format!("{file_name:?} does not match xx_yy_zz.jpg"));
    let stem = file_name.strip_suffix(".jpg").ok_or_else(bad)?;
    let parts: Vec<&str> = stem.split('_').collect();
    if parts.len() != 3 || parts.iter().any(|p| p.len() < 2 || !p.bytes().all(|b| b.is_ascii_digit())) {
        return Err(bad());
    }
    let number = |s: &str| s.parse::<u32>().map_err(|_| bad());
    Ok(DatasetName {
        image: number(parts[0])? as usize,
        ghost_q: Quality::new(number(parts[1])?).map_err(|_| bad())?,
        cover_q: Quality::new(number(parts[2])?).map_err(|_| bad())?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetOptions {
    pub grid: DatasetGrid,
    /// Ghost rectangle, pasted back at its own position.
    pub region: Rect,
    pub resave_q: Quality,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            grid: DatasetGrid::standard(),
            region: DEFAULT_GHOST_RECT,
            resave_q: Quality::new(DEFAULT_RESAVE_QUALITY).expect("valid quality"),
        }
    }
}

/// One composite; paths are relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub path: String,
    pub mask_path: String,
    /// Corpus file the composite was made from.
    pub source: String,
    pub spec: ForgerySpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema: u32,
    pub corpus_id: String,
    pub quality_grid: Vec<Quality>,
    pub grid: DatasetGrid,
    pub entries: Vec<DatasetEntry>,
    pub errors: Vec<DatasetError>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        io::write_file(path, text.as_bytes())
    }
}

/// Image files directly inside `dir`, sorted by name.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if path.is_file() && ext.is_some_and(|e| CORPUS_EXTENSIONS.contains(&e.as_str())) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn relative(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

fn build_one(
    number: usize,
    file: &Path,
    out_dir: &Path,
    options: &DatasetOptions,
) -> Result<Vec<DatasetEntry>> {
    let image = io::load_image(file)?;
    let region = options.region;
    if !image.bounds().contains_rect(region) || region.is_empty() {
        return Err(Error::format(
            file,
            format!("ghost rectangle {region} does not fit the {}x{} image", image.width(), image.height()),
        ));
    }
    let resaver = Resaver::new(&image)?;
    let grid_q = options.grid.quality_union();
    let resaved: Vec<_> = grid_q.par_iter().map(|&q| resaver.resave(q)).collect();
    let at = |q: Quality| &resaved[grid_q.binary_search(&q).expect("quality in union")];

    let mask_rel = PathBuf::from("masks").join(format!("{number:03}.png"));
    let mask = Mask::from_rect(image.width(), image.height(), region);
    io::write_file(&out_dir.join(&mask_rel), &mask.to_png()?)?;

    let source = file
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    options
        .grid
        .pairs()
        .into_par_iter()
        .map(|(cover_q, ghost_q)| {
            let mut composite = at(cover_q).clone();
            composite.paste(&at(ghost_q).crop(region)?, region.x, region.y)?;
            let jpeg = codec::encode(&composite, options.resave_q)?;
            let name = format_name(&DatasetName {
                image: number,
                ghost_q,
                cover_q,
            });
            let rel = PathBuf::from(format!("F_c{cover_q}"))
                .join(format!("Z_c{cover_q}_g{ghost_q}"))
                .join(name);
            io::write_file(&out_dir.join(&rel), jpeg.as_bytes())?;
            let spec = ForgerySpec::ghost_insert(cover_q, ghost_q, region, Point { x: region.x, y: region.y })
                .with_resave(options.resave_q);
            Ok(DatasetEntry {
                path: relative(&rel),
                mask_path: relative(&mask_rel),
                source: source.clone(),
                spec,
            })
        })
        .collect()
}

/// Writes every composite of the grid plus one mask per corpus image and
/// `manifest.json` under `out_dir`. Unreadable corpus files are recorded
/// in the manifest's error list; image numbers follow sorted file order
/// starting at 1.
pub fn build_dataset(corpus_dir: &Path, out_dir: &Path, options: &DatasetOptions) -> Result<DatasetManifest> {
    let files = corpus_files(corpus_dir)?;
    if files.is_empty() {
        return Err(Error::invalid(format!("no corpus images in {}", corpus_dir.display())));
    }
    if options.grid.pairs().is_empty() {
        return Err(Error::invalid("quality grid has no (cover, ghost) pairs"));
    }
    let results: Vec<_> = files
        .par_iter()
        .enumerate()
        .map(|(i, file)| build_one(i + 1, file, out_dir, options))
        .collect();
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for (file, result) in files.iter().zip(results) {
        match result {
            Ok(mut e) => entries.append(&mut e),
            Err(e) => errors.push(DatasetError {
                path: file.display().to_string(),
                message: e.chain(),
            }),
        }
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    let corpus_id = corpus_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".into());
    let manifest = DatasetManifest {
        schema: 1,
        corpus_id,
        quality_grid: options.grid.quality_union(),
        grid: options.grid.clone(),
        entries,
        errors,
    };
    manifest.save(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}
