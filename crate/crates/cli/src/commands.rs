use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use ghostkit::analysis::{localize, SweepConfig};
use ghostkit::codec::Quality;
use ghostkit::eval::{evaluate, export_report};
use ghostkit::forge::{self, DatasetGrid, DatasetManifest, DatasetOptions, ForgerySpec};
use ghostkit::io;
use ghostkit::metrics::Confidence;
use ghostkit::raster::{Rect, RgbImage};
use ghostkit::synth;

use crate::{Command, Common, Format};

const EXIT_LOW_CONFIDENCE: u8 = 2;

pub fn run(command: Command) -> Result<ExitCode> {
    let jobs = match &command {
        Command::Analyze { common, .. }
        | Command::Forge { common, .. }
        | Command::Dataset { common, .. }
        | Command::Evaluate { common, .. } => common.jobs,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs as usize)
        .build()
        .context("failed to start worker threads")?;
    pool.install(|| dispatch(command))
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Analyze { input, common } => analyze(&input, &common),
        Command::Forge {
            spec,
            input,
            synthetic,
            name,
            common,
        } => forge_cmd(&spec, input, synthetic, name, &common),
        Command::Dataset {
            corpus,
            covers,
            ghosts,
            skip_same,
            region,
            resave_q,
            dry_run,
            images,
            common,
        } => {
            let grid = grid_from_args(&covers, &ghosts, skip_same)?;
            let region = Rect::new(region[0], region[1], region[2], region[3]);
            let options = DatasetOptions {
                grid,
                region,
                resave_q: Quality::new(resave_q)?,
            };
            dataset(corpus.as_deref(), &options, dry_run, images, &common)
        }
        Command::Evaluate {
            manifest,
            tolerance,
            common,
        } => evaluate_cmd(&manifest, tolerance, &common),
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string(value).expect("json value serializes"));
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    io::write_file(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into())
}

#[derive(Debug, Serialize)]
struct AnalyzeSummary {
    input: String,
    sweep: SweepConfig,
    q_ssim: Option<Quality>,
    q_energy: Option<Quality>,
    /// Estimated cover quality, or the global energy minimum when no
    /// extremum was found.
    q_final: Quality,
    confidence: Confidence,
    estimation_failed: bool,
    /// Integer quality whose map was binarized.
    quality: Quality,
    detection: Confidence,
    degenerate: bool,
    mask_pixels: usize,
    mask_fraction: f64,
    contrast: f64,
    evidence_blocks: usize,
}

fn analyze(input: &Path, common: &Common) -> Result<ExitCode> {
    let sweep = common.sweep()?;
    let image = io::load_suspect(input)?;
    let result = localize::<f64>(&image, &sweep)?;
    let summary = AnalyzeSummary {
        input: input
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sweep,
        q_ssim: result.estimate.and_then(|e| e.q_ssim),
        q_energy: result.estimate.and_then(|e| e.q_energy),
        q_final: result.estimate.map_or(result.quality, |e| e.q_final),
        confidence: result.estimate.map_or(Confidence::Low, |e| e.confidence),
        estimation_failed: result.estimate.is_none(),
        quality: result.quality,
        detection: result.detection,
        degenerate: result.degenerate,
        mask_pixels: result.mask.count(),
        mask_fraction: result.mask.fraction(),
        contrast: result.contrast,
        evidence_blocks: result.evidence,
    };

    let base = stem(input);
    let mut outputs = serde_json::Map::new();
    if common.wants(Format::Png) {
        let path = common.out.join(format!("{base}_mask.png"));
        write(&path, &result.mask.to_png()?)?;
        outputs.insert("mask".into(), json!(path));
    }
    if common.wants(Format::Csv) {
        let path = common.out.join(format!("{base}_curve.csv"));
        write(&path, result.curve.to_csv().as_bytes())?;
        outputs.insert("curve".into(), json!(path));
    }
    if common.wants(Format::Json) {
        let path = common.out.join(format!("{base}_summary.json"));
        let text = serde_json::to_string_pretty(&summary)?;
        write(&path, text.as_bytes())?;
        outputs.insert("summary".into(), json!(path));
    }

    eprintln!(
        "{}: q_ssim={} q_energy={} q_final={} confidence={:?} detection={:?} mask={:.2}%",
        summary.input,
        fmt_q(summary.q_ssim),
        fmt_q(summary.q_energy),
        summary.q_final,
        summary.confidence,
        summary.detection,
        summary.mask_fraction * 100.0
    );
    print_json(&serde_json::Value::Object(outputs));
    Ok(if summary.confidence == Confidence::High {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_LOW_CONFIDENCE)
    })
}

fn fmt_q(q: Option<Quality>) -> String {
    q.map_or_else(|| "-".into(), |q| q.to_string())
}

/// Forgery spec file: a spec plus an optional source image.
#[derive(Debug, Deserialize)]
struct SpecFile {
    #[serde(flatten)]
    spec: ForgerySpec,
    /// Source image path, relative to the spec file.
    input: Option<PathBuf>,
    /// Seed of the built-in synthetic scene used when no input is given.
    synthetic: Option<u64>,
}

fn forge_cmd(
    spec_path: &Path,
    input: Option<PathBuf>,
    synthetic: Option<u64>,
    name: Option<String>,
    common: &Common,
) -> Result<ExitCode> {
    let text = std::fs::read_to_string(spec_path).with_context(|| format!("cannot read {}", spec_path.display()))?;
    let file: SpecFile =
        serde_json::from_str(&text).with_context(|| format!("malformed forgery spec {}", spec_path.display()))?;
    let image: RgbImage = match (input, synthetic, &file.input, file.synthetic) {
        (Some(path), _, _, _) => io::load_image(&path)?,
        (None, Some(seed), _, _) => synth::natural_scene(seed, synth::DESK_WIDTH, synth::DESK_HEIGHT),
        (None, None, Some(rel), _) => {
            let dir = spec_path.parent().unwrap_or(Path::new("."));
            io::load_image(&dir.join(rel))?
        }
        (None, None, None, Some(seed)) => synth::natural_scene(seed, synth::DESK_WIDTH, synth::DESK_HEIGHT),
        (None, None, None, None) => bail!("no source image: pass --input or --synthetic, or set \"input\" in the spec file"),
    };
    let forgery = forge::forge(&image, &file.spec)?;
    let base = name.unwrap_or_else(|| stem(spec_path));
    let jpeg_path = common.out.join(format!("{base}.jpg"));
    let mask_path = common.out.join(format!("{base}_mask.png"));
    write(&jpeg_path, forgery.jpeg.as_bytes())?;
    write(&mask_path, &forgery.mask.to_png()?)?;
    eprintln!(
        "{}: {} forgery, {} tampered pixels",
        base,
        file.spec.kind,
        forgery.mask.count()
    );
    print_json(&json!({ "image": jpeg_path, "mask": mask_path, "mask_pixels": forgery.mask.count() }));
    Ok(ExitCode::SUCCESS)
}

fn grid_from_args(covers: &[u32], ghosts: &[u32], skip_same: bool) -> Result<DatasetGrid> {
    let standard = DatasetGrid::standard();
    let parse = |v: &[u32], default: &[Quality]| -> Result<Vec<Quality>> {
        if v.is_empty() {
            Ok(default.to_vec())
        } else {
            v.iter().map(|&q| Ok(Quality::new(q)?)).collect()
        }
    };
    let default_grid = covers.is_empty() && ghosts.is_empty();
    Ok(DatasetGrid::new(
        parse(covers, &standard.covers)?,
        parse(ghosts, &standard.ghosts)?,
        skip_same || default_grid,
    ))
}

fn dataset(
    corpus: Option<&Path>,
    options: &DatasetOptions,
    dry_run: bool,
    images: Option<usize>,
    common: &Common,
) -> Result<ExitCode> {
    let pairs = options.grid.pairs().len();
    if dry_run {
        let n = match (images, corpus) {
            (Some(n), _) => n,
            (None, Some(dir)) => forge::corpus_files(dir)?.len(),
            (None, None) => bail!("a dry run needs a corpus directory or --images"),
        };
        let planned = options.grid.planned(n);
        eprintln!("{n} images x {pairs} quality pairs = {planned} planned composites");
        print_json(&json!({ "images": n, "pairs": pairs, "planned": planned }));
        return Ok(ExitCode::SUCCESS);
    }
    let Some(corpus) = corpus else {
        bail!("missing corpus directory");
    };
    let manifest = forge::build_dataset(corpus, &common.out, options)?;
    let path = common.out.join(forge::MANIFEST_FILE);
    for err in &manifest.errors {
        eprintln!("skipped {}: {}", err.path, err.message);
    }
    eprintln!("{} composites written to {}", manifest.entries.len(), common.out.display());
    print_json(&json!({ "manifest": path, "entries": manifest.entries.len(), "errors": manifest.errors.len() }));
    Ok(ExitCode::SUCCESS)
}

fn evaluate_cmd(manifest_path: &Path, tolerance: u32, common: &Common) -> Result<ExitCode> {
    let sweep = common.sweep()?;
    let manifest = DatasetManifest::load(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let report = evaluate(&manifest, root, &sweep, tolerance);
    let json_path = common.out.join("report.json");
    let csv_path = export_report(&report, &json_path)?;
    let o = &report.overall;
    eprintln!(
        "{} entries ({} failed): mean IoU {:.3}, median IoU {:.3}, quality within ±{} on {:.1}%, {} confident",
        o.count,
        o.failures,
        o.mean_iou,
        o.median_iou,
        report.tolerance,
        o.quality_accuracy * 100.0,
        o.high_confidence
    );
    print_json(&json!({ "report": json_path, "csv": csv_path }));
    Ok(ExitCode::SUCCESS)
}
