use std::collections::HashSet;
use std::path::Path;

use ghostkit::analysis::SweepConfig;
use ghostkit::codec::Quality;
use ghostkit::eval::{
    evaluate, export_report, is_tiny, load_report, score_mask, score_mask_dilated, Aggregate, EvalReport, EvalRow,
    CSV_HEADER,
};
use ghostkit::forge::{self, build_dataset, DatasetEntry, DatasetGrid, DatasetManifest, DatasetOptions, ForgerySpec, Point};
use ghostkit::metrics::Confidence;
use ghostkit::raster::{Mask, Rect};
use ghostkit::synth::{desk_corpus, natural_scene, DESK_HEIGHT, DESK_WIDTH};
use proptest::prelude::*;

fn q(v: u32) -> Quality {
    Quality::new(v).unwrap()
}

fn pixel_set(mask: &Mask) -> HashSet<(usize, usize)> {
    (0..mask.height())
        .flat_map(|y| (0..mask.width()).map(move |x| (x, y)))
        .filter(|&(x, y)| mask.get(x, y))
        .collect()
}

fn mask_strategy() -> impl Strategy<Value = Mask> {
    (prop::collection::vec(any::<bool>(), 256), 0.0f64..1.0).prop_map(|(bits, keep)| {
        let threshold = (keep * 256.0) as usize;
        let bits = bits.iter().enumerate().map(|(i, &b)| b && (i * 37) % 256 < threshold.max(1)).collect();
        Mask::from_bits(16, 16, bits).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn score_matches_pixel_set_oracle(pred in mask_strategy(), truth in mask_strategy()) {
        let s = score_mask(&pred, &truth).unwrap();
        let (p, t) = (pixel_set(&pred), pixel_set(&truth));
        let inter = p.intersection(&t).count() as f64;
        let union = p.union(&t).count() as f64;
        let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
        let (precision, recall) = (div(inter, p.len() as f64), div(inter, t.len() as f64));
        let f1 = div(2.0 * precision * recall, precision + recall);
        prop_assert_eq!(s.true_pixels, t.len());
        prop_assert_eq!(s.pred_pixels, p.len());
        prop_assert!((s.iou - div(inter, union)).abs() < 1e-12);
        prop_assert!((s.precision - precision).abs() < 1e-12);
        prop_assert!((s.recall - recall).abs() < 1e-12);
        prop_assert!((s.f1 - f1).abs() < 1e-12);
        prop_assert!(s.iou <= s.f1 + 1e-12);
        for v in [s.iou, s.precision, s.recall, s.f1] {
            prop_assert!(v.is_finite() && (0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn score_examples() {
    let truth = Mask::from_rect(128, 128, Rect::new(32, 32, 64, 64));
    let same = score_mask(&truth, &truth).unwrap();
    assert_eq!((same.iou, same.precision, same.recall, same.f1), (1.0, 1.0, 1.0, 1.0));
    let disjoint = score_mask(&Mask::from_rect(128, 128, Rect::new(0, 0, 16, 16)), &truth).unwrap();
    assert_eq!((disjoint.iou, disjoint.precision, disjoint.recall, disjoint.f1), (0.0, 0.0, 0.0, 0.0));
    let half = score_mask(&Mask::from_rect(128, 128, Rect::new(32, 32, 32, 64)), &truth).unwrap();
    assert_eq!((half.iou, half.precision, half.recall), (0.5, 1.0, 0.5));
    assert!((half.f1 - 2.0 / 3.0).abs() < 1e-12);
    assert!(score_mask(&Mask::new(10, 10), &Mask::new(10, 11)).is_err());
}

#[test]
fn tiny_truths_are_scored_against_a_dilated_rectangle() {
    let truth = Mask::from_rect(64, 64, Rect::new(20, 20, 10, 10));
    assert!(is_tiny(&truth));
    assert!(!is_tiny(&Mask::from_rect(64, 64, Rect::new(0, 0, 30, 30))));
    let pred = Mask::from_rect(64, 64, Rect::new(16, 16, 18, 18));
    let raw = score_mask(&pred, &truth).unwrap();
    let dilated = score_mask_dilated(&pred, &truth).unwrap();
    assert_eq!(dilated.true_pixels, 18 * 18);
    assert!(dilated.iou > raw.iou);
    assert_eq!(dilated.recall, 1.0);
}

/// Two desk images over covers {60, 75} and ghosts {40, 75, 95}, plus one
/// text insertion added by hand and one entry whose file is missing.
fn small_dataset(root: &Path) -> DatasetManifest {
    let corpus = root.join("corpus");
    std::fs::create_dir_all(&corpus).unwrap();
    for (i, img) in desk_corpus(2).iter().enumerate() {
        std::fs::write(corpus.join(format!("img{i}.png")), ghostkit::io::encode_png_rgb(img).unwrap()).unwrap();
    }
    let options = DatasetOptions {
        grid: DatasetGrid::new(vec![q(60), q(75)], vec![q(40), q(75), q(95)], false),
        ..DatasetOptions::default()
    };
    let data = root.join("data");
    let mut manifest = build_dataset(&corpus, &data, &options).unwrap();

    let spec = ForgerySpec::text_insert(q(80), "FAKE", 21, Point { x: 100, y: 200 });
    let forged = forge::forge(&natural_scene(77, DESK_WIDTH, DESK_HEIGHT), &spec).unwrap();
    std::fs::write(data.join("text.jpg"), forged.jpeg.as_bytes()).unwrap();
    std::fs::write(data.join("text_mask.png"), forged.mask.to_png().unwrap()).unwrap();
    manifest.entries.push(DatasetEntry {
        path: "text.jpg".into(),
        mask_path: "text_mask.png".into(),
        source: "synthetic".into(),
        spec,
    });
    let mut missing = manifest.entries[0].clone();
    missing.path = "absent.jpg".into();
    manifest.entries.push(missing);
    manifest
}

fn strip_timing(rows: &[EvalRow]) -> Vec<EvalRow> {
    rows.iter().cloned().map(|r| EvalRow { ms: 0, ..r }).collect()
}

#[test]
fn evaluate_scores_rows_exports_and_is_order_independent() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = small_dataset(tmp.path());
    let root = tmp.path().join("data");
    let sweep = SweepConfig::default();
    let report = evaluate(&manifest, &root, &sweep, 1);
    assert_eq!(report.schema, 1);
    assert_eq!(report.tolerance, 2);
    assert_eq!(report.rows.len(), manifest.entries.len());
    assert!(report.rows.windows(2).all(|w| w[0].path <= w[1].path));

    let missing = report.rows.iter().find(|r| r.path == "absent.jpg").unwrap();
    assert!(missing.error.is_some());
    assert_eq!(report.overall.failures, 1);
    for row in report.rows.iter().filter(|r| r.q_ghost == Some(r.q_cover)) {
        assert_eq!(row.confidence, Confidence::Low, "{}", row.path);
        assert_eq!(row.scenario, "same_quality");
    }
    assert!(report.scenarios.contains_key("text_insert"));
    assert!(report.scenarios.contains_key("ghost_lower"));
    assert!(report.scenarios.contains_key("ghost_higher"));

    let mean: f64 = report.rows.iter().map(|r| r.score.iou).sum::<f64>() / report.rows.len() as f64;
    assert!((report.overall.mean_iou - mean).abs() <= 1e-12);
    assert_eq!(report.overall, Aggregate::of(&report.rows, report.tolerance));
    for (name, agg) in &report.scenarios {
        assert_eq!(*agg, Aggregate::of(report.rows.iter().filter(|r| &r.scenario == name), report.tolerance));
    }
    for row in &report.rows {
        let s = row.score;
        for v in [s.iou, s.precision, s.recall, s.f1] {
            assert!(v.is_finite() && (0.0..=1.0).contains(&v));
        }
    }
    for v in [report.overall.mean_iou, report.overall.median_iou, report.overall.quality_accuracy] {
        assert!(v.is_finite() && (0.0..=1.0).contains(&v));
    }

    let json_path = tmp.path().join("out/report.json");
    let csv_path = export_report(&report, &json_path).unwrap();
    assert_eq!(load_report(&json_path).unwrap(), report);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), manifest.entries.len());

    let mut reversed = manifest.clone();
    reversed.entries.reverse();
    let again = evaluate(&reversed, &root, &sweep, 1);
    assert_eq!(again.overall, report.overall);
    assert_eq!(again.scenarios, report.scenarios);
    assert_eq!(strip_timing(&again.rows), strip_timing(&report.rows));
}

#[test]
fn empty_manifest_gives_an_empty_report() {
    let manifest = DatasetManifest {
        schema: 1,
        corpus_id: "none".into(),
        quality_grid: vec![],
        grid: DatasetGrid::new(vec![], vec![], false),
        entries: vec![],
        errors: vec![],
    };
    let report = evaluate(&manifest, Path::new("."), &SweepConfig::default(), 1);
    assert!(report.rows.is_empty());
    assert!(report.scenarios.is_empty());
    let o = &report.overall;
    assert_eq!((o.count, o.failures, o.high_confidence), (0, 0, 0));
    assert_eq!((o.mean_iou, o.median_iou, o.quality_accuracy), (0.0, 0.0, 0.0));
    assert_eq!(report, EvalReport::from_rows(vec![], SweepConfig::default(), 2));
}

#[test]
fn export_errors_name_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let report = EvalReport::from_rows(vec![], SweepConfig::default(), 2);
    let err = export_report(&report, &blocker.join("report.json")).unwrap_err();
    assert!(err.chain().contains("file"), "{}", err.chain());
}
