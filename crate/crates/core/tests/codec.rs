use ghostkit::codec::{self, quality_to_quant_tables, read_quant_tables, CodecError, Quality};
use ghostkit::raster::RgbImage;
use ghostkit::synth::natural_scene;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn fixture(name: &str) -> Vec<u8> {
    std::fs::read(format!("{FIXTURES}/{name}")).unwrap()
}

fn q(v: u32) -> Quality {
    Quality::new(v).unwrap()
}

fn psnr(a: &RgbImage, b: &RgbImage) -> f64 {
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (f64::from(x) - f64::from(y)).powi(2))
        .sum::<f64>()
        / a.data().len() as f64;
    10.0 * (255.0f64 * 255.0 / mse).log10()
}

#[test]
fn tables_match_reference_encoder_dqt() {
    for quality in [25, 50, 75, 100] {
        let tables = read_quant_tables(&fixture(&format!("ref_q{quality}.jpg"))).unwrap();
        let ours = quality_to_quant_tables(q(quality));
        assert_eq!(tables.len(), 2, "q={quality}");
        assert_eq!(tables[0], (0, ours.luma), "luma q={quality}");
        assert_eq!(tables[1], (1, ours.chroma), "chroma q={quality}");
    }
}

#[test]
fn emitted_dqt_matches_mapping() {
    let img = natural_scene(0, 24, 16);
    for quality in [1, 10, 25, 49, 50, 51, 75, 90, 100] {
        let bytes = codec::encode(&img, q(quality)).unwrap();
        let tables = read_quant_tables(bytes.as_bytes()).unwrap();
        let ours = quality_to_quant_tables(q(quality));
        assert_eq!(tables, vec![(0, ours.luma), (1, ours.chroma)]);
    }
}

#[test]
fn decodes_reference_444_like_libjpeg() {
    let img = codec::decode(&fixture("ref_444_q90.jpg")).unwrap();
    assert_eq!(img.dimensions(), (40, 24));
    let reference = fixture("ref_444_q90.rgb");
    let max = img
        .data()
        .iter()
        .zip(&reference)
        .map(|(&a, &b)| (i16::from(a) - i16::from(b)).abs())
        .max()
        .unwrap();
    assert!(max <= 2, "max deviation from libjpeg {max}");
}

#[test]
fn decodes_reference_420() {
    let img = codec::decode(&fixture("ref_420_q80.jpg")).unwrap();
    assert_eq!(img.dimensions(), (37, 21));
    let reference = fixture("ref_420_q80.rgb");
    // libjpeg upsamples chroma with a triangle filter and we replicate, so
    // compare luma, which does not depend on the chroma upsampler.
    let luma = |p: &[u8]| 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]);
    let clipped = |p: &[u8]| p.iter().any(|&v| v == 0 || v == 255);
    let mut worst = 0f64;
    for (a, b) in img.data().chunks(3).zip(reference.chunks(3)) {
        if !clipped(a) && !clipped(b) {
            worst = worst.max((luma(a) - luma(b)).abs());
        }
    }
    assert!(worst <= 2.5, "max luma deviation {worst}");
}

#[test]
fn decodes_grayscale_as_replicated_rgb() {
    let img = codec::decode(&fixture("ref_gray_q70.jpg")).unwrap();
    assert_eq!(img.dimensions(), (24, 16));
    assert!(img.data().chunks(3).all(|p| p[0] == p[1] && p[1] == p[2]));
}

#[test]
fn rejects_progressive() {
    let err = codec::decode(&fixture("ref_progressive.jpg")).unwrap_err();
    assert!(matches!(err, CodecError::Unsupported { .. }), "{err}");
    assert!(err.offset().is_some());
}

#[test]
fn truncated_stream_is_a_parse_error() {
    let bytes = codec::encode(&natural_scene(2, 64, 64), q(80)).unwrap().into_vec();
    for cut in [bytes.len() - 2, bytes.len() - 1, bytes.len() / 2, 300, 20, 3] {
        let err = codec::decode(&bytes[..cut]).unwrap_err();
        assert!(matches!(err, CodecError::Parse { .. }), "cut {cut}: {err}");
    }
}

#[test]
fn text_is_a_parse_error_at_offset_zero() {
    let err = codec::decode(b"this is not a jpeg file\n").unwrap_err();
    assert_eq!(err.offset(), Some(0));
    assert!(err.to_string().contains("byte 0"));
}

#[test]
fn independent_decoder_reads_our_streams() {
    let img = natural_scene(5, 61, 45);
    for quality in [30, 75, 100] {
        let bytes = codec::encode(&img, q(quality)).unwrap();
        let mut dec = jpeg_decoder::Decoder::new(bytes.as_bytes());
        let pixels = dec.decode().unwrap();
        let info = dec.info().unwrap();
        assert_eq!((info.width, info.height), (61, 45));
        let ours = codec::decode(bytes.as_bytes()).unwrap();
        let max = ours
            .data()
            .iter()
            .zip(&pixels)
            .map(|(&a, &b)| (i16::from(a) - i16::from(b)).abs())
            .max()
            .unwrap();
        assert!(max <= 3, "q={quality} max deviation {max}");
    }
}

#[test]
fn resave_equals_decode_of_encode() {
    for (seed, w, h) in [(1, 64, 48), (2, 13, 9), (3, 100, 37)] {
        let img = natural_scene(seed, w, h);
        let resaver = codec::Resaver::new(&img).unwrap();
        for quality in [5, 40, 70, 95, 100] {
            let via_bytes = codec::decode(codec::encode(&img, q(quality)).unwrap().as_bytes()).unwrap();
            assert_eq!(codec::resave(&img, q(quality)).unwrap(), via_bytes);
            assert_eq!(resaver.resave(q(quality)), via_bytes);
        }
    }
}

#[test]
fn encoder_is_deterministic() {
    let img = natural_scene(9, 96, 64);
    assert_eq!(codec::encode(&img, q(63)).unwrap(), codec::encode(&img, q(63)).unwrap());
}

#[test]
fn uniform_gray_survives() {
    let img = RgbImage::filled(32, 24, [128, 128, 128]);
    let back = codec::decode(codec::encode(&img, q(90)).unwrap().as_bytes()).unwrap();
    assert!(img.data().iter().zip(back.data()).all(|(&a, &b)| (i16::from(a) - i16::from(b)).abs() <= 1));
}

#[test]
fn black_stays_black() {
    let img = RgbImage::filled(24, 16, [0, 0, 0]);
    for quality in [1, 30, 60, 100] {
        let back = codec::resave(&img, q(quality)).unwrap();
        assert!(back.data().iter().all(|&v| v <= 1), "q={quality}");
    }
}

#[test]
fn preserves_corpus_dimensions() {
    for (w, h) in [(512, 384), (384, 512)] {
        let img = natural_scene(11, w, h);
        for quality in (40..=100).step_by(5) {
            let bytes = codec::encode(&img, q(quality)).unwrap();
            assert_eq!(codec::decode(bytes.as_bytes()).unwrap().dimensions(), (w, h));
        }
    }
}

#[test]
fn quality_100_is_near_lossless() {
    for seed in 0..4 {
        let img = natural_scene(seed, 512, 384);
        let back = codec::decode(codec::encode(&img, q(100)).unwrap().as_bytes()).unwrap();
        let p = psnr(&img, &back);
        assert!(p >= 45.0, "seed {seed}: {p:.2} dB");
    }
}

#[test]
fn resave_is_nearly_idempotent() {
    // mean |resave(J, q') - J| over J = resave(I, q) is smallest at q' = q
    let mad = |a: &RgbImage, b: &RgbImage| {
        a.data().iter().zip(b.data()).map(|(&x, &y)| (f64::from(x) - f64::from(y)).abs()).sum::<f64>()
            / a.data().len() as f64
    };
    let mut good = 0;
    let mut total = 0;
    for seed in 0..20 {
        let img = natural_scene(seed, 128, 96);
        for quality in [50, 70, 90] {
            let j = codec::resave(&img, q(quality)).unwrap();
            let same = mad(&codec::resave(&j, q(quality)).unwrap(), &j);
            let others = [quality - 20, quality - 10, (quality + 10).min(100)]
                .into_iter()
                .filter(|&o| o.abs_diff(quality) >= 10)
                .all(|o| mad(&codec::resave(&j, q(o)).unwrap(), &j) > same);
            total += 1;
            good += usize::from(others);
        }
    }
    assert!(good * 10 >= total * 9, "{good}/{total}");
}

#[test]
fn honours_restart_intervals() {
    let img = codec::decode(&fixture("ref_restart_q85.jpg")).unwrap();
    assert_eq!(img.dimensions(), (48, 32));
    let reference = fixture("ref_restart_q85.rgb");
    let max = img
        .data()
        .iter()
        .zip(&reference)
        .map(|(&a, &b)| (i16::from(a) - i16::from(b)).abs())
        .max()
        .unwrap();
    assert!(max <= 2, "max deviation from libjpeg {max}");
}
