use ghostkit::analysis::difference_map;
use ghostkit::codec::{resave, Quality};
use ghostkit::metrics::{
    energy, estimate_cover_quality, first_local_max, first_local_min, first_prominent_min, ssim, Confidence, CurveSample, SsimParams,
    SweepCurve,
};
use ghostkit::raster::RgbImage;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(v: u32) -> Quality {
    Quality::new(v).unwrap()
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> RgbImage {
    let data = (0..w * h * 3).map(|_| rng.gen()).collect();
    RgbImage::new(w, h, data).unwrap()
}

fn luma(img: &RgbImage) -> Vec<f64> {
    img.data()
        .chunks(3)
        .map(|p| 0.257 * p[0] as f64 + 0.504 * p[1] as f64 + 0.098 * p[2] as f64 + 16.0)
        .collect()
}

fn gaussian_window(n: usize, sigma: f64) -> Vec<f64> {
    let c = (n / 2) as f64;
    let mut w = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let (dx, dy) = (x as f64 - c, y as f64 - c);
            w.push((-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp());
        }
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// Explicit l * c * s product over one window at `(ox, oy)`.
fn window_ssim(a: &[f64], b: &[f64], width: usize, ox: usize, oy: usize) -> f64 {
    let n = 11;
    let w = gaussian_window(n, 1.5);
    let at = |p: &[f64], i: usize| p[(oy + i / n) * width + ox + i % n];
    let mu_a: f64 = (0..n * n).map(|i| w[i] * at(a, i)).sum();
    let mu_b: f64 = (0..n * n).map(|i| w[i] * at(b, i)).sum();
    let var_a: f64 = (0..n * n).map(|i| w[i] * (at(a, i) - mu_a).powi(2)).sum();
    let var_b: f64 = (0..n * n).map(|i| w[i] * (at(b, i) - mu_b).powi(2)).sum();
    let cov: f64 = (0..n * n).map(|i| w[i] * (at(a, i) - mu_a) * (at(b, i) - mu_b)).sum();
    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let c3 = c2 / 2.0;
    let (sa, sb) = (var_a.sqrt(), var_b.sqrt());
    let l = (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1);
    let c = (2.0 * sa * sb + c2) / (var_a + var_b + c2);
    let s = (cov + c3) / (sa * sb + c3);
    l * c * s
}

fn brute_force_ssim(x: &RgbImage, y: &RgbImage) -> f64 {
    let (a, b) = (luma(x), luma(y));
    let (w, h) = (x.width(), x.height());
    let mut total = 0.0;
    let mut count = 0;
    for oy in 0..=h - 11 {
        for ox in 0..=w - 11 {
            total += window_ssim(&a, &b, w, ox, oy);
            count += 1;
        }
    }
    total / count as f64
}

#[test]
fn single_window_matches_explicit_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..25 {
        let a = random_image(&mut rng, 11, 11);
        let b = random_image(&mut rng, 11, 11);
        let got: f64 = ssim(&a, &b, SsimParams::default()).unwrap();
        let want = window_ssim(&luma(&a), &luma(&b), 11, 0, 0);
        assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
    }
}

#[test]
fn mean_over_valid_windows_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = random_image(&mut rng, 23, 17);
    let noisy = RgbImage::from_fn(23, 17, |x, y| {
        let p = a.pixel(x, y);
        std::array::from_fn(|c| p[c].saturating_add(((x * 7 + y * 3 + c) % 11) as u8))
    });
    let got: f64 = ssim(&a, &noisy, SsimParams::default()).unwrap();
    let want = brute_force_ssim(&a, &noisy);
    assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
}

#[test]
fn f32_tracks_f64() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_image(&mut rng, 40, 30);
    let b = resave(&a, q(40)).unwrap();
    let s64: f64 = ssim(&a, &b, SsimParams::default()).unwrap();
    let s32: f32 = ssim(&a, &b, SsimParams::default()).unwrap();
    assert!((s64 - s32 as f64).abs() < 1e-4);
}

#[test]
fn identity_symmetry_and_bounds_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..100 {
        let (w, h) = (rng.gen_range(11..40), rng.gen_range(11..40));
        let a = random_image(&mut rng, w, h);
        let b = if i % 2 == 0 {
            random_image(&mut rng, w, h)
        } else {
            resave(&a, q(rng.gen_range(5..95))).unwrap()
        };
        let ab: f64 = ssim(&a, &b, SsimParams::default()).unwrap();
        let ba: f64 = ssim(&b, &a, SsimParams::default()).unwrap();
        let aa: f64 = ssim(&a, &a, SsimParams::default()).unwrap();
        assert!((aa - 1.0).abs() <= 1e-9, "identity {aa}");
        assert!((ab - ba).abs() <= 1e-12, "symmetry {ab} vs {ba}");
        assert!((-1.0..=1.0).contains(&ab), "bounds {ab}");
    }
}

#[test]
fn too_small_or_mismatched_images_are_rejected() {
    let a = RgbImage::filled(10, 30, [1, 2, 3]);
    assert!(ssim::<f64>(&a, &a, SsimParams::default()).is_err());
    let b = RgbImage::filled(12, 12, [1, 2, 3]);
    let c = RgbImage::filled(13, 12, [1, 2, 3]);
    assert!(ssim::<f64>(&b, &c, SsimParams::default()).is_err());
}

#[test]
fn energy_is_the_sum_of_cubed_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_image(&mut rng, 16, 9);
    let b = random_image(&mut rng, 16, 9);
    let map = difference_map::<f64>(&a, &b, q(50)).unwrap();
    let ycc = |p: &[u8]| {
        let (r, g, b) = (p[0] as f64, p[1] as f64, p[2] as f64);
        [
            0.257 * r + 0.504 * g + 0.098 * b + 16.0,
            -0.148 * r - 0.291 * g + 0.439 * b + 128.0,
            0.439 * r - 0.368 * g - 0.071 * b + 128.0,
        ]
    };
    let want: f64 = a
        .data()
        .chunks(3)
        .zip(b.data().chunks(3))
        .map(|(pa, pb)| {
            let (ya, yb) = (ycc(pa), ycc(pb));
            (0..3).map(|c| (ya[c] - yb[c]).abs().powi(3)).sum::<f64>()
        })
        .sum();
    let got = energy(&map);
    assert!((got - want).abs() <= 1e-9 * want, "{got} vs {want}");
}

#[test]
fn inverted_natural_patch_has_negative_ssim() {
    let scene = ghostkit::synth::natural_scene(7, 128, 96);
    let patch = scene.crop(ghostkit::raster::Rect::new(40, 30, 32, 32)).unwrap();
    let inverted = RgbImage::from_fn(32, 32, |x, y| patch.pixel(x, y).map(|v| 255 - v));
    let got: f64 = ssim(&patch, &inverted, SsimParams::default()).unwrap();
    let want = brute_force_ssim(&patch, &inverted);
    assert!(got < 0.0, "{got}");
    assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
}

#[test]
fn energy_of_small_maps() {
    let zero = ghostkit::DifferenceMapF64::new(2, 2, [vec![0.0; 4], vec![0.0; 4], vec![0.0; 4]], q(50)).unwrap();
    assert_eq!(energy(&zero), 0.0);
    let map =
        ghostkit::DifferenceMapF64::new(2, 2, [vec![1.0, 8.0, 27.0, 0.0], vec![0.0; 4], vec![0.0; 4]], q(50)).unwrap();
    assert_eq!(energy(&map), 36.0);
}

#[test]
fn local_extremum_examples() {
    let series = |qs: &[u32], vs: &[f64]| -> Vec<(Quality, f64)> { qs.iter().zip(vs).map(|(&a, &b)| (q(a), b)).collect() };
    let five = [40, 45, 50, 55, 60];
    assert_eq!(first_local_max(&series(&five, &[1.0, 3.0, 2.0, 4.0, 1.0])).unwrap(), Some(q(45)));
    assert_eq!(first_local_max(&series(&five, &[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap(), None);
    assert_eq!(first_local_max(&series(&[40, 45, 50, 55], &[1.0, 5.0, 5.0, 2.0])).unwrap(), Some(q(45)));
    let even = [40, 42, 44, 46, 48];
    assert_eq!(first_local_min(&series(&even, &[5.0, 3.0, 4.0, 2.0, 6.0])).unwrap(), Some(q(42)));
    assert_eq!(first_local_min(&series(&even, &[5.0, 4.0, 3.0, 2.0, 1.0])).unwrap(), None);
    assert!(first_local_max(&series(&[40, 45], &[1.0, 2.0])).is_err());
}

#[test]
fn shallow_energy_ripple_is_not_a_minimum() {
    let c = curve(&[
        (30, 0.90, 1000.0),
        (32, 0.91, 998.0),
        (34, 0.92, 999.0),
        (36, 0.93, 500.0),
        (38, 0.99, 10.0),
        (40, 0.97, 400.0),
    ]);
    assert_eq!(first_local_min(&c.energy_series()).unwrap(), Some(q(32)));
    assert_eq!(first_prominent_min(&c.energy_series(), 0.0075).unwrap(), Some(q(38)));
    let e = estimate_cover_quality(&c).unwrap();
    assert_eq!(e.q_energy, Some(q(38)));
    assert_eq!(e.confidence, Confidence::High);
}

#[test]
fn monotone_curve_fails_estimation() {
    let c = curve(&[(30, 0.90, 9.0), (32, 0.91, 8.0), (34, 0.92, 7.0), (36, 0.93, 6.0)]);
    assert!(estimate_cover_quality(&c).is_err());
}

fn curve(points: &[(u32, f64, f64)]) -> SweepCurve<f64> {
    SweepCurve::new(
        points
            .iter()
            .map(|&(quality, ssim, energy)| CurveSample {
                quality: q(quality),
                ssim,
                energy,
            })
            .collect(),
    )
    .unwrap()
}

#[test]
fn synthetic_disagreeing_by_one_step_is_confident() {
    let c = curve(&[
        (66, 0.90, 9.0),
        (68, 0.95, 7.0),
        (70, 0.99, 5.0),
        (72, 0.97, 1.0),
        (74, 0.96, 3.0),
        (76, 0.98, 4.0),
    ]);
    let e = estimate_cover_quality(&c).unwrap();
    assert_eq!(e.q_ssim, Some(q(70)));
    assert_eq!(e.q_energy, Some(q(72)));
    assert_eq!(e.q_final, q(72));
    assert_eq!(e.confidence, Confidence::High);
}

#[test]
fn cover_50_composite_peaks_at_50() {
    use ghostkit::synth::{natural_scene, DESK_HEIGHT, DESK_WIDTH};
    let img = natural_scene(11, DESK_WIDTH, DESK_HEIGHT);
    let mut cover = resave(&img, q(50)).unwrap();
    let ghost = resave(&img, q(70)).unwrap().crop(ghostkit::raster::Rect::new(190, 60, 64, 64)).unwrap();
    cover.paste(&ghost, 190, 60).unwrap();
    let dubious = resave(&cover, q(100)).unwrap();
    let config = ghostkit::analysis::SweepConfig::default();
    let c = ghostkit::analysis::sweep_curve::<f64>(&dubious, &config, SsimParams::default()).unwrap();
    let e = estimate_cover_quality(&c).unwrap();
    assert_eq!(e.q_ssim, Some(q(50)));
    assert_eq!(e.q_energy, Some(q(50)));
    assert_eq!(e.confidence, Confidence::High);
}

proptest! {
    #[test]
    fn local_extrema_are_interior_and_dual(values in prop::collection::vec(0.0f64..100.0, 3..30)) {
        let series: Vec<(Quality, f64)> = values.iter().enumerate().map(|(i, &v)| (q(30 + 2 * i as u32), v)).collect();
        let negated: Vec<(Quality, f64)> = series.iter().map(|&(qq, v)| (qq, -v)).collect();
        let max = first_local_max(&series).unwrap();
        prop_assert_eq!(max, first_local_min(&negated).unwrap());
        if let Some(m) = max {
            prop_assert!(m != series[0].0 && m != series[series.len() - 1].0);
        }
    }

    #[test]
    fn zero_ripple_is_the_plain_local_minimum(values in prop::collection::vec(0u8..6, 3..30)) {
        let series: Vec<(Quality, f64)> = values.iter().enumerate().map(|(i, &v)| (q(30 + 2 * i as u32), v as f64)).collect();
        prop_assert_eq!(first_prominent_min(&series, 0.0).unwrap(), first_local_min(&series).unwrap());
    }

    #[test]
    fn ssim_is_bounded_and_symmetric(seed in any::<u64>(), w in 11usize..24, h in 11usize..24) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_image(&mut rng, w, h);
        let b = random_image(&mut rng, w, h);
        let ab: f64 = ssim(&a, &b, SsimParams::default()).unwrap();
        let ba: f64 = ssim(&b, &a, SsimParams::default()).unwrap();
        prop_assert!((-1.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() <= 1e-12);
    }
}
