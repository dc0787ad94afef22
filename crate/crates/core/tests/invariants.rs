mod oracle;

use icd_core::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn eps() -> Epsilon {
    Epsilon::default()
}

fn arb_image(max_side: usize) -> impl Strategy<Value = RgbImage> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        prop::collection::vec(prop::array::uniform3(0.0f64..=1.0), w * h)
            .prop_map(move |data| RgbImage::new(w, h, data).unwrap())
    })
}

/// Pixels drawn from a small set of values so that ties and exact zeros show up.
fn arb_tied_image() -> impl Strategy<Value = RgbImage> {
    let v = prop::sample::select(vec![0.0, 0.25, 0.5, 1.0, 1e-5]);
    (1..6usize, 1..6usize).prop_flat_map(move |(w, h)| {
        prop::collection::vec(prop::array::uniform3(v.clone()), w * h)
            .prop_map(move |data| RgbImage::new(w, h, data).unwrap())
    })
}

fn max_abs_diff(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn round_trip_all_baselines(img in arb_image(16)) {
        for baseline in Baseline::ALL {
            let dec = decompose(&img, eps(), baseline).unwrap();
            let back = reconstruct_unclipped(&dec, eps());
            prop_assert!(max_abs_diff(&back, img.pixels()) <= 1e-6, "{baseline}");
        }
    }

    #[test]
    fn max_chroma_is_feasible(img in prop_oneof![arb_image(12), arb_tied_image()]) {
        let dec = decompose(&img, eps(), Baseline::Max).unwrap();
        let floor = (eps().get() / (1.0 + eps().get())).ln();
        for c in dec.chroma().values() {
            prop_assert!(c.iter().all(|&v| v <= 0.0));
            prop_assert!(c.iter().all(|&v| v >= floor - 1e-12));
            prop_assert!(c.iter().any(|v| v.abs() <= 1e-12));
        }
        for (px, &i) in img.pixels().iter().zip(dec.intensity().values()) {
            prop_assert_eq!(i, px[0].max(px[1]).max(px[2]));
        }
        let report = check_properties(&img, &dec, eps()).unwrap();
        prop_assert!(report.all_hold());
    }

    #[test]
    fn min_chroma_is_non_negative(img in arb_image(10)) {
        let dec = decompose(&img, eps(), Baseline::Min).unwrap();
        prop_assert!(dec.chroma().values().iter().flatten().all(|&v| v >= 0.0));
    }

    #[test]
    fn constrained_channels_stay_below_envelope(
        raw in prop::collection::vec((-1.0f64..2.0, prop::array::uniform3(-8.0f64..3.0)), 1..64)
    ) {
        let n = raw.len();
        let intensity = IntensityMap::new(n, 1, raw.iter().map(|r| r.0).collect()).unwrap();
        let chroma = ChromaticityMap::new(n, 1, raw.iter().map(|r| r.1).collect()).unwrap();
        let dec = DecoupledImage::new(intensity, chroma, Baseline::Max).unwrap();
        let constrained = constrain(&dec, eps());
        prop_assert!(constrained.chroma().is_non_positive());
        prop_assert!(constrained.intensity().values().iter().all(|&v| v >= eps().get()));
        let out = reconstruct_unclipped(&constrained, eps());
        for (px, &env) in out.iter().zip(constrained.intensity().values()) {
            for &v in px {
                prop_assert!(v <= env + 1e-9);
            }
        }
    }

    #[test]
    fn gate_range_and_monotone(alpha in 0.001f64..=1.0, gamma in 0.5f64..=4.0) {
        let gate = GateParams::new(alpha, gamma).unwrap();
        prop_assert!((gate.value(0.0) - alpha).abs() <= 1e-12);
        prop_assert!((gate.value(1.0) - 1.0).abs() <= 1e-12);
        let mut prev = gate.value(0.0);
        for k in 0..=1000 {
            let g = gate.value(k as f64 * 1e-3);
            prop_assert!(g >= alpha - 1e-15 && g <= 1.0 + 1e-15);
            prop_assert!(g >= prev);
            prev = g;
        }
    }

    #[test]
    fn gate_preserves_feasibility(img in prop_oneof![arb_image(10), arb_tied_image()], alpha in 0.01f64..=1.0, gamma in 0.5f64..=4.0) {
        let dec = decompose(&img, eps(), Baseline::Max).unwrap();
        let out = chroma_gate(dec.intensity(), dec.chroma(), &GateParams::new(alpha, gamma).unwrap()).unwrap();
        prop_assert!(out.is_non_positive());
        prop_assert!(out.has_zero_anchor(1e-12));
    }

    #[test]
    fn scaling_never_moves_the_envelope(img in prop_oneof![arb_image(10), arb_tied_image()], s in 0.001f64..=1.0) {
        let report = check_illumination_invariance(&img, s, eps()).unwrap();
        prop_assert_eq!(report.anchor_changes, 0);
        prop_assert_eq!(report.violations, 0);
    }

    #[test]
    fn mapping_outputs_are_feasible(
        img in arb_image(8),
        variant in prop::sample::select(MappingVariant::ALL.to_vec()),
        p in 0.05f64..3.0,
        d in -1.0f64..1.0,
    ) {
        let params = MappingParams {
            delta_i: Some(d.into()),
            delta_c: Some([d, -d, 0.5 * d].into()),
            l: Some(p.into()),
            u: Some(p.into()),
            a: Some((p - 1.5).into()),
            gamma_c: Some(p.into()),
            w: Some((p / 3.0).into()),
            alpha_c: Some((p - 1.0).into()),
            beta_c: Some(d.into()),
        };
        let spec = MappingSpec::new(variant, params).unwrap();
        let dec = decompose(&img, eps(), Baseline::Max).unwrap();
        let out = map_decoupled(&dec, &spec, None, eps()).unwrap();
        prop_assert!(out.intensity().values().iter().all(|&v| v >= eps().get()));
        prop_assert!(out.chroma().is_non_positive());
        let a = enhance(&img, &spec, Some(&GateParams::default()), eps()).unwrap();
        let b = enhance(&img, &spec, Some(&GateParams::default()), eps()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ssim_self_similarity(img in arb_image(20).prop_filter("window", |i| i.width() >= 11 && i.height() >= 11)) {
        let s = ssim(&img, &img).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn metric_symmetry_and_ranges(a in arb_image(14), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = RgbImage::from_fn(a.width(), a.height(), |_, _| [rng.random(), rng.random(), rng.random()]).unwrap();
        prop_assert_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        if a.width() >= 11 && a.height() >= 11 {
            let term = 1.0 - ssim(&a, &b).unwrap();
            prop_assert!((0.0..=2.0).contains(&term));
            let l = total_loss(&a, &b, eps(), &LossWeights::default()).unwrap();
            prop_assert!(l.l_total > 0.0);
        }
    }
}

#[test]
fn fractional_maps_unit_interval_below_one() {
    for u in [0.1, 0.5, 1.0, 2.0, 10.0, 1e3] {
        let spec = MappingSpec::fractional(u).unwrap();
        let grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
        let raw = IntensityMap::new(grid.len(), 1, grid.clone()).unwrap();
        let out = apply_intensity_mapping(&spec, &raw, eps()).unwrap();
        for (&i, &o) in grid.iter().zip(out.values()) {
            let f = u * i / (u * i + (1.0 - i) + eps().get());
            assert!((0.0..1.0).contains(&f), "u={u} I={i}");
            assert_eq!(o, f.max(eps().get()));
        }
    }
}

#[test]
fn quadratic_maps_unit_interval_into_itself() {
    for a in [0.0, 0.25, 0.5, 0.75, 1.0] {
        for k in 0..=1000 {
            let i = k as f64 / 1000.0;
            let q = i + a * i * (1.0 - i);
            assert!((0.0..=1.0).contains(&q), "a={a} I={i}");
        }
    }
}

#[test]
fn total_loss_matches_brute_force() {
    let reference = RgbImage::from_fn(16, 16, |x, y| {
        [
            0.05 + 0.9 * x as f64 / 15.0,
            0.1 + 0.8 * y as f64 / 15.0,
            0.5 + 0.4 * (((x * 7 + y * 3) % 11) as f64 / 10.0 - 0.5),
        ]
    })
    .unwrap();
    let out = reference.scaled(0.5).unwrap();
    let w = LossWeights::default();
    let lib = total_loss(&out, &reference, eps(), &w).unwrap();
    let brute = oracle::brute_total_loss(out.pixels(), reference.pixels(), 16, 16, 1e-4, 1500.0, 2500.0);
    assert!((lib.l_rgb - brute.l_rgb).abs() <= 1e-9);
    assert!((lib.l_i - brute.l_i).abs() <= 1e-9);
    assert!((lib.l_c - brute.l_c).abs() <= 1e-9);
    assert!((lib.l_total - brute.l_total).abs() <= 1e-9, "{} vs {}", lib.l_total, brute.l_total);
}

#[test]
fn psnr_decreases_with_noise() {
    let reference = RgbImage::from_fn(24, 24, |x, y| [0.2 + 0.02 * x as f64, 0.3 + 0.01 * y as f64, 0.5]).unwrap();
    let mut prev = f64::INFINITY;
    for (k, sigma) in [0.01, 0.03, 0.09].into_iter().enumerate() {
        let scene = ScalingScene::uniform(reference.clone(), 1.0).unwrap();
        let noisy = synthesize_scene(&scene, &NoiseModel::gaussian(sigma).unwrap(), 100 + k as u64).unwrap();
        let p = psnr(&noisy, &reference).unwrap();
        assert!(p < prev, "sigma {sigma}: {p} >= {prev}");
        prev = p;
    }
}

#[test]
fn scaled_synthesis_stays_within_illumination_bound() {
    let reflectance = RgbImage::from_fn(8, 8, |x, y| [0.05 + 0.1 * x as f64, 0.05 + 0.12 * y as f64, 0.3]).unwrap();
    let zero = NoiseModel::gaussian(0.0).unwrap();
    let dim = synthesize_scene(&ScalingScene::uniform(reflectance.clone(), 0.25).unwrap(), &zero, 0).unwrap();
    let a = decompose(&reflectance, eps(), Baseline::Max).unwrap();
    let b = decompose(&dim, eps(), Baseline::Max).unwrap();
    for ((px, ca), cb) in reflectance.pixels().iter().zip(a.chroma().values()).zip(b.chroma().values()) {
        let m = px[0].min(px[1]).min(px[2]);
        let bound = properties::illumination_bound(m, 0.25, eps().get());
        for c in 0..3 {
            assert!((ca[c] - cb[c]).abs() <= bound + 1e-12);
        }
    }
}

#[test]
fn noise_sample_is_unbiased_and_scaled() {
    let m = NoiseModel::per_channel([0.01, 0.02, 0.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = m.sample(20_000, &mut rng);
    for (c, sigma) in [0.01, 0.02, 0.0].into_iter().enumerate() {
        let mean: f64 = s.iter().map(|p| p[c]).sum::<f64>() / s.len() as f64;
        let var: f64 = s.iter().map(|p| (p[c] - mean).powi(2)).sum::<f64>() / s.len() as f64;
        assert!(mean.abs() < 4.0 * sigma / (s.len() as f64).sqrt() + 1e-15);
        assert!((var.sqrt() - sigma).abs() <= 0.05 * sigma + 1e-15);
    }
}

#[test]
fn linearization_improves_as_sigma_halves() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let clean = RgbImage::from_fn(6, 6, |_, _| {
        [rng.random_range(0.2..=1.0), rng.random_range(0.2..=1.0), rng.random_range(0.2..=1.0)]
    })
    .unwrap();
    let errs: Vec<f64> = [0.04, 0.02, 0.01]
        .into_iter()
        .map(|s| {
            monte_carlo_chroma_agreement(&clean, &NoiseModel::gaussian(s).unwrap(), 2000, eps(), 7)
                .unwrap()
                .relative_error
        })
        .collect();
    assert!(errs[1] <= errs[0] * 1.05 && errs[2] <= errs[1] * 1.05, "{errs:?}");
    assert!(errs[2] < 0.1);
}
