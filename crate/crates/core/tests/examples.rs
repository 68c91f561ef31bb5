mod common;

use approx::assert_abs_diff_eq;
use common::{gaussian_blob, random_model, readout_grad_error, rng};
use fixlab::clustering::{preservation_sweep, Method};
use fixlab::fixation::{default_sigma, normalize_to_distribution, rasterize_sparse, Weighting};
use fixlab::losses::{LossKind, PoolingSpec};
use fixlab::metrics::{auc_judd, sauc, score_pair, write_reports_csv, MetricConfig};
use fixlab::trainer::{
    backward, extract_features, forward, generate_scene, synthetic_fixations, Example,
    FeatureStack, ReadoutModel,
};
use fixlab::{FixationPixelMap, GrayImage};
use rand_distr::{Distribution, Normal};

fn center_biased(seed: u64, w: usize, h: usize, n: usize, spread: f64) -> FixationPixelMap {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, spread).unwrap();
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let points = (0..n)
        .map(|_| {
            let x = (cx + noise.sample(&mut r))
                .round()
                .clamp(0.0, (w - 1) as f64);
            let y = (cy + noise.sample(&mut r))
                .round()
                .clamp(0.0, (h - 1) as f64);
            (x as usize, y as usize)
        })
        .collect();
    FixationPixelMap::new(w, h, points).unwrap()
}

#[test]
fn shuffled_auc_discounts_center_bias() {
    let s = gaussian_blob(64, 64, 32.0, 32.0, 10.0);
    for seed in 0..5 {
        let fix = center_biased(seed, 64, 64, 60, 8.0);
        let other = center_biased(100 + seed, 64, 64, 300, 8.0);
        let judd = auc_judd(&s, &fix).unwrap();
        let shuffled = sauc(&s, &fix, &other, 100, seed).unwrap();
        assert!(judd > 0.8, "judd {judd}");
        assert!(shuffled < judd, "sauc {shuffled} vs judd {judd}");
        assert!((shuffled - 0.5).abs() < 0.1, "sauc {shuffled}");
    }
}

#[test]
fn shuffled_auc_with_off_center_pool_separates() {
    let fix = FixationPixelMap::new(32, 32, vec![(15, 15), (16, 16), (14, 17)]).unwrap();
    let s = fix.to_image();
    let corners: Vec<_> = (0..4)
        .flat_map(|i| [(i, i), (31 - i, i), (i, 31 - i)])
        .collect();
    let other = FixationPixelMap::new(32, 32, corners).unwrap();
    let v = sauc(&s, &fix, &other, 50, 1).unwrap();
    assert!((v - 1.0).abs() < 0.01, "{v}");
}

#[test]
fn shuffled_auc_constant_map_is_chance() {
    let s = GrayImage::filled(32, 32, 0.3).unwrap();
    let fix = center_biased(1, 32, 32, 40, 5.0);
    let other = center_biased(2, 32, 32, 200, 5.0);
    assert!((sauc(&s, &fix, &other, 100, 4).unwrap() - 0.5).abs() < 0.02);
}

#[test]
fn more_clusters_preserve_synthetic_maps_better() {
    for seed in 0..6u64 {
        let scene = generate_scene(seed, 2 + (seed as usize % 3), 256, 256).unwrap();
        let map = synthetic_fixations(&scene, 0.4, 7.0, seed).unwrap();
        let sigma = default_sigma(256);
        for method in Method::ALL {
            let scores = preservation_sweep(&map, method, &[2, 24], sigma, seed).unwrap();
            assert!(
                scores[1].sim >= scores[0].sim,
                "{method} seed {seed}: sim(24) {} < sim(2) {}",
                scores[1].sim,
                scores[0].sim
            );
        }
    }
}

#[test]
fn batch_reports_keep_input_order() {
    let blob = gaussian_blob(16, 16, 8.0, 8.0, 3.0);
    let fix = FixationPixelMap::new(16, 16, vec![(8, 8), (7, 8)]).unwrap();
    let config = MetricConfig::default();
    let ids = ["zeta", "alpha", "mid"];
    let rows: Vec<_> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let s = blob.scaled(1.0 + i as f64).unwrap();
            (
                id.to_string(),
                score_pair(&s, &blob, &fix, None, &config.for_pair(i as u64)).unwrap(),
            )
        })
        .collect();
    let mut out = Vec::new();
    write_reports_csv(&mut out, &rows, false).unwrap();
    let text = String::from_utf8(out).unwrap();
    let first: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(first, ids);
}

#[test]
fn self_comparison_report() {
    let blob = gaussian_blob(20, 20, 9.0, 11.0, 3.0);
    let top = vec![(9, 11), (8, 11), (10, 11), (9, 10), (9, 12)];
    let fix = FixationPixelMap::new(20, 20, top).unwrap();
    let r = score_pair(&blob, &blob, &fix, None, &MetricConfig::default()).unwrap();
    assert_abs_diff_eq!(r.cc.unwrap(), 1.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.sim.unwrap(), 1.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.kld.unwrap(), 0.0, epsilon = 1e-8);
    assert_eq!(r.auc_judd.unwrap(), 1.0);
    assert!(r.sauc.is_none());
}

/// 32x32 stimulus with one off-center bright bump, so the 2x2 output grid is
/// not symmetric.
fn small_example(channels: usize) -> (FeatureStack, fixlab::ProbabilityMap) {
    let img = GrayImage::from_fn(32, 32, |x, y| {
        let d2 = (x as f64 - 21.0).powi(2) + (y as f64 - 9.0).powi(2);
        12.0 + (x * 3 + y * 5) as f64 % 7.0 + 200.0 * (-d2 / 50.0).exp()
    })
    .unwrap();
    let feats = extract_features(&img, channels);
    let label = fixlab::ProbabilityMap::new(2, 2, vec![0.1, 0.6, 0.2, 0.1]).unwrap();
    (feats, label)
}

#[test]
fn readout_gradient_on_small_scene() {
    let (feats, label) = small_example(8);
    assert_eq!((feats.width, feats.height), (2, 2));
    let spec = PoolingSpec::new(3).unwrap();
    for seed in 0..5 {
        let model = random_model(seed, 8);
        for kind in [LossKind::Kld, LossKind::PoolingKld] {
            let err = readout_grad_error(&model, &feats, &label, kind, spec, 1e-6);
            assert!(err < 1e-4, "{kind} seed {seed}: {err}");
        }
    }
}

#[test]
fn gradient_vanishes_at_a_minimum() {
    let (feats, _) = small_example(4);
    let model = random_model(3, 4);
    let eps = fixlab::fixation::DEFAULT_EPS;
    let label = normalize_to_distribution(&forward(&model, &feats).unwrap(), eps).unwrap();
    let spec = PoolingSpec::new(3).unwrap();
    let (loss, grads) = backward(&model, &feats, &label, LossKind::Kld, spec, eps).unwrap();
    assert!(loss.abs() < 1e-12);
    assert!(grads.iter().all(|g| g.abs() < 1e-9), "{grads:?}");

    // Central difference along a fixed direction in parameter space, with the
    // weight components shrunk to match feature magnitudes in the hundreds.
    let dir = [3e-4, -2e-4, 5e-4, 1e-4, -0.4];
    let step = |t: f64| {
        let p: Vec<f64> = model
            .params()
            .iter()
            .zip(dir)
            .map(|(p, d)| p + t * d)
            .collect();
        backward(
            &ReadoutModel::from_params(&p),
            &feats,
            &label,
            LossKind::Kld,
            spec,
            eps,
        )
        .unwrap()
        .0
    };
    let h = 1e-5;
    let slope = (step(h) - step(-h)) / (2.0 * h);
    assert!(slope.abs() < 1e-8, "{slope}");
}

#[test]
fn zero_features_give_zero_weight_gradient() {
    let (feats, label) = small_example(5);
    let zero = feats.zeroed();
    let spec = PoolingSpec::new(3).unwrap();
    let eps = fixlab::fixation::DEFAULT_EPS;
    let model = random_model(9, 5);
    for kind in [LossKind::Kld, LossKind::PoolingKld] {
        let (_, grads) = backward(&model, &zero, &label, kind, spec, eps).unwrap();
        assert!(grads[..5].iter().all(|g| *g == 0.0));
        let at = |b: f64| {
            let m = ReadoutModel {
                bias: b,
                ..model.clone()
            };
            backward(&m, &zero, &label, kind, spec, eps).unwrap().0
        };
        let h = 1e-5;
        let numeric = (at(model.bias + h) - at(model.bias - h)) / (2.0 * h);
        assert_abs_diff_eq!(grads[5], numeric, epsilon = 1e-8);
    }
}

#[test]
fn scene_labels_are_one_hot_per_object() {
    let scene = generate_scene(4, 3, 256, 256).unwrap();
    let ex = Example::from_scene(scene.clone(), 4).unwrap();
    let direct =
        rasterize_sparse(&scene.true_centers, 16, 16, Weighting::CountProportional).unwrap();
    assert_eq!(ex.label, direct);
    assert_eq!(ex.label.data().iter().filter(|v| **v > 0.0).count(), 3);
}
