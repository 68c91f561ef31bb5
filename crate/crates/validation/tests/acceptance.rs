//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any of them fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use common::{
    brute_force_auc_judd, distinct_instance, naive_ward, random_model, random_points,
    readout_grad_error, rng,
};
use fixlab::clustering::ward_cluster;
use fixlab::fixation::{gaussian_blur, DEFAULT_EPS, REFERENCE_SIGMA};
use fixlab::losses::{grad_check, kld, pooling_kld, random_instance, LossKind, PoolingSpec};
use fixlab::metrics::{auc_judd, cc, kld_metric, nss, sim, Metric};
use fixlab::resampling::{precision_loss_curve, DEFAULT_FACTORS};
use fixlab::trainer::{random_scene, train, Example, TrainConfig, DEFAULT_CHANNELS};
use fixlab::{FixationPixelMap, GrayImage, ProbabilityMap};
use rand::Rng;
use std::process::ExitCode;
use std::time::Instant;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn suppression_ratio() -> Outcome {
    let label = ProbabilityMap::one_hot(3, 3, 1, 1).unwrap();
    let pred = ProbabilityMap::one_hot(3, 3, 0, 0).unwrap().to_image();
    let spec = PoolingSpec::new(3).unwrap();
    let plain = kld(&label, &pred, 1e-6).unwrap().value;
    let pooled = pooling_kld(&label, &pred, spec, 1e-6).unwrap().value;
    let ratio = pooled / plain;
    outcome(
        ratio < 0.14,
        format!("pooled {pooled:.3e} / plain {plain:.4} = {ratio:.3e} (< 0.14)"),
    )
}

fn dominance() -> Outcome {
    let spec = PoolingSpec::new(3).unwrap();
    let mut violations = 0;
    for seed in 0..1000u64 {
        let mut r = rng(seed);
        let (w, h) = (r.random_range(2..=12), r.random_range(2..=12));
        let (label, pred) = random_instance(seed, w, h);
        let pooled = pooling_kld(&label, &pred, spec, DEFAULT_EPS).unwrap().value;
        let plain = kld(&label, &pred, DEFAULT_EPS).unwrap().value;
        if pooled > plain {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations in 1000 pairs"),
    )
}

fn gradients() -> Outcome {
    let spec = PoolingSpec::new(3).unwrap();
    let mut worst_loss: f64 = 0.0;
    for seed in 0..20u64 {
        let (label, pred) = random_instance(seed, 6, 6);
        for kind in [LossKind::Kld, LossKind::PoolingKld] {
            let report = grad_check(kind, &label, &pred, spec, DEFAULT_EPS, 1e-5).unwrap();
            worst_loss = worst_loss.max(report.max_rel_err);
        }
    }
    let mut worst_model: f64 = 0.0;
    for seed in 0..10u64 {
        let ex = Example::from_scene(random_scene(seed).unwrap(), DEFAULT_CHANNELS).unwrap();
        let model = random_model(seed, DEFAULT_CHANNELS);
        for kind in [LossKind::Kld, LossKind::PoolingKld] {
            let err = readout_grad_error(&model, &ex.features, &ex.label, kind, spec, 1e-6);
            worst_model = worst_model.max(err);
        }
    }
    outcome(
        worst_loss < 1e-4 && worst_model < 1e-4,
        format!("losses {worst_loss:.2e}, readout {worst_model:.2e} (< 1e-4)"),
    )
}

fn ward_oracle() -> Outcome {
    let mut mismatches = Vec::new();
    for seed in 0..100u64 {
        let mut r = rng(1000 + seed);
        let n = r.random_range(2..=50);
        let k = (2 + seed as usize % 7).min(n);
        let points = random_points(seed, n, 100.0);
        if ward_cluster(&points, k).unwrap().partition() != naive_ward(&points, k) {
            mismatches.push(seed);
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("100 point sets, mismatching seeds {mismatches:?}"),
    )
}

fn metric_oracles() -> Outcome {
    let mut failures = Vec::new();
    for seed in 0..50u64 {
        let (s, fix) = distinct_instance(seed, 8, 8, 1 + (seed as usize * 7) % 40);
        if auc_judd(&s, &fix).unwrap() != brute_force_auc_judd(&s, &fix) {
            failures.push(format!("auc_judd seed {seed}"));
        }
    }

    let s = GrayImage::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    let fix = FixationPixelMap::new(2, 2, vec![(0, 0)]).unwrap();
    let v = nss(&s, &fix).unwrap();
    if (v - 3f64.sqrt()).abs() > 1e-6 {
        failures.push(format!("nss {v}"));
    }

    let map = common::gaussian_blob(16, 12, 5.0, 7.0, 3.0);
    let affine =
        GrayImage::new(16, 12, map.data().iter().map(|v| 2.5 * v + 0.7).collect()).unwrap();
    let checks = [
        ("cc(S, S)", cc(&map, &map).unwrap(), 1.0, 1e-9),
        ("cc(S, aS + b)", cc(&map, &affine).unwrap(), 1.0, 1e-9),
        ("sim(S, S)", sim(&map, &map).unwrap(), 1.0, 1e-9),
        (
            "kld(S, S)",
            kld_metric(&map, &map, DEFAULT_EPS).unwrap(),
            0.0,
            1e-8,
        ),
    ];
    for (name, got, want, tol) in checks {
        if (got - want).abs() > tol {
            failures.push(format!("{name} = {got}"));
        }
    }
    let left = GrayImage::new(2, 1, vec![1.0, 0.0]).unwrap();
    let right = GrayImage::new(2, 1, vec![0.0, 1.0]).unwrap();
    let disjoint = sim(&left, &right).unwrap();
    if disjoint.abs() > 1e-9 {
        failures.push(format!("sim of disjoint maps = {disjoint}"));
    }
    let uniform = GrayImage::filled(2, 2, 1.0).unwrap();
    let spike = GrayImage::new(2, 2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
    let to_spike = kld_metric(&uniform, &spike, DEFAULT_EPS).unwrap();
    if (to_spike - 4f64.ln()).abs() > 1e-6 {
        failures.push(format!("kld(uniform, one-hot) = {to_spike}"));
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "auc_judd exact on 50 instances, nss = sqrt(3), cc/sim/kld identities hold".into()
        } else {
            failures.join("; ")
        },
    )
}

fn resampling_shape() -> Outcome {
    let fix = FixationPixelMap::new(640, 480, vec![(320, 240)]).unwrap();
    let blob = gaussian_blur(&fix, REFERENCE_SIGMA).unwrap();
    let curve = precision_loss_curve(&blob, &fix, &DEFAULT_FACTORS).unwrap();
    let cc_curve: Vec<f64> = curve
        .metric(Metric::Cc)
        .into_iter()
        .map(Option::unwrap)
        .collect();
    let sim_curve: Vec<f64> = curve
        .metric(Metric::Sim)
        .into_iter()
        .map(Option::unwrap)
        .collect();
    let non_increasing = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
    let at = |f: usize| DEFAULT_FACTORS.iter().position(|&x| x == f).unwrap();
    let (cc16, cc32) = (cc_curve[at(16)], cc_curve[at(32)]);
    outcome(
        non_increasing(&cc_curve) && non_increasing(&sim_curve) && cc16 > cc32,
        format!("cc {cc_curve:.4?}, sim {sim_curve:.4?}, cc(16) {cc16:.4} vs cc(32) {cc32:.4}"),
    )
}

fn mechanism() -> Outcome {
    let run = |loss| {
        let config = TrainConfig {
            loss,
            ..TrainConfig::default()
        };
        train(&config).unwrap().0
    };
    let pooled = run(LossKind::PoolingKld);
    let plain = run(LossKind::Kld);
    let hit = pooled.last().hit_rate;
    let plain_hit = plain.last().hit_rate;
    let initial = pooled.initial().mean_loss;
    let last = pooled.last().mean_loss;
    outcome(
        hit >= 0.8 && hit > plain_hit && last < 0.5 * initial,
        format!(
            "pooling hit {hit:.3} (>= 0.8), plain-kld hit {plain_hit:.3} (pooling must be strictly higher), \
             pooling loss {initial:.4} -> {last:.4} (< half)"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 7] = [
        ("1 pooling suppression ratio", suppression_ratio),
        ("2 pooling dominance", dominance),
        ("3 gradient correctness", gradients),
        ("4 ward oracle equivalence", ward_oracle),
        ("5 metric oracles", metric_oracles),
        ("6 resampling shape", resampling_shape),
        ("7 toy mechanism demonstration", mechanism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = check();
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        if !result.pass {
            failed += 1;
        }
        println!(
            "{verdict} criterion {name}: {} [{:.1}s]",
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "NOT REPRODUCED criterion 8 benchmark scores: MIT300 and CAT2000 results need a full \
         SALICON-trained network and held-out ground truth; the metric suite is checked by criterion 5 instead"
    );
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    }
}
