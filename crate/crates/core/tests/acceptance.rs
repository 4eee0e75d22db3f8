//! End-to-end acceptance criteria. Each test prints one `PASS`/`FAIL` line.
//!
//! The CNN runs take tens of minutes on one core; the trained networks are
//! shared between criteria through `OnceLock`s.

mod common;

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use rayon::prelude::*;

use common::{conv_oracle, max_gradient_error, random_projection, random_tensor};
use shapebias::experiments::{
    metric1_within, metric2_across, pearson_p, pearson_r, run_job, run_sweep, run_vocab_accel,
    score, two_phase_check, ModelKind, RunRecord, RunSettings, SeriesMode, SweepConfig,
    VocabConfig,
};
use shapebias::models::{train, Model, TrainConfig};
use shapebias::numerics::{softmax_rows, Padding, Rng, Tape};
use shapebias::probes::{
    bitflip_sensitivity, color_step_sensitivity, cross_channel_difference, modified_hausdorff,
    shape_morph_sensitivity, Curve,
};
use shapebias::stimuli::{gen_bit_dataset, gen_image_dataset, Attribute};

const SEEDS: usize = 10;
const MASTER: u64 = 2024;

/// Written straight to the process stdout so the line shows even when the
/// harness captures test output.
fn report(id: u32, name: &str, pass: bool, detail: &str, start: Instant) {
    let line = format!(
        "criterion {id:>2} {:<4} {name}: {detail} ({:.0}s)\n",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).and_then(|_| out.flush()).ok();
}

/// Trains `SEEDS` networks at one cell, keeping the models.
fn train_cell(settings: &RunSettings, n: usize, k: usize) -> Vec<(RunRecord, Model, u64)> {
    (0..SEEDS)
        .into_par_iter()
        .map(|i| {
            let seed = shapebias::experiments::job_seed(MASTER, n, k, i);
            let (rec, model) = run_job(settings, n, k, i, seed).expect("training job");
            (rec, model, seed)
        })
        .collect()
}

fn order_means(runs: &[(RunRecord, Model, u64)]) -> [f64; 2] {
    [0, 1].map(|o| runs.iter().map(|r| r.0.reports[o].accuracy()).sum::<f64>() / runs.len() as f64)
}

fn mlp_settings() -> RunSettings {
    RunSettings::new(ModelKind::Mlp)
}

fn mlp_4_3() -> &'static Vec<(RunRecord, Model, u64)> {
    static CELL: OnceLock<Vec<(RunRecord, Model, u64)>> = OnceLock::new();
    CELL.get_or_init(|| train_cell(&mlp_settings(), 4, 3))
}

fn cnn_settings(label: Attribute) -> RunSettings {
    let mut s = RunSettings::new(ModelKind::Cnn);
    s.label_attribute = label;
    s.resolution = 64;
    s
}

/// Shape-trained (30,10) CNNs probed for criterion 6, and exemplars per network.
const PROBE_NETWORKS: usize = 3;
const PROBE_EXEMPLARS: usize = 5;

fn cnn_8_6() -> &'static Vec<(RunRecord, Model, u64)> {
    static CELL: OnceLock<Vec<(RunRecord, Model, u64)>> = OnceLock::new();
    CELL.get_or_init(|| train_cell(&cnn_settings(Attribute::Shape), 8, 6))
}

#[test]
fn c01_mlp_shape_bias_onset() {
    let start = Instant::now();
    let a = order_means(mlp_4_3())[1];
    let mut rep = mlp_settings();
    rep.allow_repeats = true;
    let b = order_means(&train_cell(&rep, 2, 6))[1];
    let pass = a >= 0.70 && b >= 0.60;
    report(
        1,
        "MLP shape-bias onset",
        pass,
        &format!("order-2 (4,3) {a:.3} >= 0.70, (2,6 repeats) {b:.3} >= 0.60"),
        start,
    );
    assert!(pass);
}

#[test]
fn c02_untrained_baseline() {
    let start = Instant::now();
    let settings = mlp_settings();
    let shares: Vec<[f64; 3]> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let seed = shapebias::numerics::rng::derive_seed(MASTER, "baseline", &[i]);
            let set = gen_bit_dataset(&settings.dataset(4, 3), &mut Rng::stream(seed, "data", &[]))
                .unwrap();
            let model = settings
                .build_model(4, &mut Rng::stream(seed, "init", &[]))
                .unwrap();
            score(&model, &set, &settings, seed).unwrap()[1].shares
        })
        .collect();
    let mean = [0, 1, 2].map(|a| shares.iter().map(|s| s[a]).sum::<f64>() / shares.len() as f64);
    let pass = mean.iter().all(|s| (s - 1.0 / 3.0).abs() <= 0.07);
    report(
        2,
        "untrained baseline",
        pass,
        &format!(
            "order-2 shares shape {:.3} color {:.3} texture {:.3}, each within 1/3 +- 0.07",
            mean[0], mean[1], mean[2]
        ),
        start,
    );
    assert!(pass);
}

#[test]
fn c03_two_phase_property() {
    let start = Instant::now();
    let mut config = SweepConfig::new(mlp_settings(), vec![2, 4, 8, 16], vec![1, 3, 6]);
    config.seeds = SEEDS;
    config.master_seed = MASTER;
    let grid = run_sweep(&config).unwrap();
    let phase = two_phase_check(&grid, 0.05);
    let frac = phase.conforming_fraction();
    let pass = phase.checked > 0 && frac >= 0.90;
    report(
        3,
        "two-phase property",
        pass,
        &format!(
            "{:.0}% of {} feasible cells have order-1 >= order-2 - 0.05 (need 90%); violations {:?}",
            100.0 * frac,
            phase.checked,
            phase.violations
        ),
        start,
    );
    assert!(pass);
}

#[test]
fn c04_cnn_shape_bias_onset() {
    let start = Instant::now();
    let [o1, o2] = order_means(cnn_8_6());
    let pass = o2 >= 0.65;
    report(
        4,
        "CNN shape-bias onset",
        pass,
        &format!("64x64 (8,6) order-2 {o2:.3} >= 0.65 (order-1 {o1:.3})"),
        start,
    );
    assert!(pass);
}

#[test]
#[ignore = "full 200x200 resolution, several CPU hours"]
fn c04_cnn_shape_bias_onset_full_resolution() {
    let start = Instant::now();
    let mut s = cnn_settings(Attribute::Shape);
    s.resolution = 200;
    let [o1, o2] = order_means(&train_cell(&s, 8, 6));
    let pass = o2 >= 0.65;
    report(
        4,
        "CNN shape-bias onset, 200x200",
        pass,
        &format!("(8,6) order-2 {o2:.3} >= 0.65 (order-1 {o1:.3})"),
        start,
    );
    assert!(pass);
}

#[test]
fn c05_color_bias_variant() {
    let start = Instant::now();
    let color = train_cell(&cnn_settings(Attribute::Color), 2, 3);
    let [c1, c2] = order_means(&color);
    let [s1, s2] = order_means(cnn_8_6());
    let (color_gap, shape_gap) = ((c1 - c2).abs(), (s1 - s2).abs());
    let pass = c2 >= 0.60 && color_gap < shape_gap;
    report(
        5,
        "color-bias variant",
        pass,
        &format!(
            "(2,3) order-2 color {c2:.3} >= 0.60; gap {color_gap:.3} < shape gap at (8,6) {shape_gap:.3}"
        ),
        start,
    );
    assert!(pass);
}

fn average_curves(curves: &[Curve]) -> Vec<f64> {
    let len = curves[0].points.len();
    (0..len)
        .map(|i| curves.iter().map(|c| c.points[i].mean).sum::<f64>() / curves.len() as f64)
        .collect()
}

#[test]
fn c06_sensitivity_probes() {
    let start = Instant::now();
    let settings = mlp_settings();
    let mut shape_curves = Vec::new();
    let mut color_curves = Vec::new();
    for (_, model, seed) in mlp_4_3() {
        let set = gen_bit_dataset(
            &settings.dataset(4, 3),
            &mut Rng::stream(*seed, "data", &[]),
        )
        .unwrap();
        let mut rng = Rng::stream(*seed, "probe", &[]);
        for i in 0..set.len() {
            let obj = set.bit_object(i);
            shape_curves.push(
                bitflip_sensitivity(model, &obj, Attribute::Shape, 20, 20, &mut rng).unwrap(),
            );
            color_curves.push(
                bitflip_sensitivity(model, &obj, Attribute::Color, 20, 20, &mut rng).unwrap(),
            );
        }
    }
    let shape = average_curves(&shape_curves);
    let color = average_curves(&color_curves);
    let mlp_ok = (4..shape.len()).all(|f| shape[f] < color[f]);

    let cnn = cnn_settings(Attribute::Shape);
    let mut rhos = Vec::new();
    let (mut shape_drops, mut color_drops) = (Vec::new(), Vec::new());
    let runs: Vec<(Model, u64)> = (0..PROBE_NETWORKS)
        .into_par_iter()
        .map(|i| {
            let seed = shapebias::experiments::job_seed(MASTER, 30, 10, i);
            let (_, model) = run_job(&cnn, 30, 10, i, seed).expect("training job");
            (model, seed)
        })
        .collect();
    for (model, seed) in &runs {
        let set = gen_image_dataset(
            &cnn.dataset(30, 10),
            &cnn.image_config(),
            &mut Rng::stream(*seed, "data", &[]),
        )
        .unwrap();
        let mut rng = Rng::stream(*seed, "probe", &[]);
        for item in &set.items[..PROBE_EXEMPLARS] {
            let morph = shape_morph_sensitivity(model, &set.universe, item, 50, &mut rng).unwrap();
            let steps = color_step_sensitivity(model, &set.universe, item, 50, &mut rng).unwrap();
            rhos.push(morph.spearman);
            shape_drops.push(morph.curve().mean_drop());
            color_drops.push(steps.mean_drop());
        }
    }
    let shape_drop = shape_drops.iter().sum::<f64>() / shape_drops.len() as f64;
    let color_drop = color_drops.iter().sum::<f64>() / color_drops.len() as f64;
    let rho = rhos.iter().sum::<f64>() / rhos.len() as f64;
    let cnn_ok = rho < -0.5 && color_drop < shape_drop;
    let pass = mlp_ok && cnn_ok;
    let gaps: Vec<String> = (4..shape.len())
        .map(|f| format!("{:.3}", color[f] - shape[f]))
        .collect();
    report(
        6,
        "sensitivity probes",
        pass,
        &format!(
            "MLP color-shape similarity gap at 4..=20 flips [{}] all > 0; CNN Spearman {rho:.3} < -0.5, color drop {color_drop:.3} < shape drop {shape_drop:.3}",
            gaps.join(" ")
        ),
        start,
    );
    assert!(pass);
}

#[test]
fn c07_vocabulary_acceleration() {
    let start = Instant::now();
    let config = VocabConfig {
        networks: 20,
        master_seed: MASTER,
        ..VocabConfig::default()
    };
    let outcome = run_vocab_accel(&config).unwrap();
    assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
    let m1 = metric1_within(&outcome.records, SeriesMode::Increments).unwrap();
    let (r2, p2) = metric2_across(&outcome.records).unwrap();
    let sig = m1.significant_fraction(0.05);
    let pass = r2 > 0.3 && p2 < 0.05 && m1.mean_r > 0.2 && sig > 0.5;
    report(
        7,
        "vocabulary acceleration",
        pass,
        &format!(
            "metric-2 r {r2:.3} > 0.3, p {p2:.2e} < 0.05; metric-1 mean r {:.3} > 0.2, {:.0}% of networks p < 0.05 (need > 50%)",
            m1.mean_r,
            100.0 * sig
        ),
        start,
    );
    assert!(pass);
}

const H: f64 = 1e-6;

#[test]
fn c08_numerics_suite() {
    let start = Instant::now();
    let mut rng = Rng::seed_from(8);
    let mut worst = 0.0f64;
    let mut check = |name: &str, err: f64| {
        assert!(err < 1e-4, "{name}: relative error {err}");
        worst = worst.max(err);
    };

    let a = random_tensor(&[3, 4], &mut rng, 0.1);
    let b = random_tensor(&[4, 2], &mut rng, 0.1);
    let bias = random_tensor(&[4], &mut rng, 0.1);
    let other = random_tensor(&[3, 4], &mut rng, 0.1);
    check(
        "matmul",
        max_gradient_error(&[a.clone(), b], H, |t, v| {
            let y = t.matmul(v[0], v[1]).unwrap();
            random_projection(t, y, 1)
        }),
    );
    check(
        "add_bias",
        max_gradient_error(&[a.clone(), bias], H, |t, v| {
            let y = t.add_bias(v[0], v[1]).unwrap();
            random_projection(t, y, 2)
        }),
    );
    check(
        "add",
        max_gradient_error(&[a.clone(), other], H, |t, v| {
            let y = t.add(v[0], v[1]).unwrap();
            random_projection(t, y, 3)
        }),
    );
    check(
        "scale",
        max_gradient_error(std::slice::from_ref(&a), H, |t, v| {
            let y = t.scale(v[0], -1.7);
            random_projection(t, y, 4)
        }),
    );
    check(
        "sum",
        max_gradient_error(std::slice::from_ref(&a), H, |t, v| {
            let y = t.scale(v[0], 0.5);
            t.sum(y)
        }),
    );
    check(
        "relu",
        max_gradient_error(std::slice::from_ref(&a), H, |t, v| {
            let y = t.relu(v[0]);
            random_projection(t, y, 5)
        }),
    );
    check(
        "dropout",
        max_gradient_error(std::slice::from_ref(&a), H, |t, v| {
            let y = t.dropout(v[0], 0.4, &mut Rng::seed_from(9), true).unwrap();
            random_projection(t, y, 6)
        }),
    );
    check(
        "reshape",
        max_gradient_error(&[a], H, |t, v| {
            let y = t.reshape(v[0], vec![2, 6]).unwrap();
            random_projection(t, y, 7)
        }),
    );
    let x = random_tensor(&[2, 2, 6, 6], &mut rng, 0.05);
    let k = random_tensor(&[3, 2, 3, 3], &mut rng, 0.05);
    let kb = random_tensor(&[3], &mut rng, 0.05);
    for padding in [Padding::Valid, Padding::Same] {
        check(
            "conv2d",
            max_gradient_error(&[x.clone(), k.clone(), kb.clone()], H, |t, v| {
                let y = t.conv2d(v[0], v[1], v[2], padding).unwrap();
                random_projection(t, y, 8)
            }),
        );
    }
    check(
        "maxpool2d",
        max_gradient_error(&[x], H, |t, v| {
            let y = t.maxpool2d(v[0], 2, 2).unwrap();
            random_projection(t, y, 9)
        }),
    );
    let logits = random_tensor(&[4, 5], &mut rng, 0.0);
    check(
        "softmax_nll",
        max_gradient_error(&[logits], H, |t, v| {
            t.softmax_nll(v[0], &[0, 3, 1, 4]).unwrap()
        }),
    );
    let w1 = random_tensor(&[3, 3], &mut rng, 0.0);
    let w2 = random_tensor(&[5], &mut rng, 0.0);
    check(
        "l2_penalty",
        max_gradient_error(&[w1, w2], H, |t, v| {
            t.l2_penalty(&[v[0], v[1]], 0.01).unwrap()
        }),
    );

    let mut convs = 0;
    for h in 1..=6 {
        for w in 1..=6 {
            for kh in 1..=6 {
                for kw in 1..=6 {
                    for padding in [Padding::Valid, Padding::Same] {
                        if padding == Padding::Valid && (kh > h || kw > w) {
                            continue;
                        }
                        let x = random_tensor(&[2, 2, h, w], &mut rng, 0.0);
                        let k = random_tensor(&[2, 2, kh, kw], &mut rng, 0.0);
                        let b = random_tensor(&[2], &mut rng, 0.0);
                        let mut tape = Tape::new();
                        let (xv, kv, bv) = (
                            tape.leaf(x.clone(), false),
                            tape.leaf(k.clone(), false),
                            tape.leaf(b.clone(), false),
                        );
                        let y = tape.conv2d(xv, kv, bv, padding).unwrap();
                        let oracle = conv_oracle(&x, &k, &b, padding);
                        assert_eq!(tape.value(y).shape(), oracle.shape());
                        for (p, q) in tape.value(y).data().iter().zip(oracle.data()) {
                            assert!(
                                (p - q).abs() <= 1e-12,
                                "conv {h}x{w} k {kh}x{kw} {padding:?}"
                            );
                        }
                        convs += 1;
                    }
                }
            }
        }
    }

    for _ in 0..200 {
        let classes = 2 + rng.below(8);
        let rows = 1 + rng.below(5);
        let logits: Vec<f64> = (0..rows * classes)
            .map(|_| rng.uniform_range(-60.0, 60.0))
            .collect();
        for row in softmax_rows(&logits, classes).chunks(classes) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    let reproducible = |kind: ModelKind| {
        let s = RunSettings::new(kind);
        let cfg = s.dataset(2, 2);
        let bytes = || {
            let mut model = s.build_model(2, &mut Rng::stream(5, "init", &[])).unwrap();
            let tc = TrainConfig::for_spec(&model.spec, 5).with_epochs(15);
            let out = match kind {
                ModelKind::Mlp => {
                    let set = gen_bit_dataset(&cfg, &mut Rng::stream(5, "data", &[])).unwrap();
                    train(&mut model, &set, &tc).unwrap()
                }
                ModelKind::Cnn => {
                    let set = gen_image_dataset(
                        &cfg,
                        &s.image_config(),
                        &mut Rng::stream(5, "data", &[]),
                    )
                    .unwrap();
                    train(&mut model, &set, &tc).unwrap()
                }
            };
            out.checkpoint.to_bytes().unwrap()
        };
        bytes() == bytes()
    };
    let repro = reproducible(ModelKind::Mlp) && reproducible(ModelKind::Cnn);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = repro && elapsed < 60.0;
    report(
        8,
        "numerics property suite",
        pass,
        &format!(
            "worst gradient relative error {worst:.1e} < 1e-4; {convs} conv shapes match the oracle; softmax rows sum to 1; training bitwise reproducible: {repro}; {elapsed:.1}s < 60s"
        ),
        start,
    );
    assert!(pass);
}

fn permutation_p(x: &[f64], y: &[f64], draws: usize, rng: &mut Rng) -> f64 {
    let r = pearson_r(x, y).unwrap().abs();
    let mut y = y.to_vec();
    let mut hits = 0;
    for _ in 0..draws {
        rng.shuffle(&mut y);
        if pearson_r(x, &y).unwrap().abs() >= r - 1e-12 {
            hits += 1;
        }
    }
    hits as f64 / draws as f64
}

#[test]
fn c09_statistics_oracles() {
    let start = Instant::now();
    let direct = |x: &[f64], y: &[f64]| {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|b| b * b).sum();
        (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
    };
    let fixtures: [(&[f64], &[f64]); 3] = [
        (&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 5.0, 4.0, 5.0]),
        (&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]),
        (
            &[0.5, -1.0, 2.5, 3.0, 0.0, 1.5],
            &[1.0, 0.0, 2.0, 4.5, -0.5, 1.0],
        ),
    ];
    let mut r_err = 0.0f64;
    for (x, y) in fixtures {
        r_err = r_err.max((pearson_r(x, y).unwrap() - direct(x, y)).abs());
    }
    r_err = r_err.max((pearson_r(fixtures[0].0, fixtures[0].1).unwrap() - 0.6f64.sqrt()).abs());

    // Two series with sample correlation exactly 0.8 at n = 20.
    let mut rng = Rng::seed_from(20);
    let n = 20;
    let standardize = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let c: Vec<f64> = v.iter().map(|a| a - m).collect();
        let s = c.iter().map(|a| a * a).sum::<f64>().sqrt();
        c.into_iter().map(|a| a / s).collect::<Vec<f64>>()
    };
    let x = standardize(&(0..n).map(|_| rng.uniform()).collect::<Vec<_>>());
    let e: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
    let proj: f64 = x.iter().zip(&e).map(|(a, b)| a * b).sum();
    let e = standardize(
        &e.iter()
            .zip(&x)
            .map(|(b, a)| b - proj * a)
            .collect::<Vec<_>>(),
    );
    let y: Vec<f64> = x.iter().zip(&e).map(|(a, b)| 0.8 * a + 0.6 * b).collect();
    let r = pearson_r(&x, &y).unwrap();
    assert!((r - 0.8).abs() < 1e-12);
    let analytic = pearson_p(0.8, n).unwrap();
    let oracle = permutation_p(&x, &y, 100_000, &mut rng);
    let p_ok = (analytic - oracle).abs() <= 0.01;

    let mhd_ok = modified_hausdorff(&[(0.0, 0.0)], &[(3.0, 4.0)]).unwrap() == 5.0
        && modified_hausdorff(&[(0.0, 0.0), (1.0, 0.0)], &[(0.0, 0.0)]).unwrap() == 0.5
        && modified_hausdorff(
            &[(0.0, 0.0), (2.0, 0.0)],
            &[(0.0, 1.0), (2.0, 1.0), (2.0, 4.0)],
        )
        .unwrap()
            == 2.0
        && modified_hausdorff(&[(1.0, 1.0), (4.0, 5.0)], &[(1.0, 1.0), (4.0, 5.0)]).unwrap() == 0.0;

    let pass = r_err <= 1e-12 && p_ok && mhd_ok;
    report(
        9,
        "statistics oracles",
        pass,
        &format!(
            "pearson_r error {r_err:.1e} <= 1e-12; pearson_p {analytic:.2e} vs permutation {oracle:.2e} within 0.01; MHD fixtures exact: {mhd_ok}"
        ),
        start,
    );
    assert!(pass);
}

#[test]
fn c10_filter_structure() {
    let start = Instant::now();
    let diff = |label: Attribute| {
        let s = cnn_settings(label);
        let seed =
            shapebias::numerics::rng::derive_seed(MASTER, "filters", &[label.index() as u64]);
        let (_, model) = run_job(&s, 12, 10, 0, seed).unwrap();
        cross_channel_difference(&model).unwrap()
    };
    let shape = diff(Attribute::Shape);
    let color = diff(Attribute::Color);
    let pass = shape < color;
    report(
        10,
        "filter structure",
        pass,
        &format!("cross-channel difference shape-trained {shape:.4} < color-trained {color:.4}"),
        start,
    );
    assert!(pass);
}
