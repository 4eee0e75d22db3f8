use proptest::prelude::*;
use shapebias::experiments::stats::{mean, ranks, stddev};
use shapebias::experiments::{
    correlation_csv, detect_bias_onset, grid_summary_csv, metric1_within, metric2_across, pearson_p, pearson_r,
    run_sweep, spearman, sweep_csv, two_phase_check, vocab_csv, ModelKind, RunSettings, SeriesMode, Session,
    SweepConfig, SweepGrid, VocabRecord,
};
use shapebias::numerics::Rng;
use shapebias::Error;

#[test]
fn pearson_fixtures() {
    let r = pearson_r(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 5.0, 4.0, 5.0]).unwrap();
    assert!((r - 0.6f64.sqrt()).abs() < 1e-12);
    assert!((pearson_r(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
    assert!(matches!(pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::UndefinedCorrelation(_))));
    assert!(pearson_r(&[1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    assert!((pearson_p(0.0, 10).unwrap() - 1.0).abs() < 1e-12);
    assert!(pearson_p(0.5, 2).is_err());
}

/// Probability that |r| of `n` independent normal pairs reaches `r0`, by
/// simulation.
fn null_tail(r0: f64, n: usize, draws: usize, rng: &mut Rng) -> f64 {
    let mut normal = || {
        let (u1, u2) = (rng.uniform().max(1e-300), rng.uniform());
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let mut hits = 0;
    for _ in 0..draws {
        let x: Vec<f64> = (0..n).map(|_| normal()).collect();
        let y: Vec<f64> = (0..n).map(|_| normal()).collect();
        if pearson_r(&x, &y).unwrap().abs() >= r0 {
            hits += 1;
        }
    }
    hits as f64 / draws as f64
}

#[test]
fn pearson_p_matches_simulated_null() {
    let mut rng = Rng::seed_from(31);
    for (r, n) in [(0.3, 20), (0.632, 10), (0.5, 12)] {
        let sim = null_tail(r, n, 40_000, &mut rng);
        let p = pearson_p(r, n).unwrap();
        assert!((p - sim).abs() < 0.01, "r={r} n={n}: analytic {p} simulated {sim}");
    }
}

#[test]
fn spearman_and_ranks() {
    assert_eq!(ranks(&[10.0, 30.0, 20.0, 20.0]), vec![1.0, 4.0, 2.5, 2.5]);
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    let y = [1.0, 8.0, 27.0, 64.0, 125.0];
    assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    assert!((mean(&x) - 3.0).abs() < 1e-15);
    assert!((stddev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]) - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn pearson_is_affine_invariant(
        xs in prop::collection::vec(-100.0f64..100.0, 4..30),
        seed in any::<u64>(),
        a in 0.1f64..10.0, b in -50.0f64..50.0, c in 0.1f64..10.0, d in -50.0f64..50.0,
    ) {
        let mut rng = Rng::seed_from(seed);
        let ys: Vec<f64> = xs.iter().map(|x| x * 0.3 + rng.uniform_range(-40.0, 40.0)).collect();
        let Ok(r) = pearson_r(&xs, &ys) else { return Ok(()); };
        let xs2: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let ys2: Vec<f64> = ys.iter().map(|y| -c * y + d).collect();
        let r2 = pearson_r(&xs2, &ys2).unwrap();
        prop_assert!((r + r2).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&r));
    }

    #[test]
    fn pearson_p_is_monotone_in_r(n in 4usize..60, r1 in 0.0f64..0.99, dr in 0.001f64..0.5) {
        let r2 = (r1 + dr).min(0.999);
        let (p1, p2) = (pearson_p(r1, n).unwrap(), pearson_p(r2, n).unwrap());
        prop_assert!(p2 <= p1 + 1e-12);
        prop_assert!((0.0..=1.0).contains(&p1));
        prop_assert_eq!(pearson_p(-r1, n).unwrap(), p1);
    }
}

fn small_sweep(workers: usize) -> SweepGrid {
    let mut settings = RunSettings::new(ModelKind::Mlp);
    settings.epochs = Some(30);
    settings.trial_count = 100;
    let mut config = SweepConfig::new(settings, vec![2, 3], vec![1, 5]);
    config.seeds = 2;
    config.master_seed = 77;
    config.workers = workers;
    run_sweep(&config).unwrap()
}

#[test]
fn sweeps_do_not_depend_on_worker_count() {
    let a = small_sweep(1);
    let b = small_sweep(3);
    assert_eq!(sweep_csv(&a), sweep_csv(&b));
    // N=2, K=5 exceeds the 4 unique combinations
    let infeasible = a.cell(2, 5).unwrap();
    assert!(!infeasible.feasible);
    assert!(infeasible.orders.is_none());
    assert_eq!(a.cell(3, 5).unwrap().runs.len(), 2);
    assert_eq!(sweep_csv(&a).lines().count(), 1 + 3 * 2 * 2);
    let summary = grid_summary_csv(&a);
    assert!(summary.lines().any(|l| l.starts_with("2,5,false,0,NA")));
}

#[test]
fn onset_and_two_phase_on_synthetic_grids() {
    let grid = SweepGrid::from_means(
        vec![2, 4, 8],
        vec![1, 3],
        &[
            Some((0.5, 0.4)),
            Some((0.8, 0.6)),
            Some((0.7, 0.65)),
            Some((0.9, 0.72)),
            Some((0.9, 0.75)),
            None,
        ],
    );
    assert_eq!(detect_bias_onset(&grid, 0.7), vec![(4, 3), (8, 1)]);
    assert!(detect_bias_onset(&grid, 0.9).is_empty());
    let phase = two_phase_check(&grid, 0.05);
    assert_eq!(phase.checked, 5);
    assert!(phase.violations.is_empty());
    let bad = SweepGrid::from_means(vec![2], vec![1, 3], &[Some((0.5, 0.6)), Some((0.6, 0.64))]);
    let phase = two_phase_check(&bad, 0.05);
    assert_eq!(phase.violations, vec![(2, 1)]);
    assert_eq!(phase.conforming_fraction(), 0.5);
}

fn record(network: usize, nouns: &[usize], shapes: &[usize]) -> VocabRecord {
    let mut cum = 0;
    VocabRecord {
        network,
        sessions: nouns
            .iter()
            .zip(shapes)
            .enumerate()
            .map(|(i, (&n, &s))| {
                let prev = cum;
                cum = s;
                Session {
                    session: i + 1,
                    epoch: 3 * (i + 1),
                    cum_count_nouns: n,
                    shape_choices: s - prev,
                    cum_shape_choices: s,
                }
            })
            .collect(),
    }
}

#[test]
fn vocab_metrics_use_increments() {
    let a = record(0, &[1, 3, 4, 8, 9], &[100, 300, 400, 800, 900]);
    let b = record(1, &[0, 0, 1, 1, 2], &[50, 60, 120, 130, 190]);
    let c = record(2, &[2, 2, 2, 5, 6], &[200, 250, 300, 500, 560]);
    let records = vec![a.clone(), b.clone(), c];
    let (inc_n, inc_s) = a.increments();
    assert_eq!(inc_n, vec![1.0, 2.0, 1.0, 4.0, 1.0]);
    assert_eq!(inc_s, vec![100.0, 200.0, 100.0, 400.0, 100.0]);
    let m1 = metric1_within(&records, SeriesMode::Increments).unwrap();
    assert_eq!(m1.per_network.len(), 3);
    assert!((m1.per_network[0].r - 1.0).abs() < 1e-12);
    let expected = m1.per_network.iter().map(|c| c.r).sum::<f64>() / 3.0;
    assert!((m1.mean_r - expected).abs() < 1e-12);
    let cum = metric1_within(&records, SeriesMode::Cumulative).unwrap();
    let (cn, cs) = b.cumulative();
    assert!((cum.per_network[1].r - pearson_r(&cn, &cs).unwrap()).abs() < 1e-12);

    let (r2, p2) = metric2_across(&records).unwrap();
    let mean_inc = |r: &VocabRecord| {
        let (n, s) = r.increments();
        (mean(&n), mean(&s))
    };
    let pairs: Vec<(f64, f64)> = records.iter().map(mean_inc).collect();
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    assert!((r2 - pearson_r(&xs, &ys).unwrap()).abs() < 1e-12);
    assert!((p2 - pearson_p(r2, 3).unwrap()).abs() < 1e-12);

    let csv = vocab_csv(&records);
    assert_eq!(csv.lines().count(), 1 + 15);
    assert!(correlation_csv(&m1, Some((r2, p2))).lines().count() >= 4);
    let flat = record(3, &[0, 0, 0], &[10, 20, 30]);
    let m = metric1_within(&[flat], SeriesMode::Increments).unwrap();
    assert_eq!(m.excluded.len(), 1);
}
