//! Trains the image CNN on an N x K set of rendered objects and scores
//! generalization along the label attribute.
//!
//! cargo run --release --example cnn_shape_bias -- <N> <K> <seeds> <resolution> <epochs> [shape|color]

use std::time::Instant;

use shapebias::models::{build_cnn, train, CnnSpec, TrainConfig};
use shapebias::numerics::Rng;
use shapebias::probes::run_generalization_test;
use shapebias::stimuli::{
    build_trials, gen_image_dataset, Attribute, DatasetConfig, ImageConfig, TestOrder,
};

fn main() -> shapebias::Result<()> {
    let raw: Vec<String> = std::env::args().skip(1).collect();
    let num = |i: usize, d: usize| raw.get(i).and_then(|a| a.parse().ok()).unwrap_or(d);
    let (n, k, seeds, res, epochs) = (num(0, 8), num(1, 6), num(2, 2), num(3, 64), num(4, 400));
    let label: Attribute = raw
        .get(5)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(Attribute::Shape);
    let mut sums = [0.0; 2];
    for seed in 0..seeds as u64 {
        let start = Instant::now();
        let cfg = DatasetConfig::new(n, k).with_label(label).with_holdout(20);
        let set = gen_image_dataset(
            &cfg,
            &ImageConfig::at(res),
            &mut Rng::stream(seed, "data", &[]),
        )?;
        let mut model = build_cnn(&CnnSpec::new(n, res), &mut Rng::stream(seed, "init", &[]))?;
        let config = TrainConfig::cnn(seed)
            .with_epochs(epochs)
            .with_accuracy_every(0);
        let out = train(&mut model, &set, &config)?;
        let mut accs = [0.0; 2];
        for (o, order) in [TestOrder::First, TestOrder::Second]
            .into_iter()
            .enumerate()
        {
            let trials = build_trials(
                &set,
                order,
                1000,
                &mut Rng::stream(seed, "trials", &[o as u64]),
            )?;
            let (report, _) = run_generalization_test(&model, &set.universe, &trials, label, seed)?;
            accs[o] = report.accuracy();
            sums[o] += accs[o];
        }
        println!(
            "seed {seed}: best epoch {} loss {:.4}  order-1 {:.3}  order-2 {:.3}  ({:.1}s)",
            out.checkpoint.best_epoch,
            out.checkpoint.best_train_loss,
            accs[0],
            accs[1],
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "N={n} K={k} {label}: mean order-1 {:.3}, order-2 {:.3}",
        sums[0] / seeds as f64,
        sums[1] / seeds as f64
    );
    Ok(())
}
