//! Trains the bit-vector perceptron on a small N x K set and scores first-
//! and second-order generalization.
//!
//! cargo run --example mlp_shape_bias -- 4 3 10

use shapebias::models::{build_mlp, train, MlpSpec, TrainConfig};
use shapebias::numerics::Rng;
use shapebias::probes::run_generalization_test;
use shapebias::stimuli::{build_trials, gen_bit_dataset, Attribute, DatasetConfig, TestOrder};

fn main() -> shapebias::Result<()> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let n = args.first().copied().unwrap_or(4);
    let k = args.get(1).copied().unwrap_or(3);
    let seeds = args.get(2).copied().unwrap_or(10) as u64;
    let mut sums = [0.0; 2];
    for seed in 0..seeds {
        let cfg = DatasetConfig::new(n, k).with_repeats(true);
        let set = gen_bit_dataset(&cfg, &mut Rng::stream(seed, "data", &[]))?;
        let mut model = build_mlp(&MlpSpec::new(n), &mut Rng::stream(seed, "init", &[]))?;
        let out = train(
            &mut model,
            &set,
            &TrainConfig::mlp(seed).with_accuracy_every(0),
        )?;
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
            let (report, _) =
                run_generalization_test(&model, &set.universe, &trials, Attribute::Shape, seed)?;
            accs[o] = report.accuracy();
            sums[o] += accs[o];
        }
        println!(
            "seed {seed}: best epoch {} loss {:.4}  order-1 {:.3}  order-2 {:.3}",
            out.checkpoint.best_epoch, out.checkpoint.best_train_loss, accs[0], accs[1]
        );
    }
    println!(
        "N={n} K={k}: mean order-1 {:.3}, order-2 {:.3}",
        sums[0] / seeds as f64,
        sums[1] / seeds as f64
    );
    Ok(())
}
