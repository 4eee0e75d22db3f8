//! Shape-morph and color-step probes on a small trained CNN.
//!
//! cargo run --release --example image_probes -- [N] [K] [resolution] [epochs]

use shapebias::models::{build_cnn, train, CnnSpec, TrainConfig};
use shapebias::numerics::Rng;
use shapebias::probes::{color_step_sensitivity, shape_morph_sensitivity};
use shapebias::stimuli::{gen_image_dataset, DatasetConfig, ImageConfig};

fn main() -> shapebias::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let num = |i: usize, d: usize| args.get(i).and_then(|a| a.parse().ok()).unwrap_or(d);
    let (n, k, res, epochs) = (num(0, 4), num(1, 3), num(2, 48), num(3, 150));

    let set = gen_image_dataset(
        &DatasetConfig::new(n, k).with_holdout(20),
        &ImageConfig::at(res),
        &mut Rng::seed_from(1),
    )?;
    let mut model = build_cnn(&CnnSpec::new(n, res), &mut Rng::seed_from(2))?;
    train(&mut model, &set, &TrainConfig::cnn(2).with_epochs(epochs))?;

    let mut rng = Rng::seed_from(3);
    for (i, item) in set.items.iter().enumerate().take(4) {
        let morph = shape_morph_sensitivity(&model, &set.universe, item, 30, &mut rng)?;
        let steps = color_step_sensitivity(&model, &set.universe, item, 20, &mut rng)?;
        println!(
            "item {i}: morph spearman {:+.3} drop {:.3} | color drop {:.3}",
            morph.spearman,
            morph.curve().mean_drop(),
            steps.mean_drop()
        );
    }
    Ok(())
}
