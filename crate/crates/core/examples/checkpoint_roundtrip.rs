//! Save a trained network, load it back and confirm identical predictions.

use shapebias::models::{build_mlp, train, Checkpoint, MlpSpec, TrainConfig};
use shapebias::numerics::Rng;
use shapebias::stimuli::{gen_bit_dataset, DatasetConfig};

fn main() -> shapebias::Result<()> {
    let set = gen_bit_dataset(&DatasetConfig::new(4, 3), &mut Rng::seed_from(7))?;
    let mut model = build_mlp(&MlpSpec::new(4), &mut Rng::seed_from(7))?;
    let out = train(&mut model, &set, &TrainConfig::mlp(7))?;

    let path = std::env::temp_dir().join("shapebias_example.bin");
    out.checkpoint.save(&path)?;
    let loaded = Checkpoint::load(&path)?;
    let x = set.encode_items(&(0..set.len()).collect::<Vec<_>>())?;
    let a = model.hidden_activations(&x)?;
    let b = loaded.model.hidden_activations(&x)?;
    let same = a.iter().flatten().zip(b.iter().flatten()).all(|(u, v)| u.to_bits() == v.to_bits());
    println!(
        "{} ({} bytes), epoch {}, loss {:.5}, bitwise identical: {same}",
        path.display(),
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
        loaded.best_epoch,
        loaded.best_train_loss
    );
    Ok(())
}
