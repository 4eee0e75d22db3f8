//! Trains one shape-labeled and one color-labeled CNN and compares how much
//! their first-layer filters differ across the RGB channels. Filter images
//! go to the directory given as the first argument (default `filters`).

use std::path::PathBuf;

use shapebias::models::{build_cnn, train, CnnSpec, TrainConfig};
use shapebias::numerics::Rng;
use shapebias::probes::{cross_channel_difference, export_filters, write_filter_images};
use shapebias::stimuli::{gen_image_dataset, Attribute, DatasetConfig, ImageConfig};

fn main() -> shapebias::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "filters".into()));
    for label in [Attribute::Shape, Attribute::Color] {
        let cfg = DatasetConfig::new(6, 4).with_label(label).with_holdout(20);
        let set = gen_image_dataset(&cfg, &ImageConfig::at(48), &mut Rng::seed_from(5))?;
        let mut model = build_cnn(&CnnSpec::new(6, 48), &mut Rng::seed_from(6))?;
        train(&mut model, &set, &TrainConfig::cnn(6).with_epochs(150))?;
        println!("{label}-trained: cross-channel difference {:.4}", cross_channel_difference(&model)?);
        write_filter_images(&dir.join(label.to_string()), &export_filters(&model)?, 12)?;
    }
    println!("filter images in {}", dir.display());
    Ok(())
}
