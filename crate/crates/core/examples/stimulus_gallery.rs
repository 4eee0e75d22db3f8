//! Renders an image stimulus set and a few generalization trials to PPM
//! files for inspection.
//!
//! cargo run --release --example stimulus_gallery -- [out_dir] [resolution]

use std::path::PathBuf;

use shapebias::numerics::Rng;
use shapebias::stimuli::export::{encode_ppm, manifest_csv, write_bytes, write_text};
use shapebias::stimuli::{build_trials, gen_image_dataset, DatasetConfig, ImageConfig, TestOrder};

fn main() -> shapebias::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = PathBuf::from(args.first().cloned().unwrap_or_else(|| "gallery".into()));
    let res = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(64);

    let set = gen_image_dataset(
        &DatasetConfig::new(4, 3).with_holdout(20),
        &ImageConfig::at(res),
        &mut Rng::seed_from(3),
    )?;
    for i in 0..set.len() {
        write_bytes(&out.join(format!("train{i:02}.ppm")), &encode_ppm(&set.image_object(i)?.pixels)?)?;
    }
    write_text(&out.join("manifest.csv"), &manifest_csv(&set))?;

    let trials = build_trials(&set, TestOrder::Second, 3, &mut Rng::seed_from(4))?;
    for (t, trial) in trials.iter().enumerate() {
        let exemplar = set.universe.render(&trial.exemplar, 0)?;
        write_bytes(&out.join(format!("trial{t}_exemplar.ppm")), &encode_ppm(&exemplar.pixels)?)?;
        for (c, cand) in trial.candidates().iter().enumerate() {
            let img = set.universe.render(cand, 0)?;
            let name = ["shape", "color", "texture"][c];
            write_bytes(&out.join(format!("trial{t}_{name}_match.ppm")), &encode_ppm(&img.pixels)?)?;
        }
    }
    println!("{} training images and {} trials written to {}", set.len(), trials.len(), out.display());
    Ok(())
}
