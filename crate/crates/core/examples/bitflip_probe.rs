//! Bit-flip sensitivity of a trained MLP: how fast the hidden representation
//! of a training object drifts as shape bits or color bits are flipped.
//!
//! cargo run --release --example bitflip_probe -- [N] [K] [repeats] [out.svg]

use shapebias::models::{build_mlp, train, MlpSpec, TrainConfig};
use shapebias::numerics::Rng;
use shapebias::plot::{line_chart_svg, Series};
use shapebias::probes::bitflip_sensitivity;
use shapebias::stimuli::export::write_text;
use shapebias::stimuli::{gen_bit_dataset, Attribute, DatasetConfig};

fn main() -> shapebias::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let num = |i: usize, d: usize| args.get(i).and_then(|a| a.parse().ok()).unwrap_or(d);
    let (n, k, repeats) = (num(0, 4), num(1, 3), num(2, 20));

    let set = gen_bit_dataset(&DatasetConfig::new(n, k), &mut Rng::seed_from(1))?;
    let mut model = build_mlp(&MlpSpec::new(n), &mut Rng::seed_from(2))?;
    let out = train(&mut model, &set, &TrainConfig::mlp(2))?;
    println!("trained {n}x{k}: best epoch {} loss {:.4}", out.checkpoint.best_epoch, out.checkpoint.best_train_loss);

    let mut rng = Rng::seed_from(3);
    let mut series = Vec::new();
    for attr in [Attribute::Shape, Attribute::Color, Attribute::Texture] {
        let mut sums = [0.0; 21];
        for i in 0..set.len() {
            let curve = bitflip_sensitivity(&model, &set.bit_object(i), attr, 20, repeats, &mut rng)?;
            for (s, p) in sums.iter_mut().zip(&curve.points) {
                *s += p.mean / set.len() as f64;
            }
        }
        let line: Vec<String> = sums.iter().step_by(4).map(|v| format!("{v:.3}")).collect();
        println!("{attr:<8} flips 0,4,..,20: {}", line.join(" "));
        series.push(Series {
            label: attr.to_string(),
            points: sums.iter().enumerate().map(|(f, v)| (f as f64, *v)).collect(),
        });
    }
    if let Some(path) = args.get(3) {
        let svg = line_chart_svg(&series, "bit-flip sensitivity", "bits flipped", "cosine similarity");
        write_text(path.as_ref(), &svg)?;
    }
    Ok(())
}
