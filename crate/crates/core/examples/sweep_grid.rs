//! A small MLP sweep over N and K: prints the grid of order-2 accuracies,
//! the bias onset frontier and the two-phase check, and writes heatmaps.
//!
//! cargo run --release --example sweep_grid -- [seeds] [out_dir]

use std::path::PathBuf;

use shapebias::experiments::{
    detect_bias_onset, run_sweep, two_phase_check, ModelKind, RunSettings, SweepConfig,
};
use shapebias::plot::heatmap_svg;
use shapebias::stimuli::export::write_text;
use shapebias::stimuli::TestOrder;

fn main() -> shapebias::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seeds = args.first().and_then(|a| a.parse().ok()).unwrap_or(3);
    let out = PathBuf::from(args.get(1).cloned().unwrap_or_else(|| "sweep_example".into()));

    let mut settings = RunSettings::new(ModelKind::Mlp);
    settings.trial_count = 500;
    let mut config = SweepConfig::new(settings, vec![2, 4, 8], vec![1, 3, 6]);
    config.seeds = seeds;
    config.master_seed = 11;
    let grid = run_sweep(&config)?;

    print!("{:>6}", "N\\K");
    for k in &grid.k_values {
        print!("{k:>8}");
    }
    println!();
    for &n in &grid.n_values {
        print!("{n:>6}");
        for &k in &grid.k_values {
            match grid.cell(n, k).and_then(|c| c.order_mean(TestOrder::Second)) {
                Some(v) => print!("{v:>8.3}"),
                None => print!("{:>8}", "-"),
            }
        }
        println!();
    }
    println!("onset at 0.7: {:?}", detect_bias_onset(&grid, 0.7));
    let phase = two_phase_check(&grid, 0.05);
    println!("two-phase conforming: {:.0}%", 100.0 * phase.conforming_fraction());

    std::fs::create_dir_all(&out).ok();
    for order in [TestOrder::First, TestOrder::Second] {
        let svg = heatmap_svg(&grid, order, &format!("order-{} accuracy", order.number()));
        write_text(&out.join(format!("heatmap_order{}.svg", order.number())), &svg)?;
    }
    Ok(())
}
