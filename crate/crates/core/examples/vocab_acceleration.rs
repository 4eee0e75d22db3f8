//! Multi-head networks learning 36 shape names alongside color and texture
//! names; tracks count nouns against shape choices across sessions.
//!
//! cargo run --release --example vocab_acceleration -- <networks> [learning rate]

use std::time::Instant;

use shapebias::experiments::{
    correlation_summary, metric1_within, metric2_across, run_vocab_accel_with, SeriesMode,
    VocabConfig,
};

fn main() -> shapebias::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let networks = args.first().and_then(|a| a.parse().ok()).unwrap_or(4);
    let mut config = VocabConfig {
        networks,
        ..VocabConfig::default()
    };
    if let Some(lr) = args.get(1).and_then(|a| a.parse().ok()) {
        config.optimizer.learning_rate = lr;
    }
    let start = Instant::now();
    let outcome = run_vocab_accel_with(&config, &|rec| {
        let line: Vec<String> = rec
            .sessions
            .iter()
            .map(|s| format!("{}/{}", s.cum_count_nouns, s.shape_choices))
            .collect();
        println!("network {:2}: {}", rec.network, line.join(" "));
    })?;
    println!(
        "{} networks in {:.0}s",
        outcome.records.len(),
        start.elapsed().as_secs_f64()
    );
    let m1 = metric1_within(&outcome.records, SeriesMode::Increments)?;
    let m2 = metric2_across(&outcome.records).ok();
    print!("{}", correlation_summary(&m1, m2));
    Ok(())
}
