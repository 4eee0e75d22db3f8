//! Vocabulary acceleration: count-noun growth against shape-choice growth
//! over the first training sessions of multi-head networks.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean, pearson_p, pearson_r};
use crate::error::{Error, Result};
use crate::models::{build_cnn, train_multihead, CnnSpec, TrainConfig, MULTIHEAD_WEIGHTS};
use crate::numerics::rng::derive_seed;
use crate::numerics::{RmsPropConfig, Rng};
use crate::probes::run_generalization_test;
use crate::stimuli::{
    build_trials, gen_multilabel_image_dataset, Attribute, ImageConfig, TestOrder,
};

/// Reference correlations reported for children; documentation only.
pub const CHILD_METRIC1_R: f64 = 0.75;
pub const CHILD_METRIC2_R: f64 = 0.81;
/// RMSProp step for the 30-epoch vocabulary runs.
pub const VOCAB_LEARNING_RATE: f64 = 3e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VocabConfig {
    pub networks: usize,
    /// Shape, color and texture category counts.
    pub counts: [usize; 3],
    pub examples_per_shape: usize,
    pub holdout: usize,
    pub resolution: usize,
    pub sessions: usize,
    pub session_every: usize,
    pub trials_per_session: usize,
    /// Per-class training accuracy at which a shape counts as a known noun.
    pub noun_threshold: f64,
    pub loss_weights: [f64; 3],
    pub l2_coefficient: f64,
    pub optimizer: RmsPropConfig,
    /// Reuse one trial set for every session instead of drawing afresh.
    pub fixed_trials: bool,
    pub master_seed: u64,
    /// Worker threads; 0 means available parallelism.
    pub workers: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            networks: 20,
            counts: [36, 12, 12],
            examples_per_shape: 10,
            holdout: 20,
            resolution: 64,
            sessions: 10,
            session_every: 3,
            trials_per_session: 500,
            noun_threshold: 0.8,
            loss_weights: MULTIHEAD_WEIGHTS,
            l2_coefficient: crate::models::DEFAULT_L2,
            optimizer: RmsPropConfig {
                learning_rate: VOCAB_LEARNING_RATE,
                ..RmsPropConfig::default()
            },
            fixed_trials: false,
            master_seed: 0,
            workers: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    /// 1-based session number.
    pub session: usize,
    pub epoch: usize,
    /// Shapes that have reached the noun threshold at any session so far.
    pub cum_count_nouns: usize,
    pub shape_choices: usize,
    pub cum_shape_choices: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VocabRecord {
    pub network: usize,
    pub sessions: Vec<Session>,
}

impl VocabRecord {
    /// Per-session gains of the two cumulative series, counted from zero.
    pub fn increments(&self) -> (Vec<f64>, Vec<f64>) {
        let mut nouns = Vec::with_capacity(self.sessions.len());
        let mut shapes = Vec::with_capacity(self.sessions.len());
        let (mut pn, mut ps) = (0, 0);
        for s in &self.sessions {
            nouns.push((s.cum_count_nouns - pn) as f64);
            shapes.push((s.cum_shape_choices - ps) as f64);
            pn = s.cum_count_nouns;
            ps = s.cum_shape_choices;
        }
        (nouns, shapes)
    }

    pub fn cumulative(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.sessions
                .iter()
                .map(|s| s.cum_count_nouns as f64)
                .collect(),
            self.sessions
                .iter()
                .map(|s| s.cum_shape_choices as f64)
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkFailure {
    pub network: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VocabOutcome {
    pub records: Vec<VocabRecord>,
    pub failures: Vec<NetworkFailure>,
}

/// Trains one network and records every session.
pub fn run_vocab_network(config: &VocabConfig, network: usize) -> Result<VocabRecord> {
    let seed = derive_seed(config.master_seed, "vocab-network", &[network as u64]);
    let image = ImageConfig::at(config.resolution);
    let set = gen_multilabel_image_dataset(
        config.counts,
        config.examples_per_shape,
        config.holdout,
        &image,
        &mut Rng::stream(seed, "data", &[]),
    )?;
    let mut spec = CnnSpec::multi_head(config.counts, config.loss_weights, config.resolution);
    spec.l2_coefficient = config.l2_coefficient;
    let mut model = build_cnn(&spec, &mut Rng::stream(seed, "init", &[]))?;
    let epochs = config.sessions * config.session_every;
    let mut tc = TrainConfig::cnn(seed)
        .with_epochs(epochs)
        .with_accuracy_every(config.session_every);
    tc.optimizer = config.optimizer;

    let fixed = if config.fixed_trials {
        Some(build_trials(
            &set,
            TestOrder::Second,
            config.trials_per_session,
            &mut Rng::stream(seed, "session-trials", &[0]),
        )?)
    } else {
        None
    };
    let mut known = BTreeSet::new();
    let mut cum_shapes = 0;
    let mut sessions = Vec::with_capacity(config.sessions);
    let mut observer =
        |rec: &crate::models::EpochRecord, current: &crate::models::Model| -> Result<()> {
            if !rec.epoch.is_multiple_of(config.session_every) {
                return Ok(());
            }
            let s = rec.epoch / config.session_every;
            let acc = rec
                .class_accuracy
                .as_ref()
                .ok_or_else(|| Error::State("session epoch without class accuracy".into()))?;
            known.extend(
                acc.iter()
                    .enumerate()
                    .filter(|(_, &a)| a >= config.noun_threshold)
                    .map(|(c, _)| c),
            );
            let fresh;
            let trials = match &fixed {
                Some(t) => t,
                None => {
                    fresh = build_trials(
                        &set,
                        TestOrder::Second,
                        config.trials_per_session,
                        &mut Rng::stream(seed, "session-trials", &[s as u64]),
                    )?;
                    &fresh
                }
            };
            let tie = derive_seed(seed, "session-ties", &[s as u64]);
            let (report, _) =
                run_generalization_test(current, &set.universe, trials, Attribute::Shape, tie)?;
            let choices = report.counts[0];
            cum_shapes += choices;
            sessions.push(Session {
                session: s,
                epoch: rec.epoch,
                cum_count_nouns: known.len(),
                shape_choices: choices,
                cum_shape_choices: cum_shapes,
            });
            Ok(())
        };
    train_multihead(&mut model, &set, &tc, &config.loss_weights, &mut observer)?;
    Ok(VocabRecord { network, sessions })
}

/// Runs every network on a bounded pool. Networks that fail are reported
/// and left out of the records.
pub fn run_vocab_accel(config: &VocabConfig) -> Result<VocabOutcome> {
    run_vocab_accel_with(config, &|_| {})
}

pub fn run_vocab_accel_with(
    config: &VocabConfig,
    progress: &(dyn Fn(&VocabRecord) + Sync),
) -> Result<VocabOutcome> {
    if config.networks == 0 || config.sessions == 0 || config.session_every == 0 {
        return Err(Error::config(
            "vocabulary study needs networks, sessions and a session spacing",
        ));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::config(format!("worker pool: {e}")))?;
    let results: Vec<Result<VocabRecord>> = pool.install(|| {
        (0..config.networks)
            .into_par_iter()
            .map(|net| {
                let r = run_vocab_network(config, net);
                if let Ok(rec) = &r {
                    progress(rec);
                }
                r
            })
            .collect()
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (network, r) in results.into_iter().enumerate() {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(NetworkFailure {
                network,
                message: e.to_string(),
            }),
        }
    }
    Ok(VocabOutcome { records, failures })
}

/// How session series enter the correlations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesMode {
    #[default]
    Increments,
    /// Raw cumulative values, for comparison only: co-monotone series inflate r.
    Cumulative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkCorrelation {
    pub network: usize,
    pub r: f64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric1 {
    pub per_network: Vec<NetworkCorrelation>,
    pub mean_r: f64,
    /// Networks left out, with the reason.
    pub excluded: Vec<(usize, String)>,
}

impl Metric1 {
    pub fn significant_fraction(&self, alpha: f64) -> f64 {
        if self.per_network.is_empty() {
            return 0.0;
        }
        self.per_network.iter().filter(|c| c.p < alpha).count() as f64
            / self.per_network.len() as f64
    }
}

/// Within-network correlation of count-noun and shape-choice growth across
/// sessions.
pub fn metric1_within(records: &[VocabRecord], mode: SeriesMode) -> Result<Metric1> {
    let mut per_network = Vec::new();
    let mut excluded = Vec::new();
    for rec in records {
        if rec.sessions.len() < 3 {
            return Err(Error::arg(format!(
                "network {} has fewer than 3 sessions",
                rec.network
            )));
        }
        let (x, y) = match mode {
            SeriesMode::Increments => rec.increments(),
            SeriesMode::Cumulative => rec.cumulative(),
        };
        match pearson_r(&x, &y) {
            Ok(r) => per_network.push(NetworkCorrelation {
                network: rec.network,
                r,
                p: pearson_p(r, x.len())?,
            }),
            Err(Error::UndefinedCorrelation(msg)) => excluded.push((rec.network, msg)),
            Err(e) => return Err(e),
        }
    }
    let rs: Vec<f64> = per_network.iter().map(|c| c.r).collect();
    Ok(Metric1 {
        mean_r: mean(&rs),
        per_network,
        excluded,
    })
}

/// Across-network correlation of the mean per-session gain of each series.
pub fn metric2_across(records: &[VocabRecord]) -> Result<(f64, f64)> {
    if records.len() < 3 {
        return Err(Error::arg(format!(
            "metric 2 needs >= 3 networks, got {}",
            records.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = records
        .iter()
        .map(|r| {
            let (a, b) = r.increments();
            (mean(&a), mean(&b))
        })
        .unzip();
    let r = pearson_r(&x, &y)?;
    Ok((r, pearson_p(r, x.len())?))
}

pub const VOCAB_HEADER: &str = "network,session,epoch,cum_count_nouns,cum_shape_choices";

pub fn vocab_csv(records: &[VocabRecord]) -> String {
    let mut out = format!("{VOCAB_HEADER}\n");
    for r in records {
        for s in &r.sessions {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.network, s.session, s.epoch, s.cum_count_nouns, s.cum_shape_choices
            ));
        }
    }
    out
}

/// `metric,network,r,p` rows: one per network for metric 1, then the mean
/// and the across-network metric 2.
pub fn correlation_csv(m1: &Metric1, m2: Option<(f64, f64)>) -> String {
    let mut out = String::from("metric,network,r,p\n");
    for c in &m1.per_network {
        out.push_str(&format!("metric1,{},{},{}\n", c.network, c.r, c.p));
    }
    out.push_str(&format!("metric1_mean,,{},\n", m1.mean_r));
    if let Some((r, p)) = m2 {
        out.push_str(&format!("metric2,,{r},{p}\n"));
    }
    out
}

pub fn correlation_summary(m1: &Metric1, m2: Option<(f64, f64)>) -> String {
    let mut s = format!(
        "metric 1 (within network, {} networks): mean r = {:.3}, {} of {} with p < 0.05\n",
        m1.per_network.len(),
        m1.mean_r,
        m1.per_network.iter().filter(|c| c.p < 0.05).count(),
        m1.per_network.len()
    );
    for (net, why) in &m1.excluded {
        s.push_str(&format!("  network {net} excluded: {why}\n"));
    }
    match m2 {
        Some((r, p)) => s.push_str(&format!(
            "metric 2 (across networks): r = {r:.3}, p = {p:.3e}\n"
        )),
        None => s.push_str("metric 2 (across networks): undefined\n"),
    }
    s.push_str(&format!(
        "children, for reference: r = {CHILD_METRIC1_R} and r = {CHILD_METRIC2_R}\n"
    ));
    s
}
