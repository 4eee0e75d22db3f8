//! Command-line front end.
//!
//! Every command reads an optional TOML run configuration, applies flag
//! overrides, writes the merged configuration to `<out>/config.toml` and
//! then its own artifacts next to it.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    correlation_csv, correlation_summary, detect_bias_onset, grid_summary_csv, metric1_within,
    metric2_across, run_sweep_with, run_vocab_accel_with, score, sweep_csv, two_phase_check,
    vocab_csv, ModelKind, RunSettings, SeriesMode, Session, SweepConfig, SweepGrid, VocabConfig,
    VocabRecord,
};
use crate::models::{train_observed, Checkpoint, EpochRecord, Model};
use crate::numerics::{RmsPropConfig, Rng};
use crate::plot::{heatmap_svg, line_chart_svg, Series};
use crate::probes::{
    bitflip_sensitivity, color_step_sensitivity, curve_csv, export_filters,
    shape_morph_sensitivity, write_filter_images, Curve, TestReport,
};
use crate::stimuli::export::{
    bit_patterns_csv, encode_pgm, encode_ppm, manifest_csv, write_bytes, write_text,
};
use crate::stimuli::{
    gen_bit_dataset, gen_image_dataset, Attribute, ImageUniverse, StimulusSet, TestOrder,
    TextureSource,
};

#[derive(Debug, Parser)]
#[command(
    name = "shapebias",
    version,
    about = "Shape-bias experiments on synthetic objects"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelArg {
    Shape,
    Color,
}

impl From<LabelArg> for Attribute {
    fn from(l: LabelArg) -> Self {
        match l {
            LabelArg::Shape => Attribute::Shape,
            LabelArg::Color => Attribute::Color,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for data, initialization and trials.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Image extent in pixels.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub label_attribute: Option<LabelArg>,
    /// Restrict tests to one generalization order.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub order: Option<u8>,
    /// Accuracy threshold for bias onset.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a stimulus set and write its manifest (and images).
    GenData,
    /// Train one network and score it.
    Train,
    /// Score a saved checkpoint.
    Eval {
        /// Defaults to `<out>/checkpoint.bin`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// N x K grid sweep.
    Sweep,
    /// Vocabulary-acceleration study.
    VocabAccel,
    /// Sensitivity curves or filter images.
    Probe {
        #[arg(long, value_enum, default_value = "bitflip")]
        kind: ProbeKind,
        /// Probe a saved checkpoint instead of training one.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Rebuild summaries and plots from result CSVs in `--out`.
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Bitflip,
    Morph,
    Color,
    Filters,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    pub data: DataSection,
    pub train: TrainSection,
    pub test: TestSection,
    pub sweep: SweepSection,
    pub vocab: VocabSection,
    pub probe: ProbeSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataSection {
    pub model: ModelKind,
    pub n: usize,
    pub k: usize,
    pub resolution: usize,
    pub label_attribute: Attribute,
    pub allow_repeats: bool,
    /// Kind default (100 bit patterns, 20 image values) when absent.
    pub holdout: Option<usize>,
    /// Grayscale PGM textures; procedural textures when empty.
    pub texture_files: Vec<PathBuf>,
    /// gen-data only: also write PPM/PGM files for image sets.
    pub write_images: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    /// Kind default (200 MLP, 400 CNN) when absent.
    pub epochs: Option<usize>,
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    pub l2: f64,
    pub accuracy_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestSection {
    pub orders: Vec<u8>,
    pub trials: usize,
    pub threshold: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub n_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub seeds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VocabSection {
    pub networks: usize,
    pub sessions: usize,
    pub session_every: usize,
    pub trials_per_session: usize,
    pub noun_threshold: f64,
    pub fixed_trials: bool,
    pub series: SeriesMode,
    pub learning_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeSection {
    pub repeats: usize,
    pub max_flips: usize,
    pub candidates: usize,
    pub color_steps: usize,
    /// Item of the training set used as the probe exemplar.
    pub exemplar: usize,
    /// Pixel scale of exported filter images.
    pub filter_scale: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("results"),
            workers: 0,
            data: DataSection::default(),
            train: TrainSection::default(),
            test: TestSection::default(),
            sweep: SweepSection::default(),
            vocab: VocabSection::default(),
            probe: ProbeSection::default(),
        }
    }
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            model: ModelKind::Mlp,
            n: 4,
            k: 3,
            resolution: 64,
            label_attribute: Attribute::Shape,
            allow_repeats: false,
            holdout: None,
            texture_files: Vec::new(),
            write_images: true,
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        let o = RmsPropConfig::default();
        Self {
            epochs: None,
            learning_rate: o.learning_rate,
            decay: o.decay,
            epsilon: o.epsilon,
            l2: crate::models::DEFAULT_L2,
            accuracy_every: 1,
        }
    }
}

impl Default for TestSection {
    fn default() -> Self {
        Self {
            orders: vec![1, 2],
            trials: 1000,
            threshold: crate::experiments::DEFAULT_THRESHOLD,
            margin: crate::experiments::DEFAULT_MARGIN,
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            n_values: vec![2, 4, 8, 16],
            k_values: vec![1, 3, 6],
            seeds: 10,
        }
    }
}

impl Default for VocabSection {
    fn default() -> Self {
        let v = VocabConfig::default();
        Self {
            networks: v.networks,
            sessions: v.sessions,
            session_every: v.session_every,
            trials_per_session: v.trials_per_session,
            noun_threshold: v.noun_threshold,
            fixed_trials: v.fixed_trials,
            series: SeriesMode::Increments,
            learning_rate: v.optimizer.learning_rate,
        }
    }
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self {
            repeats: 20,
            max_flips: 20,
            candidates: 50,
            color_steps: 50,
            exemplar: 0,
            filter_scale: 12,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format(path.display().to_string(), e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::format("config", e.to_string()))
    }

    /// File values, then flag overrides.
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        if let Some(o) = &args.out {
            cfg.out = o.clone();
        }
        if let Some(w) = args.workers {
            cfg.workers = w;
        }
        if let Some(r) = args.resolution {
            cfg.data.resolution = r;
        }
        if let Some(l) = args.label_attribute {
            cfg.data.label_attribute = l.into();
        }
        if let Some(o) = args.order {
            cfg.test.orders = vec![o];
        }
        if let Some(t) = args.threshold {
            cfg.test.threshold = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.test.orders.is_empty() || self.test.orders.iter().any(|o| !(1..=2).contains(o)) {
            return Err(Error::config(format!(
                "test orders {:?} must be 1 and/or 2",
                self.test.orders
            )));
        }
        if self.data.label_attribute == Attribute::Texture {
            return Err(Error::config("label attribute must be shape or color"));
        }
        if !(0.0..=1.0).contains(&self.test.threshold) {
            return Err(Error::config(format!(
                "threshold {} outside [0, 1]",
                self.test.threshold
            )));
        }
        Ok(())
    }

    pub fn optimizer(&self) -> RmsPropConfig {
        RmsPropConfig {
            learning_rate: self.train.learning_rate,
            decay: self.train.decay,
            epsilon: self.train.epsilon,
        }
    }

    pub fn settings(&self) -> RunSettings {
        let mut s = RunSettings::new(self.data.model);
        s.label_attribute = self.data.label_attribute;
        s.trial_count = self.test.trials;
        s.resolution = self.data.resolution;
        s.holdout = self.data.holdout;
        s.allow_repeats = self.data.allow_repeats;
        s.epochs = self.train.epochs;
        s.l2_coefficient = self.train.l2;
        s.optimizer = self.optimizer();
        s.accuracy_every = self.train.accuracy_every;
        s.textures = if self.data.texture_files.is_empty() {
            TextureSource::Procedural
        } else {
            TextureSource::Files(self.data.texture_files.clone())
        };
        s
    }

    fn orders(&self) -> Vec<TestOrder> {
        self.test
            .orders
            .iter()
            .map(|&o| TestOrder::from_number(o))
            .collect::<Result<_>>()
            .expect("validated orders")
    }
}

/// Stimulus set of either form.
pub enum AnySet {
    Bits(StimulusSet<crate::stimuli::BitUniverse>),
    Images(StimulusSet<ImageUniverse>),
}

impl AnySet {
    pub fn generate(cfg: &RunConfig) -> Result<Self> {
        let s = cfg.settings();
        let data = s.dataset(cfg.data.n, cfg.data.k);
        let mut rng = Rng::stream(cfg.seed, "data", &[]);
        Ok(match cfg.data.model {
            ModelKind::Mlp => AnySet::Bits(gen_bit_dataset(&data, &mut rng)?),
            ModelKind::Cnn => {
                AnySet::Images(gen_image_dataset(&data, &s.image_config(), &mut rng)?)
            }
        })
    }

    fn len(&self) -> usize {
        match self {
            AnySet::Bits(s) => s.len(),
            AnySet::Images(s) => s.len(),
        }
    }
}

fn echo_config(cfg: &RunConfig) -> Result<()> {
    write_text(&cfg.out.join("config.toml"), &cfg.to_toml()?)
}

pub fn report_csv(reports: &[(TestOrder, TestReport)]) -> String {
    let mut out =
        String::from("order,trials,target,accuracy,shape_share,color_share,texture_share\n");
    for (o, r) in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            o.number(),
            r.trial_count,
            r.target,
            r.accuracy(),
            r.shares[0],
            r.shares[1],
            r.shares[2]
        ));
    }
    out
}

pub fn trace_csv(trace: &[EpochRecord]) -> String {
    let heads = trace.first().map_or(0, |r| r.head_losses.len());
    let mut out = String::from("epoch,loss,penalty");
    for h in 0..heads {
        out.push_str(&format!(",head{h}_loss"));
    }
    out.push_str(",mean_class_accuracy\n");
    for r in trace {
        out.push_str(&format!("{},{},{}", r.epoch, r.loss, r.penalty));
        for l in &r.head_losses {
            out.push_str(&format!(",{l}"));
        }
        match &r.class_accuracy {
            Some(a) => out.push_str(&format!(
                ",{}\n",
                a.iter().sum::<f64>() / a.len().max(1) as f64
            )),
            None => out.push_str(",\n"),
        }
    }
    out
}

fn evaluate(cfg: &RunConfig, model: &Model, set: &AnySet) -> Result<Vec<(TestOrder, TestReport)>> {
    let settings = cfg.settings();
    let both = match set {
        AnySet::Bits(s) => score(model, s, &settings, cfg.seed)?,
        AnySet::Images(s) => score(model, s, &settings, cfg.seed)?,
    };
    Ok(cfg
        .orders()
        .into_iter()
        .map(|o| (o, both[usize::from(o.number() - 1)]))
        .collect())
}

fn print_reports(reports: &[(TestOrder, TestReport)]) {
    for (o, r) in reports {
        println!(
            "order {}: {} accuracy {:.3} (shape {:.3}, color {:.3}, texture {:.3}; {} trials)",
            o.number(),
            r.target,
            r.accuracy(),
            r.shares[0],
            r.shares[1],
            r.shares[2],
            r.trial_count
        );
    }
}

pub fn cmd_gen_data(cfg: &RunConfig) -> Result<()> {
    echo_config(cfg)?;
    let set = AnySet::generate(cfg)?;
    match &set {
        AnySet::Bits(s) => {
            write_text(&cfg.out.join("manifest.csv"), &manifest_csv(s))?;
            write_text(
                &cfg.out.join("patterns.csv"),
                &bit_patterns_csv(&s.universe, s.train_counts),
            )?;
        }
        AnySet::Images(s) => {
            write_text(&cfg.out.join("manifest.csv"), &manifest_csv(s))?;
            if cfg.data.write_images {
                let res = s.universe.resolution;
                for i in 0..s.len() {
                    let obj = s.image_object(i)?;
                    write_bytes(
                        &cfg.out.join(format!("images/item{i:04}.ppm")),
                        &encode_ppm(&obj.pixels)?,
                    )?;
                    let texture = &obj.pixels.data()[3 * res * res..];
                    write_bytes(
                        &cfg.out.join(format!("images/item{i:04}_texture.pgm")),
                        &encode_pgm(texture, res, res)?,
                    )?;
                }
            }
        }
    }
    println!(
        "{} set: N={} K={} ({} items), label {}, seed {} -> {}",
        cfg.data.model,
        cfg.data.n,
        cfg.data.k,
        set.len(),
        cfg.data.label_attribute,
        cfg.seed,
        cfg.out.display()
    );
    Ok(())
}

/// Trains per the configuration; returns the checkpoint and the data it was
/// trained on.
pub fn train_from_config(cfg: &RunConfig) -> Result<(Checkpoint, AnySet, Vec<EpochRecord>)> {
    let settings = cfg.settings();
    let set = AnySet::generate(cfg)?;
    let mut model = settings.build_model(cfg.data.n, &mut Rng::stream(cfg.seed, "init", &[]))?;
    let tc = settings.train_config(cfg.seed);
    let seen = Mutex::new(Vec::new());
    let mut observer = |r: &EpochRecord, _: &Model| -> Result<()> {
        seen.lock().expect("trace lock").push(r.clone());
        Ok(())
    };
    let result = match &set {
        AnySet::Bits(s) => train_observed(&mut model, s, &tc, &mut observer),
        AnySet::Images(s) => train_observed(&mut model, s, &tc, &mut observer),
    };
    let trace = seen.into_inner().expect("trace lock");
    match result {
        Ok(out) => Ok((out.checkpoint, set, trace)),
        Err(e) => {
            write_text(&cfg.out.join("trace.csv"), &trace_csv(&trace))?;
            Err(e)
        }
    }
}

pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    echo_config(cfg)?;
    let (ckpt, set, trace) = train_from_config(cfg)?;
    ckpt.save(&cfg.out.join("checkpoint.bin"))?;
    write_text(&cfg.out.join("trace.csv"), &trace_csv(&trace))?;
    let reports = evaluate(cfg, &ckpt.model, &set)?;
    write_text(&cfg.out.join("report.csv"), &report_csv(&reports))?;
    println!(
        "trained {} on {} items: best epoch {} (loss {:.5})",
        cfg.data.model,
        set.len(),
        ckpt.best_epoch,
        ckpt.best_train_loss
    );
    print_reports(&reports);
    Ok(())
}

pub fn cmd_eval(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<()> {
    let path = checkpoint.map_or_else(|| cfg.out.join("checkpoint.bin"), Path::to_path_buf);
    let ckpt = Checkpoint::load(&path)?;
    if ckpt.seed != cfg.seed {
        return Err(Error::config(format!(
            "checkpoint was trained with seed {}, configuration has seed {}",
            ckpt.seed, cfg.seed
        )));
    }
    let set = AnySet::generate(cfg)?;
    let reports = evaluate(cfg, &ckpt.model, &set)?;
    write_text(&cfg.out.join("eval.csv"), &report_csv(&reports))?;
    print_reports(&reports);
    Ok(())
}

fn write_sweep_outputs(out: &Path, grid: &SweepGrid, threshold: f64, margin: f64) -> Result<()> {
    write_text(&out.join("grid.csv"), &grid_summary_csv(grid))?;
    let onset = detect_bias_onset(grid, threshold);
    let phase = two_phase_check(grid, margin);
    let mut summary = format!(
        "{} sweep, label {}: onset cells at order-2 >= {threshold}: {:?}\n",
        grid.kind, grid.label_attribute, onset
    );
    summary.push_str(&format!(
        "two-phase: {:.1}% of {} cells conform (margin {margin}); violations {:?}\n",
        100.0 * phase.conforming_fraction(),
        phase.checked,
        phase.violations
    ));
    for f in &grid.failures {
        summary.push_str(&format!(
            "failed job N={} K={} seed={}: {}\n",
            f.n, f.k, f.seed, f.message
        ));
    }
    write_text(&out.join("summary.txt"), &summary)?;
    print!("{summary}");
    for order in [TestOrder::First, TestOrder::Second] {
        let title = format!(
            "{} {}-labels, order-{} {} accuracy",
            grid.kind,
            grid.label_attribute,
            order.number(),
            grid.label_attribute
        );
        write_text(
            &out.join(format!("heatmap_order{}.svg", order.number())),
            &heatmap_svg(grid, order, &title),
        )?;
    }
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    echo_config(cfg)?;
    let mut sc = SweepConfig::new(
        cfg.settings(),
        cfg.sweep.n_values.clone(),
        cfg.sweep.k_values.clone(),
    );
    sc.seeds = cfg.sweep.seeds;
    sc.master_seed = cfg.seed;
    sc.workers = cfg.workers;
    sc.keep_going = true;
    let grid = run_sweep_with(&sc, &|r| {
        println!(
            "N={} K={} seed={}: order-1 {:.3} order-2 {:.3}",
            r.n,
            r.k,
            r.seed,
            r.reports[0].accuracy(),
            r.reports[1].accuracy()
        );
    })?;
    write_text(&cfg.out.join("sweep.csv"), &sweep_csv(&grid))?;
    write_sweep_outputs(&cfg.out, &grid, cfg.test.threshold, cfg.test.margin)
}

fn vocab_config(cfg: &RunConfig) -> VocabConfig {
    VocabConfig {
        networks: cfg.vocab.networks,
        resolution: cfg.data.resolution,
        sessions: cfg.vocab.sessions,
        session_every: cfg.vocab.session_every,
        trials_per_session: cfg.vocab.trials_per_session,
        noun_threshold: cfg.vocab.noun_threshold,
        fixed_trials: cfg.vocab.fixed_trials,
        l2_coefficient: cfg.train.l2,
        optimizer: RmsPropConfig {
            learning_rate: cfg.vocab.learning_rate,
            ..cfg.optimizer()
        },
        master_seed: cfg.seed,
        workers: cfg.workers,
        ..VocabConfig::default()
    }
}

fn write_vocab_outputs(out: &Path, records: &[VocabRecord], mode: SeriesMode) -> Result<()> {
    write_text(&out.join("vocab.csv"), &vocab_csv(records))?;
    let m1 = metric1_within(records, mode)?;
    let m2 = metric2_across(records).ok();
    write_text(&out.join("correlations.csv"), &correlation_csv(&m1, m2))?;
    let summary = correlation_summary(&m1, m2);
    write_text(&out.join("summary.txt"), &summary)?;
    print!("{summary}");
    let mean_series = |f: fn(&Session) -> usize| -> Vec<(f64, f64)> {
        let sessions = records.iter().map(|r| r.sessions.len()).min().unwrap_or(0);
        (0..sessions)
            .map(|i| {
                let m = records
                    .iter()
                    .map(|r| f(&r.sessions[i]) as f64)
                    .sum::<f64>()
                    / records.len() as f64;
                (records[0].sessions[i].session as f64, m)
            })
            .collect()
    };
    let nouns = Series {
        label: "count nouns".into(),
        points: mean_series(|s| s.cum_count_nouns),
    };
    let shapes = Series {
        label: "shape choices".into(),
        points: mean_series(|s| s.cum_shape_choices),
    };
    write_text(
        &out.join("count_nouns.svg"),
        &line_chart_svg(
            &[nouns],
            "Mean cumulative count nouns",
            "session",
            "count nouns",
        ),
    )?;
    write_text(
        &out.join("shape_choices.svg"),
        &line_chart_svg(
            &[shapes],
            "Mean cumulative shape choices",
            "session",
            "shape choices",
        ),
    )?;
    Ok(())
}

pub fn cmd_vocab(cfg: &RunConfig) -> Result<()> {
    echo_config(cfg)?;
    let outcome = run_vocab_accel_with(&vocab_config(cfg), &|r| {
        let last = r.sessions.last();
        println!(
            "network {}: {} count nouns, {} shape choices",
            r.network,
            last.map_or(0, |s| s.cum_count_nouns),
            last.map_or(0, |s| s.cum_shape_choices)
        );
    })?;
    for f in &outcome.failures {
        println!("network {} failed: {}", f.network, f.message);
    }
    write_vocab_outputs(&cfg.out, &outcome.records, cfg.vocab.series)
}

fn probe_model(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<(Model, AnySet)> {
    match checkpoint {
        Some(p) => {
            let ckpt = Checkpoint::load(p)?;
            Ok((ckpt.model, AnySet::generate(cfg)?))
        }
        None => {
            let (ckpt, set, _) = train_from_config(cfg)?;
            ckpt.save(&cfg.out.join("checkpoint.bin"))?;
            Ok((ckpt.model, set))
        }
    }
}

fn curve_series(c: &Curve) -> Series {
    Series {
        label: c.label.clone(),
        points: c.points.iter().map(|p| (p.x, p.mean)).collect(),
    }
}

pub fn cmd_probe(cfg: &RunConfig, kind: ProbeKind, checkpoint: Option<&Path>) -> Result<()> {
    echo_config(cfg)?;
    let (model, set) = probe_model(cfg, checkpoint)?;
    let mut rng = Rng::stream(cfg.seed, "probe", &[]);
    let p = &cfg.probe;
    match (kind, &set) {
        (ProbeKind::Bitflip, AnySet::Bits(s)) => {
            let idx = p.exemplar.min(s.len() - 1);
            let obj = s.bit_object(idx);
            let curves = [Attribute::Shape, Attribute::Color, Attribute::Texture]
                .iter()
                .map(|&a| bitflip_sensitivity(&model, &obj, a, p.max_flips, p.repeats, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            write_text(&cfg.out.join("curves.csv"), &curve_csv(&curves))?;
            let series: Vec<Series> = curves.iter().map(curve_series).collect();
            write_text(
                &cfg.out.join("bitflip.svg"),
                &line_chart_svg(
                    &series,
                    "Similarity under bit flips",
                    "bits flipped",
                    "cosine similarity",
                ),
            )?;
            for c in &curves {
                println!(
                    "{}: similarity at max flips {:.3}",
                    c.label,
                    c.points.last().map_or(f64::NAN, |p| p.mean)
                );
            }
        }
        (ProbeKind::Morph | ProbeKind::Color, AnySet::Images(s)) => {
            let item = &s.items[p.exemplar.min(s.len() - 1)];
            let morph = shape_morph_sensitivity(&model, &s.universe, item, p.candidates, &mut rng)?;
            let color = color_step_sensitivity(&model, &s.universe, item, p.color_steps, &mut rng)?;
            let shape_curve = morph.curve();
            write_text(
                &cfg.out.join("curves.csv"),
                &curve_csv(&[shape_curve.clone(), color.clone()]),
            )?;
            let svg_shape = line_chart_svg(
                &[curve_series(&shape_curve)],
                "Similarity against shape distance",
                "modified Hausdorff distance",
                "cosine similarity",
            );
            let svg_color = line_chart_svg(
                &[curve_series(&color)],
                "Similarity against color distance",
                "RGB cosine distance",
                "cosine similarity",
            );
            write_text(&cfg.out.join("shape_morph.svg"), &svg_shape)?;
            write_text(&cfg.out.join("color_steps.svg"), &svg_color)?;
            println!(
                "shape: Spearman(similarity, MHD) = {:.3}, mean drop {:.3}; color: mean drop {:.3}",
                morph.spearman,
                shape_curve.mean_drop(),
                color.mean_drop()
            );
        }
        (ProbeKind::Filters, AnySet::Images(_)) => {
            let filters = export_filters(&model)?;
            write_filter_images(&cfg.out.join("filters"), &filters, p.filter_scale)?;
            let mut csv = String::from("filter,channel_difference\n");
            for (i, f) in filters.iter().enumerate() {
                csv.push_str(&format!("{i},{}\n", f.channel_difference()));
            }
            write_text(&cfg.out.join("filters.csv"), &csv)?;
            let mean =
                filters.iter().map(|f| f.channel_difference()).sum::<f64>() / filters.len() as f64;
            println!(
                "{} filters exported; mean cross-channel difference {mean:.4}",
                filters.len()
            );
        }
        (k, _) => {
            return Err(Error::config(format!(
                "probe {k:?} does not apply to a {} model",
                cfg.data.model
            )))
        }
    }
    Ok(())
}

fn read_csv(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect())
}

fn field<T: std::str::FromStr>(row: &[String], i: usize, path: &Path) -> Result<T> {
    row.get(i).and_then(|v| v.parse().ok()).ok_or_else(|| {
        Error::format(
            path.display().to_string(),
            format!("bad field {i} in row {row:?}"),
        )
    })
}

/// Rebuilds a grid from `sweep.csv` rows.
pub fn grid_from_csv(path: &Path, settings: &RunSettings) -> Result<SweepGrid> {
    use crate::experiments::sweep::{Cell, OrderStats, RunRecord};
    let rows = read_csv(path)?;
    let mut runs: Vec<RunRecord> = Vec::new();
    let mut kind = settings.kind;
    let mut label = settings.label_attribute;
    for row in &rows {
        kind = row[0].parse()?;
        label = row[1].parse()?;
        let (n, k, seed, order): (usize, usize, usize, usize) = (
            field(row, 2, path)?,
            field(row, 3, path)?,
            field(row, 4, path)?,
            field(row, 5, path)?,
        );
        let shares = [
            field(row, 7, path)?,
            field(row, 8, path)?,
            field(row, 9, path)?,
        ];
        let report = TestReport {
            shares,
            counts: [0; 3],
            trial_count: 0,
            target: label,
        };
        let idx = match runs
            .iter()
            .position(|r| r.n == n && r.k == k && r.seed == seed)
        {
            Some(i) => i,
            None => {
                runs.push(RunRecord {
                    n,
                    k,
                    seed,
                    best_epoch: 0,
                    best_train_loss: f64::NAN,
                    reports: [report; 2],
                });
                runs.len() - 1
            }
        };
        if order == 1 || order == 2 {
            runs[idx].reports[order - 1] = report;
        }
    }
    let mut n_values: Vec<usize> = runs.iter().map(|r| r.n).collect();
    let mut k_values: Vec<usize> = runs.iter().map(|r| r.k).collect();
    n_values.sort_unstable();
    n_values.dedup();
    k_values.sort_unstable();
    k_values.dedup();
    let mut cells = Vec::new();
    let mut seeds = 0;
    for &n in &n_values {
        for &k in &k_values {
            let rs: Vec<RunRecord> = runs
                .iter()
                .filter(|r| r.n == n && r.k == k)
                .cloned()
                .collect();
            seeds = seeds.max(rs.len());
            let orders = (!rs.is_empty()).then(|| {
                [0, 1].map(|o| {
                    let xs: Vec<f64> = rs.iter().map(|r| r.reports[o].accuracy()).collect();
                    OrderStats {
                        mean: crate::experiments::stats::mean(&xs),
                        stddev: crate::experiments::stats::stddev(&xs),
                    }
                })
            });
            cells.push(Cell {
                n,
                k,
                feasible: !rs.is_empty(),
                runs: rs,
                orders,
            });
        }
    }
    Ok(SweepGrid {
        kind,
        label_attribute: label,
        n_values,
        k_values,
        seeds,
        cells,
        failures: Vec::new(),
    })
}

/// Rebuilds vocabulary records from `vocab.csv` rows.
pub fn vocab_from_csv(path: &Path) -> Result<Vec<VocabRecord>> {
    let mut records: Vec<VocabRecord> = Vec::new();
    for row in read_csv(path)? {
        let network: usize = field(&row, 0, path)?;
        let cum_shape_choices: usize = field(&row, 4, path)?;
        let idx = match records.iter().position(|r| r.network == network) {
            Some(i) => i,
            None => {
                records.push(VocabRecord {
                    network,
                    sessions: Vec::new(),
                });
                records.len() - 1
            }
        };
        let prev = records[idx]
            .sessions
            .last()
            .map_or(0, |s| s.cum_shape_choices);
        records[idx].sessions.push(Session {
            session: field(&row, 1, path)?,
            epoch: field(&row, 2, path)?,
            cum_count_nouns: field(&row, 3, path)?,
            shape_choices: cum_shape_choices.saturating_sub(prev),
            cum_shape_choices,
        });
    }
    Ok(records)
}

pub fn cmd_report(cfg: &RunConfig) -> Result<()> {
    let sweep = cfg.out.join("sweep.csv");
    let vocab = cfg.out.join("vocab.csv");
    let mut any = false;
    if sweep.exists() {
        let grid = grid_from_csv(&sweep, &cfg.settings())?;
        write_sweep_outputs(&cfg.out, &grid, cfg.test.threshold, cfg.test.margin)?;
        any = true;
    }
    if vocab.exists() {
        write_vocab_outputs(&cfg.out, &vocab_from_csv(&vocab)?, cfg.vocab.series)?;
        any = true;
    }
    if !any {
        return Err(Error::config(format!(
            "no sweep.csv or vocab.csv in {}",
            cfg.out.display()
        )));
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(Error::arg(e.to_string().trim_start_matches("error: ").trim_end())),
    };
    let cfg = RunConfig::resolve(&cli.common)?;
    match &cli.command {
        Command::GenData => cmd_gen_data(&cfg),
        Command::Train => cmd_train(&cfg),
        Command::Eval { checkpoint } => cmd_eval(&cfg, checkpoint.as_deref()),
        Command::Sweep => cmd_sweep(&cfg),
        Command::VocabAccel => cmd_vocab(&cfg),
        Command::Probe { kind, checkpoint } => cmd_probe(&cfg, *kind, checkpoint.as_deref()),
        Command::Report => cmd_report(&cfg),
    }
}

/// Entry point for the binary: runs and maps errors to exit codes.
pub fn main_with_exit() -> i32 {
    match run(std::env::args_os()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
