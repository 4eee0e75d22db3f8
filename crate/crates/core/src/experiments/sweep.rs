//! N x K grid sweeps with seeded, order-independent jobs.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean, stddev};
use crate::error::{Error, Result};
use crate::models::{build_cnn, build_mlp, train, CnnSpec, MlpSpec, Model, TrainConfig};
use crate::numerics::rng::derive_seed;
use crate::numerics::{RmsPropConfig, Rng};
use crate::probes::{run_generalization_test, TestReport};
use crate::stimuli::dataset::{TextureSource, DEFAULT_BIT_HOLDOUT, DEFAULT_IMAGE_HOLDOUT};
use crate::stimuli::{
    build_trials, gen_bit_dataset, gen_image_dataset, is_feasible, Attribute, DatasetConfig,
    ImageConfig, StimulusSet, TestOrder, Universe,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mlp,
    Cnn,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Mlp => "mlp",
            ModelKind::Cnn => "cnn",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mlp" => Ok(ModelKind::Mlp),
            "cnn" => Ok(ModelKind::Cnn),
            other => Err(Error::config(format!("unknown model kind '{other}'"))),
        }
    }
}

/// Everything needed to train and score one network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub kind: ModelKind,
    pub label_attribute: Attribute,
    pub trial_count: usize,
    /// Image extent for CNN runs.
    pub resolution: usize,
    /// Holdout values per attribute; the kind's default when unset.
    pub holdout: Option<usize>,
    /// Bit sets only: permit repeated attribute triples when N x K > N^2.
    pub allow_repeats: bool,
    /// The kind's default (200 MLP, 400 CNN) when unset.
    pub epochs: Option<usize>,
    pub l2_coefficient: f64,
    pub optimizer: RmsPropConfig,
    /// Per-class accuracy cadence passed to training; 0 disables it.
    pub accuracy_every: usize,
    pub textures: TextureSource,
}

impl RunSettings {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            label_attribute: Attribute::Shape,
            trial_count: 1000,
            resolution: 64,
            holdout: None,
            allow_repeats: false,
            epochs: None,
            l2_coefficient: crate::models::DEFAULT_L2,
            optimizer: RmsPropConfig::default(),
            accuracy_every: 0,
            textures: TextureSource::Procedural,
        }
    }

    pub fn holdout(&self) -> usize {
        self.holdout.unwrap_or(match self.kind {
            ModelKind::Mlp => DEFAULT_BIT_HOLDOUT,
            ModelKind::Cnn => DEFAULT_IMAGE_HOLDOUT,
        })
    }

    pub fn dataset(&self, n: usize, k: usize) -> DatasetConfig {
        DatasetConfig::new(n, k)
            .with_label(self.label_attribute)
            .with_repeats(self.allow_repeats)
            .with_holdout(self.holdout())
    }

    pub fn image_config(&self) -> ImageConfig {
        ImageConfig {
            resolution: self.resolution,
            textures: self.textures.clone(),
        }
    }

    pub fn feasible(&self, n: usize, k: usize) -> bool {
        n >= 2 && k >= 1 && (self.allow_repeats || is_feasible(n, k))
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let mut c = match self.kind {
            ModelKind::Mlp => TrainConfig::mlp(seed),
            ModelKind::Cnn => TrainConfig::cnn(seed),
        };
        if let Some(e) = self.epochs {
            c.epochs = e;
        }
        c.optimizer = self.optimizer;
        c.accuracy_every = self.accuracy_every;
        c
    }

    pub fn build_model(&self, n: usize, rng: &mut Rng) -> Result<Model> {
        match self.kind {
            ModelKind::Mlp => {
                let mut spec = MlpSpec::new(n);
                spec.l2_coefficient = self.l2_coefficient;
                build_mlp(&spec, rng)
            }
            ModelKind::Cnn => {
                let mut spec = CnnSpec::new(n, self.resolution);
                spec.l2_coefficient = self.l2_coefficient;
                build_cnn(&spec, rng)
            }
        }
    }
}

/// Result of one trained network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n: usize,
    pub k: usize,
    pub seed: usize,
    pub best_epoch: usize,
    pub best_train_loss: f64,
    /// Order-1 and order-2 reports, scored on the label attribute.
    pub reports: [TestReport; 2],
}

/// Seed of job `(n, k, seed index)` under `master`.
pub fn job_seed(master: u64, n: usize, k: usize, seed: usize) -> u64 {
    derive_seed(master, "sweep-job", &[n as u64, k as u64, seed as u64])
}

/// Order-1 and order-2 reports on the label attribute, with trial and tie
/// streams derived from `seed`.
pub fn score<U: Universe>(
    model: &Model,
    set: &StimulusSet<U>,
    settings: &RunSettings,
    seed: u64,
) -> Result<[TestReport; 2]> {
    let mut reports = Vec::with_capacity(2);
    for order in [TestOrder::First, TestOrder::Second] {
        let o = u64::from(order.number());
        let trials = build_trials(
            set,
            order,
            settings.trial_count,
            &mut Rng::stream(seed, "trials", &[o]),
        )?;
        let tie_seed = derive_seed(seed, "ties", &[o]);
        let (report, _) = run_generalization_test(
            model,
            &set.universe,
            &trials,
            settings.label_attribute,
            tie_seed,
        )?;
        reports.push(report);
    }
    Ok([reports[0], reports[1]])
}

/// Generates the data, trains from `seed` and scores both test orders.
/// `index` is the seed's position within its cell.
pub fn run_job(
    settings: &RunSettings,
    n: usize,
    k: usize,
    index: usize,
    seed: u64,
) -> Result<(RunRecord, Model)> {
    let data_cfg = settings.dataset(n, k);
    let mut data_rng = Rng::stream(seed, "data", &[]);
    let mut init_rng = Rng::stream(seed, "init", &[]);
    let mut model = settings.build_model(n, &mut init_rng)?;
    let tc = settings.train_config(seed);
    let (out, reports) = match settings.kind {
        ModelKind::Mlp => {
            let set = gen_bit_dataset(&data_cfg, &mut data_rng)?;
            let out = train(&mut model, &set, &tc)?;
            let r = score(&model, &set, settings, seed)?;
            (out, r)
        }
        ModelKind::Cnn => {
            let set = gen_image_dataset(&data_cfg, &settings.image_config(), &mut data_rng)?;
            let out = train(&mut model, &set, &tc)?;
            let r = score(&model, &set, settings, seed)?;
            (out, r)
        }
    };
    Ok((
        RunRecord {
            n,
            k,
            seed: index,
            best_epoch: out.checkpoint.best_epoch,
            best_train_loss: out.checkpoint.best_train_loss,
            reports,
        },
        model,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub settings: RunSettings,
    pub n_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub seeds: usize,
    pub master_seed: u64,
    /// Worker threads; 0 means available parallelism.
    pub workers: usize,
    /// Record failed jobs as gaps instead of aborting the sweep.
    pub keep_going: bool,
}

impl SweepConfig {
    pub fn new(settings: RunSettings, n_values: Vec<usize>, k_values: Vec<usize>) -> Self {
        Self {
            settings,
            n_values,
            k_values,
            seeds: 10,
            master_seed: 0,
            workers: 0,
            keep_going: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderStats {
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub k: usize,
    pub feasible: bool,
    pub runs: Vec<RunRecord>,
    /// Statistics for order 1 and order 2; `None` for infeasible or empty cells.
    pub orders: Option<[OrderStats; 2]>,
}

impl Cell {
    pub fn order_mean(&self, order: TestOrder) -> Option<f64> {
        self.orders
            .as_ref()
            .map(|o| o[usize::from(order.number() - 1)].mean)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobFailure {
    pub n: usize,
    pub k: usize,
    pub seed: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub kind: ModelKind,
    pub label_attribute: Attribute,
    pub n_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub seeds: usize,
    /// Row-major over `n_values` x `k_values`.
    pub cells: Vec<Cell>,
    pub failures: Vec<JobFailure>,
}

impl SweepGrid {
    pub fn cell(&self, n: usize, k: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.n == n && c.k == k)
    }

    /// Builds a grid from per-cell order means, for analysis helpers.
    pub fn from_means(
        n_values: Vec<usize>,
        k_values: Vec<usize>,
        means: &[Option<(f64, f64)>],
    ) -> Self {
        let mut cells = Vec::new();
        for (i, &n) in n_values.iter().enumerate() {
            for (j, &k) in k_values.iter().enumerate() {
                let m = means[i * k_values.len() + j];
                cells.push(Cell {
                    n,
                    k,
                    feasible: m.is_some(),
                    runs: Vec::new(),
                    orders: m.map(|(a, b)| {
                        [
                            OrderStats {
                                mean: a,
                                stddev: 0.0,
                            },
                            OrderStats {
                                mean: b,
                                stddev: 0.0,
                            },
                        ]
                    }),
                });
            }
        }
        Self {
            kind: ModelKind::Mlp,
            label_attribute: Attribute::Shape,
            n_values,
            k_values,
            seeds: 1,
            cells,
            failures: Vec::new(),
        }
    }
}

fn aggregate(runs: &[RunRecord]) -> Option<[OrderStats; 2]> {
    if runs.is_empty() {
        return None;
    }
    Some([0, 1].map(|o| {
        let xs: Vec<f64> = runs.iter().map(|r| r.reports[o].accuracy()).collect();
        OrderStats {
            mean: mean(&xs),
            stddev: stddev(&xs),
        }
    }))
}

/// Trains and scores every feasible `(N, K, seed)` job on a bounded pool.
///
/// `progress` is called from worker threads as jobs finish.
pub fn run_sweep_with(
    config: &SweepConfig,
    progress: &(dyn Fn(&RunRecord) + Sync),
) -> Result<SweepGrid> {
    if config.n_values.is_empty() || config.k_values.is_empty() {
        return Err(Error::config("sweep axes must be non-empty"));
    }
    if config.seeds == 0 {
        return Err(Error::config("sweep needs at least one seed"));
    }
    let s = &config.settings;
    let mut jobs = Vec::new();
    for &n in &config.n_values {
        for &k in &config.k_values {
            if s.feasible(n, k) {
                jobs.extend((0..config.seeds).map(|seed| (n, k, seed)));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::config(format!("worker pool: {e}")))?;
    let results: Vec<(usize, usize, usize, Result<RunRecord>)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(n, k, seed)| {
                let js = job_seed(config.master_seed, n, k, seed);
                let mut attempt = run_job(s, n, k, seed, js);
                if attempt.is_err() && config.keep_going {
                    attempt = run_job(s, n, k, seed, js);
                }
                let rec = attempt.map(|(r, _)| {
                    progress(&r);
                    r
                });
                (n, k, seed, rec)
            })
            .collect()
    });

    let mut failures = Vec::new();
    let mut done = Vec::new();
    for (n, k, seed, r) in results {
        match r {
            Ok(rec) => done.push(rec),
            Err(e) if config.keep_going => failures.push(JobFailure {
                n,
                k,
                seed,
                message: e.to_string(),
            }),
            Err(e) => {
                return Err(Error::Job {
                    n,
                    k,
                    seed,
                    source: Box::new(e),
                })
            }
        }
    }
    let mut cells = Vec::new();
    for &n in &config.n_values {
        for &k in &config.k_values {
            let runs: Vec<RunRecord> = done
                .iter()
                .filter(|r| r.n == n && r.k == k)
                .cloned()
                .collect();
            cells.push(Cell {
                n,
                k,
                feasible: s.feasible(n, k),
                orders: aggregate(&runs),
                runs,
            });
        }
    }
    Ok(SweepGrid {
        kind: s.kind,
        label_attribute: s.label_attribute,
        n_values: config.n_values.clone(),
        k_values: config.k_values.clone(),
        seeds: config.seeds,
        cells,
        failures,
    })
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepGrid> {
    run_sweep_with(config, &|_| {})
}

/// Header of [`sweep_csv`].
pub const SWEEP_HEADER: &str =
    "model,label_attribute,N,K,seed,order,accuracy,shape_share,color_share,texture_share";

/// One row per run and test order.
pub fn sweep_csv(grid: &SweepGrid) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for cell in &grid.cells {
        for r in &cell.runs {
            for (o, rep) in r.reports.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    grid.kind,
                    grid.label_attribute,
                    r.n,
                    r.k,
                    r.seed,
                    o + 1,
                    rep.accuracy(),
                    rep.shares[0],
                    rep.shares[1],
                    rep.shares[2]
                ));
            }
        }
    }
    out
}

/// Per-cell summary: `N,K,feasible,runs,order1_mean,order1_std,order2_mean,order2_std`;
/// infeasible cells carry `NA`.
pub fn grid_summary_csv(grid: &SweepGrid) -> String {
    let mut out = String::from("N,K,feasible,runs,order1_mean,order1_std,order2_mean,order2_std\n");
    for c in &grid.cells {
        match &c.orders {
            Some([a, b]) => out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.n,
                c.k,
                c.feasible,
                c.runs.len(),
                a.mean,
                a.stddev,
                b.mean,
                b.stddev
            )),
            None => out.push_str(&format!(
                "{},{},{},{},NA,NA,NA,NA\n",
                c.n,
                c.k,
                c.feasible,
                c.runs.len()
            )),
        }
    }
    out
}
