//! Mini-batch RMSProp training with best-epoch checkpointing.

use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::network::Model;
use super::spec::ModelSpec;
use crate::error::{Error, Result};
use crate::numerics::{Param, RmsProp, RmsPropConfig, Rng, Tape, Tensor};
use crate::stimuli::{StimulusSet, Universe};

pub const MLP_EPOCHS: usize = 200;
pub const CNN_EPOCHS: usize = 400;
pub const MAX_BATCH: usize = 32;

/// `min(32, floor(total / 5))`, floored at 1 so tiny sets still train.
pub fn batch_size_for(total: usize) -> usize {
    (total / 5).clamp(1, MAX_BATCH)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Overrides the size rule when set.
    pub batch_size: Option<usize>,
    pub optimizer: RmsPropConfig,
    pub seed: u64,
    /// Per-class training accuracy is measured every this many epochs
    /// (and at the last epoch); 0 disables it.
    pub accuracy_every: usize,
}

impl TrainConfig {
    pub fn mlp(seed: u64) -> Self {
        Self {
            epochs: MLP_EPOCHS,
            batch_size: None,
            optimizer: RmsPropConfig::default(),
            seed,
            accuracy_every: 1,
        }
    }

    pub fn cnn(seed: u64) -> Self {
        Self {
            epochs: CNN_EPOCHS,
            ..Self::mlp(seed)
        }
    }

    pub fn for_spec(spec: &ModelSpec, seed: u64) -> Self {
        match spec {
            ModelSpec::Mlp(_) => Self::mlp(seed),
            ModelSpec::Cnn(_) => Self::cnn(seed),
        }
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn with_accuracy_every(mut self, every: usize) -> Self {
        self.accuracy_every = every;
        self
    }

    pub fn batch_for(&self, total: usize) -> usize {
        self.batch_size
            .unwrap_or_else(|| batch_size_for(total))
            .max(1)
    }
}

/// One row of the training trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Sample-weighted mean over batches of the weighted head losses.
    pub loss: f64,
    /// Same average, per head, unweighted.
    pub head_losses: Vec<f64>,
    /// Mean L2 penalty over batches.
    pub penalty: f64,
    /// Evaluation-mode accuracy of the first head, per class.
    pub class_accuracy: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub trace: Vec<EpochRecord>,
}

fn head_labels<U: Universe>(model: &Model, set: &StimulusSet<U>) -> Result<Vec<Vec<usize>>> {
    model
        .spec
        .heads()
        .iter()
        .map(|(attr, classes, _)| {
            let attr = attr.unwrap_or(set.label_attribute);
            let labels = set.labels(attr);
            if let Some(&bad) = labels.iter().find(|&&l| l >= *classes) {
                return Err(Error::Index(format!(
                    "{attr} label {bad} outside a {classes}-class head"
                )));
            }
            Ok(labels)
        })
        .collect()
}

/// Evaluation-mode accuracy of the first head for every class.
pub fn class_accuracy(
    model: &Model,
    inputs: &Tensor,
    labels: &[usize],
    classes: usize,
) -> Result<Vec<f64>> {
    let predicted = model.predict(inputs)?;
    let mut hits = vec![0usize; classes];
    let mut totals = vec![0usize; classes];
    for (&p, &l) in predicted[0].iter().zip(labels) {
        totals[l] += 1;
        if p == l {
            hits[l] += 1;
        }
    }
    Ok(hits
        .iter()
        .zip(&totals)
        .map(|(&h, &t)| if t == 0 { 0.0 } else { h as f64 / t as f64 })
        .collect())
}

fn gather(all: &[f64], row: usize, shape: &[usize], indices: &[usize]) -> Result<Tensor> {
    let mut data = Vec::with_capacity(row * indices.len());
    for &i in indices {
        data.extend_from_slice(&all[i * row..(i + 1) * row]);
    }
    let mut s = vec![indices.len()];
    s.extend_from_slice(shape);
    Tensor::new(s, data)
}

/// Trains `model` in place on every item of `set`.
///
/// After each epoch `observer` sees the record and the current weights.
/// On return the model holds the weights of the epoch with the lowest
/// training loss.
pub fn train_observed<U: Universe>(
    model: &mut Model,
    set: &StimulusSet<U>,
    config: &TrainConfig,
    observer: &mut dyn FnMut(&EpochRecord, &Model) -> Result<()>,
) -> Result<TrainOutcome> {
    model.spec.validate()?;
    if set.is_empty() {
        return Err(Error::arg("cannot train on an empty set"));
    }
    if config.epochs == 0 {
        return Err(Error::config("epochs must be >= 1"));
    }
    let labels = head_labels(model, set)?;
    let weights: Vec<f64> = model.spec.heads().iter().map(|h| h.2).collect();
    let first_classes = model.spec.heads()[0].1;
    let l2 = model.spec.l2_coefficient();

    let n = set.len();
    let all_idx: Vec<usize> = (0..n).collect();
    let inputs = set.encode_items(&all_idx)?;
    let item_shape = inputs.shape()[1..].to_vec();
    let row: usize = item_shape.iter().product();
    let batch = config.batch_for(n);

    let mut optimizer = RmsProp::new(config.optimizer)?;
    let mut trace = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, Vec<Param>)> = None;

    for epoch in 1..=config.epochs {
        let e = epoch as u64;
        let order = Rng::stream(config.seed, "shuffle", &[e]).permutation(n);
        let mut drop_rng = Rng::stream(config.seed, "dropout", &[e]);
        let mut loss_sum = 0.0;
        let mut head_sums = vec![0.0; weights.len()];
        let mut penalty_sum = 0.0;
        for (b, chunk) in order.chunks(batch).enumerate() {
            let x = gather(inputs.data(), row, &item_shape, chunk)?;
            let mut tape = Tape::new();
            let fwd = model.forward(&mut tape, x, true, &mut drop_rng)?;
            let mut total = None;
            let mut data_loss = 0.0;
            for (h, &logits) in fwd.logits.iter().enumerate() {
                let y: Vec<usize> = chunk.iter().map(|&i| labels[h][i]).collect();
                let nll = tape.softmax_nll(logits, &y)?;
                let v = tape.value(nll).item();
                head_sums[h] += v * chunk.len() as f64;
                data_loss += weights[h] * v;
                let term = tape.scale(nll, weights[h]);
                total = Some(match total {
                    None => term,
                    Some(t) => tape.add(t, term)?,
                });
            }
            let reg: Vec<_> = fwd
                .params
                .iter()
                .zip(&model.params)
                .filter(|(_, p)| p.regularized)
                .map(|(&v, _)| v)
                .collect();
            let penalty = tape.l2_penalty(&reg, l2)?;
            let penalty_value = tape.value(penalty).item();
            let total = tape.add(total.expect("at least one head"), penalty)?;
            let objective = tape.value(total).item();
            if !objective.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: b + 1,
                    loss: objective,
                });
            }
            tape.backward(total)?;
            for (p, &v) in model.params.iter_mut().zip(&fwd.params) {
                p.grad = Some(
                    tape.take_grad(v)
                        .unwrap_or_else(|| Tensor::zeros(p.value.shape())),
                );
            }
            optimizer.step(&mut model.params)?;
            loss_sum += data_loss * chunk.len() as f64;
            penalty_sum += penalty_value * chunk.len() as f64;
        }
        let measure = config.accuracy_every > 0
            && (epoch % config.accuracy_every == 0 || epoch == config.epochs);
        let class_accuracy = if measure {
            Some(class_accuracy(model, &inputs, &labels[0], first_classes)?)
        } else {
            None
        };
        let record = EpochRecord {
            epoch,
            loss: loss_sum / n as f64,
            head_losses: head_sums.iter().map(|s| s / n as f64).collect(),
            penalty: penalty_sum / n as f64,
            class_accuracy,
        };
        if best.as_ref().is_none_or(|(_, l, _)| record.loss < *l) {
            best = Some((epoch, record.loss, model.params.clone()));
        }
        observer(&record, model)?;
        trace.push(record);
    }

    let (best_epoch, best_loss, params) = best.expect("at least one epoch");
    model.params = params;
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            model: model.clone(),
            seed: config.seed,
            best_epoch,
            best_train_loss: best_loss,
        },
        trace,
    })
}

pub fn train<U: Universe>(
    model: &mut Model,
    set: &StimulusSet<U>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train_observed(model, set, config, &mut |_, _| Ok(()))
}

/// Multi-head training with per-head loss weights (shape, color, texture
/// order). Weights must sum to 1.
pub fn train_multihead<U: Universe>(
    model: &mut Model,
    set: &StimulusSet<U>,
    config: &TrainConfig,
    weights: &[f64],
    observer: &mut dyn FnMut(&EpochRecord, &Model) -> Result<()>,
) -> Result<TrainOutcome> {
    let ModelSpec::Cnn(spec) = &mut model.spec else {
        return Err(Error::config("multi-head training needs a CNN"));
    };
    if weights.len() != spec.heads.len() {
        return Err(Error::config(format!(
            "{} loss weights for {} heads",
            weights.len(),
            spec.heads.len()
        )));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || weights.iter().any(|w| *w < 0.0) {
        return Err(Error::config(format!(
            "loss weights {weights:?} must be >= 0 and sum to 1"
        )));
    }
    for (h, &w) in spec.heads.iter_mut().zip(weights) {
        h.loss_weight = w;
    }
    train_observed(model, set, config, observer)
}

/// Default head weighting for shape, color and texture heads.
pub const MULTIHEAD_WEIGHTS: [f64; 3] = [0.6, 0.2, 0.2];
