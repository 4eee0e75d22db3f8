//! Parameter storage and forward passes for the MLP and CNN.

use super::spec::{CnnSpec, MlpSpec, ModelSpec};
use crate::error::{Error, Result};
use crate::numerics::{Param, Rng, Tape, Tensor, Var};

/// A network: its spec plus named parameters.
///
/// Weights are drawn from the Glorot (Xavier) uniform distribution with
/// limit `sqrt(6 / (fan_in + fan_out))`; biases start at zero.
#[derive(Clone, Debug)]
pub struct Model {
    pub spec: ModelSpec,
    pub params: Vec<Param>,
}

/// Tape handles produced by one forward pass.
pub struct Forward {
    pub params: Vec<Var>,
    /// Last hidden layer after ReLU (before dropout).
    pub hidden: Var,
    pub logits: Vec<Var>,
}

fn glorot(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut Rng) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.uniform_range(-limit, limit)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape and data agree")
}

/// Builds the perceptron: hidden `[in, hidden]` + bias, output `[hidden, N]` + bias.
pub fn build_mlp(spec: &MlpSpec, rng: &mut Rng) -> Result<Model> {
    spec.validate()?;
    let (i, h, o) = (spec.input_units, spec.hidden_units, spec.output_units);
    let params = vec![
        Param::new("hidden.weight", glorot(&[i, h], i, h, rng), true),
        Param::new("hidden.bias", Tensor::zeros(&[h]), false),
        Param::new("output.weight", glorot(&[h, o], h, o, rng), true),
        Param::new("output.bias", Tensor::zeros(&[o]), false),
    ];
    Ok(Model {
        spec: ModelSpec::Mlp(spec.clone()),
        params,
    })
}

/// Builds conv -> pool -> conv -> pool -> FC -> head(s).
pub fn build_cnn(spec: &CnnSpec, rng: &mut Rng) -> Result<Model> {
    spec.validate()?;
    let mut params = Vec::new();
    let mut channels = spec.input_channels;
    for (l, layer) in spec.conv_layers.iter().enumerate() {
        let k = layer.kernel;
        let shape = [layer.feature_maps, channels, k, k];
        params.push(Param::new(
            format!("conv{l}.weight"),
            glorot(&shape, channels * k * k, layer.feature_maps * k * k, rng),
            true,
        ));
        params.push(Param::new(
            format!("conv{l}.bias"),
            Tensor::zeros(&[layer.feature_maps]),
            false,
        ));
        channels = layer.feature_maps;
    }
    let flat = spec.flat_features()?;
    params.push(Param::new(
        "fc.weight",
        glorot(&[flat, spec.fc_units], flat, spec.fc_units, rng),
        true,
    ));
    params.push(Param::new(
        "fc.bias",
        Tensor::zeros(&[spec.fc_units]),
        false,
    ));
    for head in &spec.heads {
        params.push(Param::new(
            format!("head.{}.weight", head.name),
            glorot(
                &[spec.fc_units, head.classes],
                spec.fc_units,
                head.classes,
                rng,
            ),
            true,
        ));
        params.push(Param::new(
            format!("head.{}.bias", head.name),
            Tensor::zeros(&[head.classes]),
            false,
        ));
    }
    Ok(Model {
        spec: ModelSpec::Cnn(spec.clone()),
        params,
    })
}

impl Model {
    pub fn build(spec: &ModelSpec, rng: &mut Rng) -> Result<Self> {
        match spec {
            ModelSpec::Mlp(s) => build_mlp(s, rng),
            ModelSpec::Cnn(s) => build_cnn(s, rng),
        }
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        let want = self.spec.input_shape();
        let got = input.shape();
        if got.len() != want.len() + 1 || got[1..] != want[..] {
            return Err(Error::dim(format!(
                "model expects [batch, {want:?}] input, got {got:?}"
            )));
        }
        Ok(())
    }

    /// Records a forward pass on `tape`. `training` enables dropout.
    pub fn forward(
        &self,
        tape: &mut Tape,
        input: Tensor,
        training: bool,
        rng: &mut Rng,
    ) -> Result<Forward> {
        self.check_input(&input)?;
        let batch = input.shape()[0];
        let params: Vec<Var> = self
            .params
            .iter()
            .map(|p| tape.leaf(p.value.clone(), training))
            .collect();
        let x = tape.leaf(input, false);
        match &self.spec {
            ModelSpec::Mlp(_) => {
                let h = tape.matmul(x, params[0])?;
                let h = tape.add_bias(h, params[1])?;
                let hidden = tape.relu(h);
                let o = tape.matmul(hidden, params[2])?;
                let logits = tape.add_bias(o, params[3])?;
                Ok(Forward {
                    params,
                    hidden,
                    logits: vec![logits],
                })
            }
            ModelSpec::Cnn(spec) => {
                let mut cur = x;
                let mut p = 0;
                for layer in &spec.conv_layers {
                    let c = tape.conv2d(cur, params[p], params[p + 1], layer.padding)?;
                    let r = tape.relu(c);
                    cur = tape.maxpool2d(r, layer.pool_window, layer.pool_stride)?;
                    p += 2;
                }
                let flat_len = tape.value(cur).len() / batch.max(1);
                let flat = tape.reshape(cur, vec![batch, flat_len])?;
                let f = tape.matmul(flat, params[p])?;
                let f = tape.add_bias(f, params[p + 1])?;
                let hidden = tape.relu(f);
                let dropped = tape.dropout(hidden, spec.dropout_rate, rng, training)?;
                p += 2;
                let mut logits = Vec::with_capacity(spec.heads.len());
                for _ in &spec.heads {
                    let o = tape.matmul(dropped, params[p])?;
                    logits.push(tape.add_bias(o, params[p + 1])?);
                    p += 2;
                }
                Ok(Forward {
                    params,
                    hidden,
                    logits,
                })
            }
        }
    }

    /// Evaluation-mode hidden activations, one vector per batch row.
    pub fn hidden_activations(&self, input: &Tensor) -> Result<Vec<Vec<f64>>> {
        let mut tape = Tape::new();
        let mut rng = Rng::seed_from(0);
        let fwd = self.forward(&mut tape, input.clone(), false, &mut rng)?;
        let h = tape.value(fwd.hidden);
        let width = self.spec.hidden_units();
        Ok(h.data().chunks(width).map(<[f64]>::to_vec).collect())
    }

    /// Evaluation-mode argmax class per row for every head.
    pub fn predict(&self, input: &Tensor) -> Result<Vec<Vec<usize>>> {
        let mut tape = Tape::new();
        let mut rng = Rng::seed_from(0);
        let fwd = self.forward(&mut tape, input.clone(), false, &mut rng)?;
        Ok(fwd
            .logits
            .iter()
            .map(|&l| {
                let t = tape.value(l);
                let classes = t.shape()[1];
                t.data()
                    .chunks(classes)
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .fold(
                                (0, f64::NEG_INFINITY),
                                |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
                            )
                            .0
                    })
                    .collect()
            })
            .collect())
    }

    /// Evaluation-mode softmax probabilities of each head.
    pub fn probabilities(&self, input: &Tensor) -> Result<Vec<Tensor>> {
        let mut tape = Tape::new();
        let mut rng = Rng::seed_from(0);
        let fwd = self.forward(&mut tape, input.clone(), false, &mut rng)?;
        fwd.logits
            .iter()
            .map(|&l| {
                let t = tape.value(l);
                let probs = crate::numerics::softmax_rows(t.data(), t.shape()[1]);
                Tensor::new(t.shape().to_vec(), probs)
            })
            .collect()
    }

    /// First convolution kernels `[maps, channels, k, k]`, if any.
    pub fn first_conv_kernels(&self) -> Option<&Tensor> {
        self.param("conv0.weight").map(|p| &p.value)
    }
}
