use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Padding;
use crate::stimuli::bits::INPUT_UNITS;
use crate::stimuli::Attribute;

pub const DEFAULT_L2: f64 = 1e-3;

/// Two-layer perceptron over the 60 bit inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_units: usize,
    pub hidden_units: usize,
    pub output_units: usize,
    pub l2_coefficient: f64,
}

impl MlpSpec {
    pub fn new(categories: usize) -> Self {
        Self {
            input_units: INPUT_UNITS,
            hidden_units: 30,
            output_units: categories,
            l2_coefficient: DEFAULT_L2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_units == 0 || self.hidden_units == 0 || self.output_units < 2 {
            return Err(Error::config(format!("invalid MLP spec {self:?}")));
        }
        if !(self.l2_coefficient >= 0.0) {
            return Err(Error::config("L2 coefficient must be >= 0"));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.input_units * self.hidden_units
            + self.hidden_units
            + self.hidden_units * self.output_units
            + self.output_units
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvLayerSpec {
    pub feature_maps: usize,
    pub kernel: usize,
    pub padding: Padding,
    pub pool_window: usize,
    pub pool_stride: usize,
}

impl Default for ConvLayerSpec {
    fn default() -> Self {
        Self {
            feature_maps: 5,
            kernel: 5,
            padding: Padding::Same,
            pool_window: 4,
            pool_stride: 4,
        }
    }
}

/// One softmax output branching from the fully-connected layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub name: String,
    /// Attribute whose class index is this head's target. `None` means the
    /// dataset's label attribute.
    pub attribute: Option<Attribute>,
    pub classes: usize,
    pub loss_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnnSpec {
    pub input_channels: usize,
    pub resolution: usize,
    pub conv_layers: Vec<ConvLayerSpec>,
    pub fc_units: usize,
    pub dropout_rate: f64,
    pub heads: Vec<HeadSpec>,
    pub l2_coefficient: f64,
}

impl CnnSpec {
    /// Single-head network labelling `categories` classes.
    pub fn new(categories: usize, resolution: usize) -> Self {
        Self {
            input_channels: 4,
            resolution,
            conv_layers: vec![ConvLayerSpec::default(), ConvLayerSpec::default()],
            fc_units: 25,
            dropout_rate: 0.5,
            heads: vec![HeadSpec {
                name: "label".into(),
                attribute: None,
                classes: categories,
                loss_weight: 1.0,
            }],
            l2_coefficient: DEFAULT_L2,
        }
    }

    /// Shape, color and texture heads with the given class counts and loss
    /// weights.
    pub fn multi_head(counts: [usize; 3], weights: [f64; 3], resolution: usize) -> Self {
        let mut spec = Self::new(counts[0], resolution);
        spec.heads = Attribute::ALL
            .iter()
            .map(|&a| HeadSpec {
                name: a.name().into(),
                attribute: Some(a),
                classes: counts[a.index()],
                loss_weight: weights[a.index()],
            })
            .collect();
        spec
    }

    /// Spatial extent after every conv/pool stage, or an error if a stage
    /// does not fit.
    pub fn feature_extents(&self) -> Result<Vec<usize>> {
        let mut extent = self.resolution;
        let mut out = Vec::new();
        for (i, layer) in self.conv_layers.iter().enumerate() {
            let (a, b) = layer.padding.amounts(layer.kernel);
            let padded = extent + a + b;
            if layer.kernel == 0 || layer.kernel > padded {
                return Err(Error::config(format!(
                    "conv layer {i}: kernel does not fit extent {extent}"
                )));
            }
            extent = padded - layer.kernel + 1;
            if layer.pool_window == 0 || layer.pool_stride == 0 || layer.pool_window > extent {
                return Err(Error::config(format!(
                    "conv layer {i}: pool does not fit extent {extent}"
                )));
            }
            extent = (extent - layer.pool_window) / layer.pool_stride + 1;
            out.push(extent);
        }
        Ok(out)
    }

    /// Inputs to the fully-connected layer.
    pub fn flat_features(&self) -> Result<usize> {
        let extent = *self.feature_extents()?.last().unwrap_or(&self.resolution);
        let maps = self
            .conv_layers
            .last()
            .map_or(self.input_channels, |l| l.feature_maps);
        Ok(maps * extent * extent)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0 || self.fc_units == 0 || self.heads.is_empty() {
            return Err(Error::config(
                "CNN needs input channels, FC units and a head",
            ));
        }
        if self.conv_layers.iter().any(|l| l.feature_maps == 0) {
            return Err(Error::config("conv layers need at least one feature map"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::config(format!(
                "dropout {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if !(self.l2_coefficient >= 0.0) {
            return Err(Error::config("L2 coefficient must be >= 0"));
        }
        if self
            .heads
            .iter()
            .any(|h| h.classes < 2 || h.loss_weight < 0.0)
        {
            return Err(Error::config(
                "every head needs >= 2 classes and a non-negative weight",
            ));
        }
        let total: f64 = self.heads.iter().map(|h| h.loss_weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "head loss weights sum to {total}, not 1"
            )));
        }
        self.feature_extents().map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Mlp(MlpSpec),
    Cnn(CnnSpec),
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Mlp(s) => s.validate(),
            ModelSpec::Cnn(s) => s.validate(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Mlp(_) => "mlp",
            ModelSpec::Cnn(_) => "cnn",
        }
    }

    pub fn l2_coefficient(&self) -> f64 {
        match self {
            ModelSpec::Mlp(s) => s.l2_coefficient,
            ModelSpec::Cnn(s) => s.l2_coefficient,
        }
    }

    pub fn hidden_units(&self) -> usize {
        match self {
            ModelSpec::Mlp(s) => s.hidden_units,
            ModelSpec::Cnn(s) => s.fc_units,
        }
    }

    /// `(target attribute, class count, loss weight)` per head.
    pub fn heads(&self) -> Vec<(Option<Attribute>, usize, f64)> {
        match self {
            ModelSpec::Mlp(s) => vec![(None, s.output_units, 1.0)],
            ModelSpec::Cnn(s) => s
                .heads
                .iter()
                .map(|h| (h.attribute, h.classes, h.loss_weight))
                .collect(),
        }
    }

    /// Per-item input shape.
    pub fn input_shape(&self) -> Vec<usize> {
        match self {
            ModelSpec::Mlp(s) => vec![s.input_units],
            ModelSpec::Cnn(s) => vec![s.input_channels, s.resolution, s.resolution],
        }
    }
}
