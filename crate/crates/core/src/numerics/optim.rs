use serde::{Deserialize, Serialize};

use super::tensor::Param;
use crate::error::{Error, Result};

/// Hyper-parameters of the RMSProp update rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmsPropConfig {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            decay: 0.9,
            epsilon: 1e-8,
        }
    }
}

/// RMSProp optimizer state: one running mean of squared gradients per
/// parameter.
///
/// ```text
/// s <- decay * s + (1 - decay) * g^2
/// w <- w - lr * g / (sqrt(s) + eps)
/// ```
#[derive(Clone, Debug)]
pub struct RmsProp {
    pub config: RmsPropConfig,
    mean_square: Vec<Vec<f64>>,
}

impl RmsProp {
    pub fn new(config: RmsPropConfig) -> Result<Self> {
        let ok = config.learning_rate > 0.0
            && config.decay > 0.0
            && config.decay < 1.0
            && config.epsilon > 0.0;
        if !ok {
            return Err(Error::config(format!(
                "invalid RMSProp settings {config:?}"
            )));
        }
        Ok(Self {
            config,
            mean_square: Vec::new(),
        })
    }

    pub fn mean_square(&self) -> &[Vec<f64>] {
        &self.mean_square
    }

    /// Applies one update to every parameter and clears the gradients.
    pub fn step(&mut self, params: &mut [Param]) -> Result<()> {
        if let Some(p) = params.iter().find(|p| p.grad.is_none()) {
            return Err(Error::State(format!(
                "parameter '{}' has no gradient",
                p.name
            )));
        }
        if self.mean_square.is_empty() {
            self.mean_square = params.iter().map(|p| vec![0.0; p.value.len()]).collect();
        }
        if self.mean_square.len() != params.len()
            || self
                .mean_square
                .iter()
                .zip(params.iter())
                .any(|(s, p)| s.len() != p.value.len())
        {
            return Err(Error::State(
                "parameter layout changed between steps".into(),
            ));
        }
        let RmsPropConfig {
            learning_rate: lr,
            decay,
            epsilon,
        } = self.config;
        for (p, s) in params.iter_mut().zip(self.mean_square.iter_mut()) {
            let g = p.grad.take().expect("checked above");
            for ((w, si), gi) in p
                .value
                .data_mut()
                .iter_mut()
                .zip(s.iter_mut())
                .zip(g.data())
            {
                *si = decay * *si + (1.0 - decay) * gi * gi;
                *w -= lr * gi / (si.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}
