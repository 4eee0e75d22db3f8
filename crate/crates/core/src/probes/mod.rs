//! Read-only measurements over a trained or untrained network.

pub mod filters;
pub mod generalization;
pub mod hausdorff;
pub mod sensitivity;

pub use filters::{cross_channel_difference, export_filters, write_filter_images, FilterImages};
pub use generalization::{choose, run_generalization_test, TestReport, TrialOutcome};
pub use hausdorff::modified_hausdorff;
pub use sensitivity::{
    bitflip_sensitivity, color_step_sensitivity, curve_csv, shape_morph_sensitivity, Curve,
    CurvePoint, MorphCurve,
};

use crate::error::Result;
use crate::models::Model;
use crate::numerics::Tensor;

/// Anything that maps a batch of inputs to one feature vector per row.
pub trait FeatureExtractor: Sync {
    fn features(&self, input: &Tensor) -> Result<Vec<Vec<f64>>>;
}

impl FeatureExtractor for Model {
    fn features(&self, input: &Tensor) -> Result<Vec<Vec<f64>>> {
        self.hidden_activations(input)
    }
}
