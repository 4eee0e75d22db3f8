//! Tensors, reverse-mode differentiation, layer kernels, the RMSProp
//! optimizer and seeded random streams.

pub mod kernels;
pub mod optim;
pub mod rng;
pub mod tape;
pub mod tensor;

pub use kernels::Padding;
pub use optim::{RmsProp, RmsPropConfig};
pub use rng::Rng;
pub use tape::{softmax_rows, Tape, Var};
pub use tensor::{Param, Tensor};

use crate::error::{Error, Result};

/// Cosine of the angle between two vectors.
///
/// Returns `NaN` when either vector has zero norm; callers decide how to
/// treat that case.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dim(format!(
            "cosine similarity of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    if aa == 0.0 || bb == 0.0 {
        return Ok(f64::NAN);
    }
    Ok((ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0))
}
