pub mod cli;
pub mod error;
pub mod experiments;
pub mod models;
pub mod numerics;
pub mod plot;
pub mod probes;
pub mod stimuli;

pub use error::{Error, Result};
