//! The bit-vector perceptron, the image CNN (single or multi-head), their
//! training loop and checkpoint files.

pub mod checkpoint;
pub mod network;
pub mod spec;
pub mod train;

pub use checkpoint::Checkpoint;
pub use network::{build_cnn, build_mlp, Forward, Model};
pub use spec::{CnnSpec, ConvLayerSpec, HeadSpec, MlpSpec, ModelSpec, DEFAULT_L2};
pub use train::{
    batch_size_for, class_accuracy, train, train_multihead, train_observed, EpochRecord,
    TrainConfig, TrainOutcome, MULTIHEAD_WEIGHTS,
};
