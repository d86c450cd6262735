//! Convolutional network trained end to end on downsampled range-Doppler
//! images, with hand-written forward and backward passes.

mod adam;
mod network;
mod tensor;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use network::{
    bce_from_logit, probability, sigmoid, Architecture, ForwardCache, Layout, NetworkParams,
    SampleCache,
};
pub use tensor::{Real, Tensor};
pub use train::{
    evaluate, history_csv, loss_and_accuracy, train, EpochStats, Example, TrainConfig,
    TrainOutcome,
};
