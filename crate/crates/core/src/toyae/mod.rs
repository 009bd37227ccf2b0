//! Desk-scale variational autoencoder with hand-derived gradients, a
//! deterministic synthetic video generator, and a trainer that supports
//! joint latent compression versus post-training latent compression.

pub mod checkpoint;
mod linalg;
pub mod model;
pub mod synth;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest};
pub use linalg::Mat;
pub use model::{
    decode, encode, latent_projection, loss_and_grad, EncodeOutput, LossConfig, LossParts,
    ModelGeom, ToyAEParams,
};
pub use synth::{smooth_spec, standard_spec, synth_dataset, SynthSpec};
pub use train::{evaluate, train, EvalRecord, StepRecord, TrainConfig, TrainLog, TrainMode};
