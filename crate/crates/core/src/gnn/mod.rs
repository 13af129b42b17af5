//! Dense numerical core: graph convolutions, output activations with their
//! backward surrogates, hand-written reverse-mode gradients and Adam.

mod activation;
mod adam;
mod matrix;
mod model;

pub use activation::{sigmoid, step, ActivationVariant};
pub use adam::{adam_step, Adam, AdamConfig, AdamState};
pub use matrix::{normalized_adjacency, Matrix, Propagator};
pub use model::{default_dims, Forward, Gradients, Model, ModelOverrides};
