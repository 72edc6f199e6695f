//! Minimal neural decoder stack: declarative layer specs, shape inference,
//! forward/backward kernels, Adam, and a seeded training loop.
//!
//! This is deliberately not a general autodiff framework. Decoders are plain
//! layer chains described by [`DecoderSpec`]; every architecture used by the
//! information-over-bias metric loads from JSON (see `fixtures/decoders/`).
//! Kernels are generic over [`Scalar`] so training runs in f32 while gradient
//! checks run in f64.

mod adam;
mod layers;
mod model;
mod scalar;
mod spec;
mod train;

pub use adam::{adam_step, AdamState};
pub use layers::{Batch, ParamGrad};
pub use model::{DecoderModel, Grads};
pub use scalar::Scalar;
pub use spec::{infer_shapes, DecoderSpec, LayerSpec, TrainConfig};
pub use train::train_decoder;
