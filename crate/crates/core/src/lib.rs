//! Content-style disentanglement metrics.
//!
//! Quantifies how well a spatial "content" tensor representation and a
//! vector "style" representation separate the factors of variation in an
//! image dataset, using two complementary statistics:
//!
//! - **Distance correlation** ([`dcor`]): the normalized distance covariance
//!   between two N-row sample matrices. Values near 0 indicate uncorrelated
//!   representations, values near 1 maximal dependence.
//! - **Information over bias** ([`iob`]): the ratio of the reconstruction
//!   error of a decoder trained on an uninformative constant input to that
//!   of a decoder trained on the latent, averaged over images and runs.
//!   IOB near 1 means the latent carries no information beyond dataset bias.
//!
//! The [`synth`] module generates a procedural validation dataset with known
//! generating factors, and [`report`] runs the full scenario study over it.

pub mod dcor;
pub mod error;
pub mod io;

pub mod nn;

pub mod rng;

pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{flatten_sample, stack_samples, Buffer, Dtype, SampleSet, Tensor, Vector};
