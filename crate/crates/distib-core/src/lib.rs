//! Disentangled representation learning with a transmitted-information
//! bottleneck objective.
//!
//! The crate trains a pair of stochastic encoders that split an input into a
//! label-related code `A` and a sample-exclusive code `Z`, together with a
//! generator that reconstructs the input from `(A, Z)` and a linear classifier
//! that reads labels from `A` alone. Training minimizes a variational bound
//!
//! ```text
//! L = sufficiency + prediction + beta * (kl_A + kl_Z)
//! ```
//!
//! where `sufficiency` is the reconstruction negative log-likelihood,
//! `prediction` is the classifier cross-entropy, and the two KL terms are
//! upper bounds on the information each code carries about the input.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`tensor`] | dense row-major `f64` tensors |
//! | [`tape`] | reverse-mode autodiff on an append-only tape |
//! | [`optim`] | SGD and Adam parameter updates |
//! | [`rng`] | seeded, stream-separated random number generators |
//! | [`discrete`] | exact information measures on finite joints |
//! | [`gaussian`] | diagonal Gaussians: KL, reparameterized sampling, NLL |
//! | [`models`] | encoders, generator, classifier, and their wiring |
//! | [`objective`] | the training loss and information estimates |
//! | [`data`] | datasets, synthetic shapes, IDX codec, batching |
//! | [`trainer`] | the training loop and beta sweeps |
//! | [`eval`] | swap grids, FGSM attacks, probes, few-shot prototypes |
//!
//! The crate is `no_std` (with `alloc`); all file and terminal concerns live
//! in the companion CLI crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod data;
pub mod discrete;
pub mod error;
pub mod eval;
pub mod gaussian;
mod math;
pub mod models;
pub mod objective;
pub mod optim;
pub mod rng;
pub mod tape;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
pub use tensor::Tensor;
