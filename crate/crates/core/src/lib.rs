//! Adversarial image protection against differentiable manipulation models.
//!
//! The crate bundles a small reverse-mode autodiff engine, a JPEG codec that
//! can run with true or differentiable rounding, toy manipulation models, a
//! U-Net perturbation generator, the protection procedures (I-FGSM, I-PGD,
//! global perturbation, conditional generator) and the evaluation harness.

pub mod attacks;
pub mod autodiff;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod io;
pub mod models;
pub mod jpeg;
pub mod scalar;
pub mod tensor;

pub use autodiff::{Gradients, Graph, LossKind, Var};
pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::Tensor;
