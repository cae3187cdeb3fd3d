//! Minimal double-precision neural core: matrix kernels, LSTM with BPTT,
//! linear layers, MSE loss, optimizers, and gradient verification.
//!
//! Everything is deterministic under a fixed execution order; there is no
//! hidden global state.

pub mod check;
pub mod linear;
pub mod lstm;
pub mod matrix;
pub mod optim;

pub use check::{grad_check_fn, GradCheckReport};
pub use linear::{mse_loss, relu, relu_backward, LinearParams};
pub use lstm::{sigmoid, LstmParams, LstmSeqCache, LstmState, LstmStepCache};
pub use matrix::{dot, Matrix};
pub use optim::{sgd_step, AdamState, OptimizerKind};
