//! Hybrid quantum-classical sequence classifier.
//!
//! Each frame of a sequence is amplitude-encoded into a simulated register,
//! pushed through a tensor-network QCNN circuit (MPS, reverse MERA or TTN),
//! and reduced to Pauli-Z expectations. An LSTM with a dense sigmoid head
//! reads the per-frame expectations and produces a binary probability. The
//! whole model trains end to end with parameter-shift circuit gradients
//! chained into exact backpropagation through time.

pub mod ansatz;
pub mod autodiff;
pub mod datagen;
pub mod error;
pub mod gates;
pub mod metrics;
pub mod neural;
pub mod noise;
pub mod pipeline;
pub mod statevector;

pub use error::{Error, Result};
