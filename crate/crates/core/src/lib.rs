//! Link-level MU-MIMO-OFDM receiver toolkit: classical iterative detection
//! and decoding, deep-unfolded interleaved receivers with trainable
//! hyperparameters, and the Monte-Carlo harness around them.

pub mod error;
pub mod numkit;
pub mod ldpc;
pub mod phy;
pub mod detect;
pub mod pipeline;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
