//! Unfolded receiver: alternating detector and decoder stages with
//! trainable exchange, interpolation, forwarding and damping scalars.

pub mod params;
pub mod receiver;

pub use params::{
    classical_init, flat_len, flat_names, project_damping, CsiMode, HyperParamSet, Params, PipelineSpec,
};
pub use receiver::{exchange_to_decoder, exchange_to_detector, prepare, run_receiver, RxResult, StageSnapshot};
