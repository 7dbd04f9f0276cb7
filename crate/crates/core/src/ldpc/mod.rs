//! LDPC codes: parity-check containers, construction, encoding and the
//! damped soft-in soft-out decoder.

pub mod code;
pub mod decoder;
pub mod peg;

pub use code::LdpcCode;
pub use decoder::{
    decode_siso, hard_decide, scale_state, DampingParams, DampingPolicy, DecoderState, MSG_CLIP,
};
pub use peg::peg_regular;

/// Tie-breaking seed used to build the bundled code.
pub const BUNDLED_SEED: u64 = 2400;
