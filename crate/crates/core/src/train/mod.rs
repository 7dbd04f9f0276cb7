//! Hyperparameter training: losses, exact gradients through the receiver,
//! Adam and the two-phase loop.

pub mod adam;
pub mod grad;
pub mod loss;
pub mod trainer;

pub use adam::Adam;
pub use grad::{batch_loss, batch_loss_grad, finite_difference, gradient_check, live_params, Batch, GradCheck, GradCheckEntry, Sample, LANES};
pub use loss::{bce_from_llr, bce_loss, frame_loss, lse_loss, Loss, PROB_CLAMP};
pub use trainer::{curve_csv, train, CurveRow, Phase, TrainConfig, TrainOutcome};
