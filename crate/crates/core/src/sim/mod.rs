//! Monte-Carlo harness: seeded frame generation, SNR sweeps with CSV output
//! and detector complexity reports.

pub mod complexity;
pub mod experiment;
pub mod frames;
pub mod sweep;

pub use experiment::{run_experiment, version, ComplexityConfig, ExperimentConfig, ExperimentOutput, RunMetadata, ScenarioConfig, EBN0_CONVENTION};
pub use complexity::{complexity_report, count_detection, ComplexityReport, ComplexityRow, BLOCK_RES};
pub use frames::{domain, draw_frame, evaluate_frame, ChannelSource, FrameDraw, FrameOutcome, Scenario};
pub use sweep::{sweep, wilson_interval, SweepConfig, SweepPoint, SweepResult, CSV_HEADER};
