//! Benchmark fixtures shared by the criterion targets.

use idd_core::detect::{DetectionContext, DetectorKind};
use idd_core::pipeline::prepare;
use idd_core::pipeline::PipelineSpec;
use idd_core::sim::{domain, draw_frame, FrameDraw, Scenario};

/// A 4x4 frame at 10 dB and its detector context for `kind`.
pub fn fixture(kind: DetectorKind) -> (Scenario, PipelineSpec, FrameDraw, DetectionContext) {
    let sc = Scenario::rayleigh(4).expect("default scenario");
    let stages = if kind == DetectorKind::Lmmse { 1 } else { 2 };
    let spec = PipelineSpec::even(kind, stages, 12).expect("valid spec");
    let draw = draw_frame(&sc, 1, domain::SWEEP, 0, 10.0).expect("frame");
    let ctx = prepare(&spec, &sc.frame, &draw.chan, &draw.rx, draw.n0).expect("context");
    (sc, spec, draw, ctx)
}
