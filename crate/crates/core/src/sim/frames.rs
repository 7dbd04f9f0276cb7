//! Reproducible frame generation and single-frame evaluation.

use std::path::Path;
use std::sync::Arc;

use crate::error::{config, Result};
use crate::numkit::counted_scope;
use crate::numkit::rng::derived_rng;
use crate::phy::{ebn0_to_n0, load_channel_dump, rayleigh_block, receive, ChannelRealization, FrameConfig, RxGrid, TxFrame};
use crate::pipeline::{prepare, run_receiver, Params, PipelineSpec};

/// Seed domains keep streams for different purposes apart.
pub mod domain {
    pub const SWEEP: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const VALIDATION: u64 = 3;
    pub const COMPLEXITY: u64 = 4;
    /// Added to a frame domain for the per-sample SNR draws.
    pub const SNR_OFFSET: u64 = 16;
}

#[derive(Clone, Debug)]
pub enum ChannelSource {
    /// i.i.d. `CN(0, 1)` entries, constant over the frame.
    Rayleigh,
    /// Pre-recorded channels, used cyclically by frame index.
    Recorded(Arc<Vec<ChannelRealization>>),
}

/// Frame geometry plus where channels come from.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub frame: FrameConfig,
    pub channel: ChannelSource,
}

impl Scenario {
    /// The default 4-user 16-QAM frame over `antennas` receive antennas.
    pub fn rayleigh(antennas: usize) -> Result<Self> {
        Ok(Scenario { frame: FrameConfig::rayleigh_default().with_antennas(antennas)?, channel: ChannelSource::Rayleigh })
    }

    pub fn recorded(frame: FrameConfig, path: impl AsRef<Path>) -> Result<Self> {
        let chans = load_channel_dump(path, &frame)?;
        if chans.is_empty() {
            return Err(config("channel dump holds no frames"));
        }
        Ok(Scenario { frame, channel: ChannelSource::Recorded(Arc::new(chans)) })
    }
}

/// One transmitted and received frame.
#[derive(Clone, Debug)]
pub struct FrameDraw {
    pub chan: ChannelRealization,
    pub tx: TxFrame,
    pub rx: RxGrid,
    pub n0: f64,
}

/// Draws frame `index` of stream `(seed, domain)` at `ebn0_db`. The channel,
/// the bits and the unit-variance noise depend only on `(seed, domain,
/// index)`, so the same index at two SNRs differs only in noise scale.
pub fn draw_frame(scenario: &Scenario, seed: u64, domain: u64, index: u64, ebn0_db: f64) -> Result<FrameDraw> {
    let cfg = &scenario.frame;
    let mut rng = derived_rng(seed, domain, index);
    let chan = match &scenario.channel {
        ChannelSource::Rayleigh => rayleigh_block(cfg, &mut rng),
        ChannelSource::Recorded(list) => list[(index % list.len() as u64) as usize].clone(),
    };
    let tx = TxFrame::random(cfg, &mut rng)?;
    let n0 = ebn0_to_n0(ebn0_db, cfg.rate(), cfg.constellation.bits_per_symbol());
    let rx = receive(cfg, &tx, &chan, n0, &mut rng);
    Ok(FrameDraw { chan, tx, rx, n0 })
}

/// Errors and detector cost of one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameOutcome {
    pub block_errors: Vec<bool>,
    pub bit_errors: usize,
    /// Real multiplications spent in detection, including filter setup.
    pub mults: u64,
}

pub fn evaluate_frame(spec: &PipelineSpec, params: &Params<f64>, scenario: &Scenario, draw: &FrameDraw) -> Result<FrameOutcome> {
    let cfg = &scenario.frame;
    let (res, mults) = counted_scope(|| -> Result<_> {
        let ctx = prepare(spec, cfg, &draw.chan, &draw.rx, draw.n0)?;
        run_receiver(spec, params, cfg, &ctx, Some(&draw.tx.data), false)
    });
    let res = res?;
    Ok(FrameOutcome {
        block_errors: res.block_errors.expect("truth supplied"),
        bit_errors: res.bit_errors.expect("truth supplied"),
        mults,
    })
}
