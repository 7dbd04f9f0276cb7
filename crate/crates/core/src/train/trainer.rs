//! Two-phase hyperparameter training.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::grad::{batch_loss, batch_loss_grad, Batch};
use super::loss::{Loss, PROB_CLAMP};
use crate::error::{config, training, Result};
use crate::pipeline::HyperParamSet;
use crate::sim::{domain, Scenario};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub loss: Loss,
    pub batches: usize,
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub phases: Vec<Phase>,
    /// Frames per batch.
    pub batch_size: usize,
    /// Eb/N0 range in dB, sampled uniformly per frame.
    pub snr_db: (f64, f64),
    pub seed: u64,
    #[serde(default = "default_clamp")]
    pub clamp: f64,
    /// Frames in the fixed validation batch.
    #[serde(default = "default_validation_frames")]
    pub validation_frames: usize,
    /// Batches between validation passes.
    #[serde(default = "default_validate_every")]
    pub validate_every: usize,
    /// Where to write the latest good parameters.
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
}

fn default_clamp() -> f64 {
    PROB_CLAMP
}

fn default_validation_frames() -> usize {
    64
}

fn default_validate_every() -> usize {
    50
}

impl Default for TrainConfig {
    /// BCE then LSE, 2500 batches of 40 frames each, Eb/N0 in [-5, 5] dB.
    fn default() -> Self {
        TrainConfig {
            phases: vec![
                Phase { loss: Loss::Bce, batches: 2500, lr: 1e-3 },
                Phase { loss: Loss::Lse, batches: 2500, lr: 1e-4 },
            ],
            batch_size: 40,
            snr_db: (-5.0, 5.0),
            seed: 0,
            clamp: PROB_CLAMP,
            validation_frames: default_validation_frames(),
            validate_every: default_validate_every(),
            checkpoint: None,
        }
    }
}

impl TrainConfig {
    /// Same protocol with `batches` per phase and `batch_size` frames.
    pub fn scaled(batches: usize, batch_size: usize) -> Self {
        let mut c = TrainConfig { batch_size, ..Self::default() };
        c.phases.iter_mut().for_each(|p| p.batches = batches);
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(config("batch size must be at least 1"));
        }
        if !(self.snr_db.0 <= self.snr_db.1) {
            return Err(config("training SNR range must satisfy lo <= hi"));
        }
        if !(self.clamp > 0.0 && self.clamp < 0.5) {
            return Err(config("probability clamp must lie in (0, 0.5)"));
        }
        if self.validate_every == 0 {
            return Err(config("validation interval must be positive"));
        }
        if self.phases.iter().any(|p| !p.lr.is_finite() || p.lr < 0.0) {
            return Err(config("learning rates must be finite and non-negative"));
        }
        Ok(())
    }
}

/// One row of the training curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub phase: String,
    pub batch: usize,
    pub loss: f64,
    pub val_loss: Option<f64>,
    pub lr: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: HyperParamSet,
    pub curve: Vec<CurveRow>,
    /// Validation loss of the last phase's objective before and after training.
    pub init_val: f64,
    pub final_val: f64,
    /// False when the final parameters validated worse than the best seen
    /// and the best were returned instead.
    pub used_final: bool,
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut s = String::from("phase,batch,loss,val_loss,lr\n");
    for r in rows {
        let v = r.val_loss.map(|v| v.to_string()).unwrap_or_default();
        writeln!(s, "{},{},{},{},{}", r.phase, r.batch, r.loss, v, r.lr).expect("writing to a String");
    }
    s
}

/// Trains every scalar of `init` on frames of `scenario`. The receiver
/// structure never changes; damping pairs are projected after each step.
pub fn train(init: &HyperParamSet, scenario: &Scenario, cfg: &TrainConfig) -> Result<TrainOutcome> {
    init.validate()?;
    cfg.validate()?;
    let spec = init.spec();
    let val = Batch::draw(&spec, scenario, cfg.seed, domain::VALIDATION, 0, cfg.validation_frames, cfg.snr_db)?;
    let last_loss = cfg.phases.last().map(|p| p.loss).unwrap_or(Loss::Bce);
    let init_val = batch_loss(init, scenario, &val, last_loss, cfg.clamp)?;

    let mut p = init.clone();
    p.project();
    let mut curve = Vec::new();
    let mut best = (init_val, init.clone());
    let mut next_sample = 0u64;
    let mut theta = p.flat();
    for (pi, phase) in cfg.phases.iter().enumerate() {
        let mut adam = Adam::new(theta.len());
        let is_last = pi + 1 == cfg.phases.len();
        for b in 0..phase.batches {
            let batch = Batch::draw(&spec, scenario, cfg.seed, domain::TRAIN, next_sample, cfg.batch_size, cfg.snr_db)?;
            next_sample += cfg.batch_size as u64;
            let (loss, grad) = match batch_loss_grad(&p, scenario, &batch, phase.loss, cfg.clamp) {
                Ok(v) => v,
                Err(e) => return Err(abort(&p, cfg, e)),
            };
            adam.step(&mut theta, &grad, phase.lr);
            p.set_flat(&theta)?;
            p.project();
            theta = p.flat();
            if theta.iter().any(|t| !t.is_finite()) {
                return Err(abort(&p, cfg, training("parameters became non-finite")));
            }
            let val_loss = if (b + 1) % cfg.validate_every == 0 || b + 1 == phase.batches {
                let v = batch_loss(&p, scenario, &val, phase.loss, cfg.clamp)?;
                if is_last && v < best.0 {
                    best = (v, p.clone());
                }
                if let Some(path) = &cfg.checkpoint {
                    p.save(path)?;
                }
                log::info!("{} batch {}: loss {loss:.5}, validation {v:.5}", phase.loss.name(), b + 1);
                Some(v)
            } else {
                None
            };
            curve.push(CurveRow { phase: phase.loss.name().into(), batch: b + 1, loss, val_loss, lr: phase.lr });
        }
    }
    let final_val = batch_loss(&p, scenario, &val, last_loss, cfg.clamp)?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let (mut out, used_final) = if final_val <= init_val {
        (p, true)
    } else {
        log::warn!("validation loss rose from {init_val:.5} to {final_val:.5}; returning the best checkpoint");
        (best.1, false)
    };
    out.trained_at = Some(format!("unix:{stamp}"));
    out.seed = Some(cfg.seed);
    Ok(TrainOutcome { params: out, curve, init_val, final_val, used_final })
}

fn abort(p: &HyperParamSet, cfg: &TrainConfig, e: crate::Error) -> crate::Error {
    if let Some(path) = &cfg.checkpoint {
        if let Err(w) = p.save(path) {
            log::error!("could not write checkpoint: {w}");
        }
    }
    e
}
