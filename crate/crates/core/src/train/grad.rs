//! Frozen training batches and hyperparameter gradients.
//!
//! Gradients are exact forward-mode derivatives through the whole receiver,
//! seeded on up to [`LANES`] live coordinates per pass.

use rand::Rng;
use rayon::prelude::*;

use super::loss::{frame_loss, Loss};
use crate::detect::{DetectionContext, DetectorKind};
use crate::error::{training, Result};
use crate::numkit::rng::derived_rng;
use crate::numkit::{Dual, Real};
use crate::pipeline::{flat_len, flat_names, prepare, run_receiver, HyperParamSet, Params, PipelineSpec};
use crate::sim::{domain, draw_frame, Scenario};

/// Derivative directions carried per receiver pass.
pub const LANES: usize = 32;

type D = Dual<LANES>;

/// One received frame with its prepared detector context.
#[derive(Clone, Debug)]
pub struct Sample {
    pub snr_db: f64,
    pub truth: Vec<Vec<u8>>,
    pub ctx: DetectionContext,
}

/// A fixed set of samples; the loss over it is a deterministic function of
/// the parameters.
#[derive(Clone, Debug)]
pub struct Batch {
    pub samples: Vec<Sample>,
}

impl Batch {
    /// Samples `first..first + m` of stream `(seed, domain)`, each at an Eb/N0
    /// drawn uniformly from `snr_db`.
    pub fn draw(
        spec: &PipelineSpec,
        scenario: &Scenario,
        seed: u64,
        domain: u64,
        first: u64,
        m: usize,
        snr_db: (f64, f64),
    ) -> Result<Batch> {
        let (lo, hi) = snr_db;
        let samples = (first..first + m as u64)
            .into_par_iter()
            .map(|k| {
                let mut r = derived_rng(seed, domain + domain::SNR_OFFSET, k);
                let snr = if hi > lo { r.random_range(lo..hi) } else { lo };
                let draw = draw_frame(scenario, seed, domain, k, snr)?;
                let ctx = prepare(spec, &scenario.frame, &draw.chan, &draw.rx, draw.n0)?;
                Ok(Sample { snr_db: snr, truth: draw.tx.data, ctx })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Batch { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Flat coordinates the loss can depend on. The first stage has no
/// detector priors and no decoder priors to subtract, so `alpha[0]`,
/// `beta[0]` and `epsilon[0]` never act; `zeta` only matters for LoCo-PIC
/// and `alpha`, `beta` not at all for the prior-free LMMSE detector.
pub fn live_params(spec: &PipelineSpec) -> Vec<usize> {
    let i = spec.stages();
    let kind = spec.detector;
    (0..flat_len(spec))
        .filter(|&k| {
            let (block, idx) = if k < 5 * i { (k / i, k % i) } else { (5, 0) };
            match block {
                0 | 1 => idx > 0 && kind != DetectorKind::Lmmse,
                3 => idx > 0,
                4 => kind == DetectorKind::LocoPic,
                _ => true,
            }
        })
        .collect()
}

fn sample_loss<T: Real>(
    spec: &PipelineSpec,
    params: &Params<T>,
    scenario: &Scenario,
    s: &Sample,
    loss: Loss,
    clamp: f64,
) -> Result<(T, usize)> {
    let rx = run_receiver(spec, params, &scenario.frame, &s.ctx, None, false)?;
    Ok(frame_loss(loss, &rx.data_llr, &s.truth, clamp))
}

fn check_finite(v: f64, batch: &Batch, what: &str) -> Result<()> {
    if v.is_finite() {
        return Ok(());
    }
    let snrs: Vec<String> = batch.samples.iter().map(|s| format!("{:.2}", s.snr_db)).collect();
    Err(training(format!("non-finite {what} ({v}) on a batch of {} frames at Eb/N0 [{}] dB", batch.len(), snrs.join(", "))))
}

/// Mean loss over the batch.
pub fn batch_loss(params: &HyperParamSet, scenario: &Scenario, batch: &Batch, loss: Loss, clamp: f64) -> Result<f64> {
    let spec = params.spec();
    let p = params.params::<f64>();
    let parts = batch
        .samples
        .par_iter()
        .map(|s| sample_loss(&spec, &p, scenario, s, loss, clamp))
        .collect::<Result<Vec<_>>>()?;
    let (sum, n) = parts.iter().fold((0.0, 0), |(a, n), &(s, k)| (a + s, n + k));
    let v = sum / n.max(1) as f64;
    check_finite(v, batch, "loss")?;
    Ok(v)
}

/// Mean loss and its gradient with respect to every flat coordinate.
/// Dead coordinates (see [`live_params`]) get an exact zero.
pub fn batch_loss_grad(
    params: &HyperParamSet,
    scenario: &Scenario,
    batch: &Batch,
    loss: Loss,
    clamp: f64,
) -> Result<(f64, Vec<f64>)> {
    let spec = params.spec();
    let flat = params.flat();
    let live = live_params(&spec);
    let mut grad = vec![0.0f64; flat.len()];
    let mut value = 0.0;
    let chunks: Vec<&[usize]> = if live.is_empty() { vec![&[]] } else { live.chunks(LANES).collect() };
    for chunk in chunks {
        let mut seeded: Vec<D> = flat.iter().map(|&v| D::constant(v)).collect();
        for (lane, &k) in chunk.iter().enumerate() {
            seeded[k] = D::variable(flat[k], lane);
        }
        let p = Params::from_flat(&spec, &seeded)?;
        let parts = batch
            .samples
            .par_iter()
            .map(|s| sample_loss(&spec, &p, scenario, s, loss, clamp))
            .collect::<Result<Vec<_>>>()?;
        let mut sum = D::constant(0.0);
        let mut n = 0;
        for (s, k) in parts {
            sum += s;
            n += k;
        }
        let mean = sum / n.max(1) as f64;
        value = mean.re;
        for (lane, &k) in chunk.iter().enumerate() {
            grad[k] = mean.du[lane];
        }
    }
    check_finite(value, batch, "loss")?;
    if let Some(k) = grad.iter().position(|g| !g.is_finite()) {
        return Err(training(format!("non-finite gradient for {}", flat_names(&spec)[k])));
    }
    Ok((value, grad))
}

/// Central differences `(f(x + h e_k) - f(x - h e_k)) / 2h` for each `k` in `coords`.
pub fn finite_difference(
    params: &HyperParamSet,
    scenario: &Scenario,
    batch: &Batch,
    loss: Loss,
    clamp: f64,
    h: f64,
    coords: &[usize],
) -> Result<Vec<f64>> {
    let base = params.flat();
    coords
        .iter()
        .map(|&k| {
            let mut p = params.clone();
            let mut x = base.clone();
            x[k] = base[k] + h;
            p.set_flat(&x)?;
            let up = batch_loss(&p, scenario, batch, loss, clamp)?;
            x[k] = base[k] - h;
            p.set_flat(&x)?;
            let down = batch_loss(&p, scenario, batch, loss, clamp)?;
            Ok((up - down) / (2.0 * h))
        })
        .collect()
}

/// One coordinate of a gradient check.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckEntry {
    pub name: String,
    pub analytic: f64,
    pub numeric: f64,
    /// `|a - n| / max(|a|, |n|)`; zero when both are below `floor`.
    pub rel_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheck {
    pub fn max_rel_err(&self) -> f64 {
        self.entries.iter().map(|e| e.rel_err).fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_err() <= tol
    }
}

/// Compares [`batch_loss_grad`] with central differences of step `h` on every
/// coordinate. Coordinates where both magnitudes are at most `floor` are not
/// held to the relative tolerance, but the analytic value must stay within
/// `floor` of the numeric one.
pub fn gradient_check(
    params: &HyperParamSet,
    scenario: &Scenario,
    batch: &Batch,
    loss: Loss,
    clamp: f64,
    h: f64,
    floor: f64,
) -> Result<GradCheck> {
    let spec = params.spec();
    let (_, g) = batch_loss_grad(params, scenario, batch, loss, clamp)?;
    let coords: Vec<usize> = (0..g.len()).collect();
    let fd = finite_difference(params, scenario, batch, loss, clamp, h, &coords)?;
    let names = flat_names(&spec);
    let entries = coords
        .iter()
        .map(|&k| {
            let (a, n) = (g[k], fd[k]);
            let scale = a.abs().max(n.abs());
            let rel_err = if scale > floor {
                (a - n).abs() / scale
            } else if (a - n).abs() <= floor {
                0.0
            } else {
                f64::INFINITY
            };
            GradCheckEntry { name: names[k].clone(), analytic: a, numeric: n, rel_err }
        })
        .collect();
    Ok(GradCheck { entries })
}
