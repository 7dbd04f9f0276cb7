//! The unrolled detect/decode loop.

use num_complex::Complex;

use super::params::{CsiMode, Params, PipelineSpec};
use crate::detect::{detect, DetectionContext, Observation};
use crate::error::{config, Result};
use crate::ldpc::{decode_siso, hard_decide, scale_state, DecoderState};
use crate::numkit::Real;
use crate::phy::{ls_estimate, ChannelRealization, FrameConfig, RxGrid};

/// `L^A_Det = alpha L^D_Dec - beta L^A_Dec`
pub fn exchange_to_detector<T: Real>(ld_dec: &[Vec<T>], la_dec: &[Vec<T>], alpha: T, beta: T) -> Result<Vec<Vec<T>>> {
    affine(ld_dec, la_dec, alpha, beta)
}

/// `L^A_Dec = delta L^E_Det - epsilon L^A_Det`
pub fn exchange_to_decoder<T: Real>(le_det: &[Vec<T>], la_det: &[Vec<T>], delta: T, epsilon: T) -> Result<Vec<Vec<T>>> {
    affine(le_det, la_det, delta, epsilon)
}

fn affine<T: Real>(a: &[Vec<T>], b: &[Vec<T>], wa: T, wb: T) -> Result<Vec<Vec<T>>> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.len() != y.len()) {
        return Err(config("LLR exchange between arrays of different shapes"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| wa * p - wb * q).collect()).collect())
}

/// Builds the whitened observation and detector context for one received
/// frame according to the CSI mode of `spec`.
pub fn prepare(
    spec: &PipelineSpec,
    cfg: &FrameConfig,
    chan: &ChannelRealization,
    rx: &RxGrid,
    n0: f64,
) -> Result<DetectionContext> {
    let obs = match spec.csi {
        CsiMode::Perfect => Observation::from_frame(cfg, &ChannelRealization::perfect(chan.h.clone()), rx, n0)?,
        CsiMode::Estimated => {
            let (estimate, error_var) = ls_estimate(cfg, rx, n0)?;
            let est = ChannelRealization { h: chan.h.clone(), estimate, error_var };
            Observation::from_frame(cfg, &est, rx, n0)?
        }
    };
    DetectionContext::new(&obs, spec.detector)
}

/// LLRs after one detector/decoder stage.
#[derive(Clone, Debug)]
pub struct StageSnapshot<T: Real> {
    /// Detector output `L^E_Det`, `U x K`.
    pub det: Vec<Vec<T>>,
    /// Decoder APP LLRs `L^D_Dec`, `U x K`.
    pub dec: Vec<Vec<T>>,
    pub s_hat: Vec<Complex<T>>,
}

#[derive(Clone, Debug)]
pub struct RxResult<T: Real> {
    /// Final APP LLRs of the information bits, `U x D`.
    pub data_llr: Vec<Vec<T>>,
    /// Hard decisions on `data_llr`.
    pub decoded: Vec<Vec<u8>>,
    /// Per-user block errors when the transmitted bits were supplied.
    pub block_errors: Option<Vec<bool>>,
    pub bit_errors: Option<usize>,
    /// Filled only when requested.
    pub snapshots: Vec<StageSnapshot<T>>,
    /// Detector variances raised to the floor, summed over stages.
    pub floored: usize,
}

/// Runs all stages of `spec` on a prepared frame.
///
/// Stage `i` detects with priors `alpha_i L^D - beta_i L^A_Dec` (none in the
/// first stage), hands `delta_i L^E - epsilon_i L^A_Det` to the decoder and
/// runs `N_i` iterations. Messages entering stage `i > 0` are scaled by
/// `gamma_{i-1}`.
pub fn run_receiver<T: Real>(
    spec: &PipelineSpec,
    params: &Params<T>,
    cfg: &FrameConfig,
    ctx: &DetectionContext,
    truth: Option<&[Vec<u8>]>,
    keep_snapshots: bool,
) -> Result<RxResult<T>> {
    spec.validate()?;
    params.check(spec)?;
    if ctx.kind != spec.detector {
        return Err(config(format!("context prepared for {} but the pipeline uses {}", ctx.kind, spec.detector)));
    }
    if ctx.users() != cfg.users || ctx.data_res() != cfg.data_res() {
        return Err(config("detector context does not match the frame"));
    }
    let code = &cfg.code;
    let c = &cfg.constellation;
    let damping = params.damping();
    let mut states: Vec<DecoderState<T>> = (0..cfg.users).map(|_| DecoderState::new(code)).collect();
    let zeros = vec![vec![T::zero(); code.n()]; cfg.users];
    let mut la_det: Option<Vec<Vec<T>>> = None;
    let mut ld_dec = Vec::new();
    let mut snapshots = Vec::new();
    let mut floored = 0;
    let mut j = 0;
    for (i, &n_i) in spec.iters.iter().enumerate() {
        if i > 0 {
            for st in states.iter_mut() {
                scale_state(st, params.gamma[i - 1]);
            }
        }
        let zeta = params.zeta[i];
        let det = detect(ctx, la_det.as_deref(), zeta, i == 0, c)?;
        floored += det.floored;
        let la_dec =
            exchange_to_decoder(&det.llr, la_det.as_deref().unwrap_or(&zeros), params.delta[i], params.epsilon[i])?;
        ld_dec = la_dec
            .iter()
            .zip(states.iter_mut())
            .map(|(la, st)| decode_siso(code, la, st, n_i, &damping, j))
            .collect::<Result<Vec<_>>>()?;
        j += n_i;
        if i + 1 < spec.stages() {
            la_det = Some(exchange_to_detector(&ld_dec, &la_dec, params.alpha[i + 1], params.beta[i + 1])?);
        }
        if keep_snapshots {
            snapshots.push(StageSnapshot { det: det.llr, dec: ld_dec.clone(), s_hat: det.s_hat });
        }
    }
    let data_llr: Vec<Vec<T>> = ld_dec.iter().map(|l| code.extract_data(l)).collect();
    let decoded: Vec<Vec<u8>> = data_llr.iter().map(|l| hard_decide(l)).collect();
    let (block_errors, bit_errors) = match truth {
        Some(d) => {
            if d.len() != cfg.users || d.iter().any(|x| x.len() != cfg.data_bits()) {
                return Err(config("ground truth does not match the frame"));
            }
            let be = decoded.iter().zip(d).map(|(a, b)| a != b).collect();
            let bits = decoded.iter().zip(d).map(|(a, b)| a.iter().zip(b).filter(|(x, y)| x != y).count()).sum();
            (Some(be), Some(bits))
        }
        None => (None, None),
    };
    Ok(RxResult { data_llr, decoded, block_errors, bit_errors, snapshots, floored })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{lmmse, mmse_pic, DetectorKind};
    use crate::ldpc::DampingParams;
    use crate::numkit::rng::rng_from_seed;
    use crate::numkit::CMat;
    use crate::phy::{ebn0_to_n0, rayleigh_block, receive, ChannelGrid, TxFrame};
    use crate::pipeline::params::classical_init;

    #[test]
    fn exchange_examples() {
        let r = exchange_to_detector(&[vec![5.0]], &[vec![2.0]], 1.0, 0.0).unwrap();
        assert_eq!(r, vec![vec![5.0]]);
        assert_eq!(exchange_to_detector(&[vec![5.0]], &[vec![2.0]], 1.0, 1.0).unwrap(), vec![vec![3.0]]);
        assert_eq!(exchange_to_detector(&[vec![4.0]], &[vec![2.0]], 0.5, 0.25).unwrap(), vec![vec![1.5]]);
        assert_eq!(exchange_to_decoder(&[vec![3.0]], &[vec![1.0]], 1.0, 0.0).unwrap(), vec![vec![3.0]]);
        assert_eq!(exchange_to_decoder(&[vec![3.0]], &[vec![1.0]], 1.0, 1.0).unwrap(), vec![vec![2.0]]);
        assert_eq!(exchange_to_decoder(&[vec![3.0, -7.0]], &[vec![1.0, 2.0]], 0.0, 0.0).unwrap(), vec![vec![0.0, 0.0]]);
        assert!(exchange_to_decoder(&[vec![3.0]], &[vec![1.0, 2.0]], 1.0, 0.0).is_err());
    }

    fn frame(seed: u64, ebn0: f64) -> (FrameConfig, ChannelRealization, TxFrame, RxGrid, f64) {
        let cfg = FrameConfig::rayleigh_default();
        let mut rng = rng_from_seed(seed);
        let chan = rayleigh_block(&cfg, &mut rng);
        let tx = TxFrame::random(&cfg, &mut rng).unwrap();
        let n0 = ebn0_to_n0(ebn0, cfg.rate(), 4);
        let rx = receive(&cfg, &tx, &chan, n0, &mut rng);
        (cfg, chan, tx, rx, n0)
    }

    /// Plain IDD with extrinsic exchange and forwarded decoder messages.
    fn reference_idd(cfg: &FrameConfig, ctx: &DetectionContext, iters: &[usize]) -> Vec<Vec<f64>> {
        let code = &cfg.code;
        let c = &cfg.constellation;
        let n_mp: usize = iters.iter().sum();
        let damping = DampingParams { policy: crate::ldpc::DampingPolicy::Raw, ..DampingParams::undamped(n_mp) };
        let mut states: Vec<DecoderState<f64>> = (0..cfg.users).map(|_| DecoderState::new(code)).collect();
        let mut prior: Option<Vec<Vec<f64>>> = None;
        let mut app = Vec::new();
        let mut j = 0;
        for &n in iters {
            let out = match &prior {
                None => lmmse::<f64>(ctx, c),
                Some(p) => mmse_pic(ctx, Some(p), c).unwrap(),
            };
            app = out
                .llr
                .iter()
                .zip(states.iter_mut())
                .map(|(l, st)| decode_siso(code, l, st, n, &damping, j).unwrap())
                .collect::<Vec<_>>();
            j += n;
            // extrinsic information of the decoder
            prior = Some(app.iter().zip(&out.llr).map(|(a, l)| a.iter().zip(l).map(|(x, y)| x - y).collect()).collect());
        }
        app.iter().map(|l| code.extract_data(l)).collect()
    }

    #[test]
    fn classical_extrinsic_pipeline_matches_reference_idd() {
        let spec = PipelineSpec::even(DetectorKind::MmsePic, 3, 12).unwrap();
        let params = classical_init(&spec).with_extrinsic_feedback().params::<f64>();
        for seed in 0..6 {
            let (cfg, chan, tx, rx, n0) = frame(100 + seed, 3.0);
            let ctx = prepare(&spec, &cfg, &chan, &rx, n0).unwrap();
            let got = run_receiver(&spec, &params, &cfg, &ctx, Some(&tx.data), false).unwrap();
            let want = reference_idd(&cfg, &ctx, &spec.iters);
            assert_eq!(got.data_llr, want);
        }
    }

    #[test]
    fn noiseless_identity_channel_decodes_every_spec() {
        let cfg = FrameConfig::rayleigh_default();
        let mut rng = rng_from_seed(3);
        let chan = ChannelRealization::perfect(ChannelGrid::Block(CMat::identity(4)));
        let tx = TxFrame::random(&cfg, &mut rng).unwrap();
        let rx = receive(&cfg, &tx, &chan, 0.0, &mut rng);
        for (kind, i) in [(DetectorKind::Lmmse, 1), (DetectorKind::MmsePic, 2), (DetectorKind::LocoPic, 3)] {
            let spec = PipelineSpec::even(kind, i, 12).unwrap();
            // a tiny positive noise level keeps the whitening finite
            let ctx = prepare(&spec, &cfg, &chan, &rx, 1e-6).unwrap();
            let p = classical_init(&spec).params::<f64>();
            let r = run_receiver(&spec, &p, &cfg, &ctx, Some(&tx.data), true).unwrap();
            assert_eq!(r.block_errors.unwrap(), vec![false; 4]);
            assert_eq!(r.bit_errors, Some(0));
            assert_eq!(r.snapshots.len(), i);
        }
    }

    #[test]
    fn later_stage_alpha_leaves_first_stage_untouched() {
        let spec = PipelineSpec::even(DetectorKind::MmsePic, 2, 12).unwrap();
        let (cfg, chan, _, rx, n0) = frame(5, 2.0);
        let ctx = prepare(&spec, &cfg, &chan, &rx, n0).unwrap();
        let base = classical_init(&spec);
        let mut moved = base.clone();
        moved.alpha[1] = 0.6;
        let a = run_receiver(&spec, &base.params::<f64>(), &cfg, &ctx, None, true).unwrap();
        let b = run_receiver(&spec, &moved.params::<f64>(), &cfg, &ctx, None, true).unwrap();
        assert_eq!(a.snapshots[0].det, b.snapshots[0].det);
        assert_eq!(a.snapshots[0].dec, b.snapshots[0].dec);
        assert_ne!(a.snapshots[1].det, b.snapshots[1].det);
    }

    #[test]
    fn estimated_csi_runs() {
        let spec = PipelineSpec::even(DetectorKind::LocoPic, 2, 12).unwrap().with_csi(CsiMode::Estimated);
        let (cfg, chan, tx, rx, n0) = frame(9, 12.0);
        let ctx = prepare(&spec, &cfg, &chan, &rx, n0).unwrap();
        assert_eq!(ctx.filters.len(), cfg.data_res());
        let r = run_receiver(&spec, &classical_init(&spec).params::<f64>(), &cfg, &ctx, Some(&tx.data), false).unwrap();
        assert_eq!(r.bit_errors, Some(0));
    }

    #[test]
    fn mismatched_inputs_are_config_errors() {
        let spec = PipelineSpec::even(DetectorKind::MmsePic, 2, 12).unwrap();
        let (cfg, chan, _, rx, n0) = frame(1, 2.0);
        let ctx = prepare(&spec, &cfg, &chan, &rx, n0).unwrap();
        let other = PipelineSpec::even(DetectorKind::MmsePic, 3, 12).unwrap();
        let p = classical_init(&other).params::<f64>();
        assert!(matches!(run_receiver(&spec, &p, &cfg, &ctx, None, false), Err(crate::Error::Config(_))));
        let loco = PipelineSpec::even(DetectorKind::LocoPic, 2, 12).unwrap();
        let p = classical_init(&loco).params::<f64>();
        assert!(matches!(run_receiver(&loco, &p, &cfg, &ctx, None, false), Err(crate::Error::Config(_))));
    }
}
