//! Flooding sum-product decoder with per-iteration message damping.
//!
//! LLRs follow `L = log P[b=1] / P[b=0]` throughout, so a check node flips
//! the sign of the usual tanh rule once for every incoming edge.

use serde::{Deserialize, Serialize};

use super::LdpcCode;
use crate::error::{config, Result};
use crate::numkit::Real;

/// Magnitude limit for variable-to-check and check-to-variable messages.
pub const MSG_CLIP: f64 = 30.0;

/// How stored damping weights are turned into applied weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DampingPolicy {
    /// Clamp `mu`, `xi` to `[0, 1]` and rescale them if their sum exceeds one.
    #[default]
    Clamp,
    /// Use the stored values verbatim (the caller keeps them feasible).
    Raw,
}

/// Damping weights `(mu_j, xi_j)` for every global message-passing iteration `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct DampingParams<T: Real = f64> {
    pub mu: Vec<T>,
    pub xi: Vec<T>,
    pub policy: DampingPolicy,
}

impl<T: Real> DampingParams<T> {
    pub fn undamped(n_mp: usize) -> Self {
        DampingParams { mu: vec![T::zero(); n_mp], xi: vec![T::zero(); n_mp], policy: DampingPolicy::Clamp }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Applied `(raw, previous, incoming)` blend weights for iteration `j` (0-based).
    pub fn weights(&self, j: usize) -> (T, T, T) {
        let (mut mu, mut xi) = (self.mu[j], self.xi[j]);
        if self.policy == DampingPolicy::Clamp {
            mu = mu.clip(0.0, 1.0);
            xi = xi.clip(0.0, 1.0);
            let s = mu + xi;
            if s.value() > 1.0 {
                mu /= s;
                xi /= s;
            }
        }
        (T::one() - mu - xi, mu, xi)
    }
}

/// Damped check-to-variable messages, one per edge in check-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderState<T: Real = f64> {
    pub msgs: Vec<T>,
    /// Global iterations performed so far.
    pub iteration: usize,
}

impl<T: Real> DecoderState<T> {
    pub fn new(code: &LdpcCode) -> Self {
        DecoderState { msgs: vec![T::zero(); code.edges()], iteration: 0 }
    }

    pub fn reset(&mut self) {
        self.msgs.iter_mut().for_each(|m| *m = T::zero());
        self.iteration = 0;
    }
}

/// Multiplies every forwarded message by `gamma`.
pub fn scale_state<T: Real>(state: &mut DecoderState<T>, gamma: T) {
    for m in state.msgs.iter_mut() {
        *m *= gamma;
    }
}

/// `1` iff `L > 0`; ties decide `0`.
pub fn hard_decide<T: Real>(llrs: &[T]) -> Vec<u8> {
    llrs.iter().map(|l| (l.value() > 0.0) as u8).collect()
}

/// Runs `n_iters` flooding iterations starting from `state`, using damping
/// slots `j_offset..j_offset + n_iters`, and returns the a-posteriori LLRs
/// `L_A + sum of damped incoming messages`.
pub fn decode_siso<T: Real>(
    code: &LdpcCode,
    la: &[T],
    state: &mut DecoderState<T>,
    n_iters: usize,
    damping: &DampingParams<T>,
    j_offset: usize,
) -> Result<Vec<T>> {
    if state.msgs.len() != code.edges() {
        return Err(config(format!("decoder state has {} edges, code has {}", state.msgs.len(), code.edges())));
    }
    if la.len() != code.n() {
        return Err(config(format!("decoder input has {} LLRs, code length is {}", la.len(), code.n())));
    }
    if n_iters == 0 || j_offset + n_iters > damping.len() {
        return Err(config(format!(
            "iterations {}..{} outside the damping schedule of length {}",
            j_offset,
            j_offset + n_iters,
            damping.len()
        )));
    }
    let starts = code.cn_start();
    let edge_vn = code.edge_vn();
    let max_deg = starts.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
    let mut scratch = CheckScratch::new(max_deg);
    let mut total = vec![T::zero(); code.n()];

    for j in j_offset..j_offset + n_iters {
        accumulate(la, &state.msgs, edge_vn, &mut total);
        let (w_raw, w_prev, w_in) = damping.weights(j);
        for c in 0..code.m() {
            let (e0, e1) = (starts[c], starts[c + 1]);
            let msgs = &mut state.msgs[e0..e1];
            for (k, &v) in edge_vn[e0..e1].iter().enumerate() {
                scratch.phi[k] = (total[v as usize] - msgs[k]).clip(-MSG_CLIP, MSG_CLIP);
            }
            check_update(&mut scratch, e1 - e0);
            for k in 0..e1 - e0 {
                msgs[k] = w_raw * scratch.out[k] + w_prev * msgs[k] + w_in * scratch.phi[k];
            }
        }
        state.iteration += 1;
    }
    accumulate(la, &state.msgs, edge_vn, &mut total);
    Ok(total)
}

fn accumulate<T: Real>(la: &[T], msgs: &[T], edge_vn: &[u32], total: &mut [T]) {
    total.copy_from_slice(la);
    for (m, &v) in msgs.iter().zip(edge_vn) {
        total[v as usize] += *m;
    }
}

struct CheckScratch<T> {
    phi: Vec<T>,
    out: Vec<T>,
    t: Vec<T>,
    comp: Vec<T>,
    neg: Vec<bool>,
    suf_t: Vec<T>,
    suf_c: Vec<T>,
}

impl<T: Real> CheckScratch<T> {
    fn new(d: usize) -> Self {
        let z = || vec![T::zero(); d + 1];
        CheckScratch { phi: z(), out: z(), t: z(), comp: z(), neg: vec![false; d], suf_t: z(), suf_c: z() }
    }
}

/// Exact sum-product check update on `scratch.phi[..d]`.
///
/// With `q = exp(-|phi|)`, each input contributes `t = tanh(|phi|/2) = (1-q)/(1+q)`
/// and its complement `1 - t = 2q/(1+q)`. Complements of products are
/// accumulated as `a + b - ab`, so `1 - prod t` never suffers cancellation
/// and `|out| = 2 atanh(P) = ln(1 + 2P / (1 - P))` stays accurate near saturation.
fn check_update<T: Real>(s: &mut CheckScratch<T>, d: usize) {
    if d == 2 {
        s.out[0] = s.phi[1];
        s.out[1] = s.phi[0];
        return;
    }
    let one = T::one();
    let mut neg_total = d % 2 == 1;
    for k in 0..d {
        let p = s.phi[k];
        s.neg[k] = p.value() < 0.0;
        neg_total ^= s.neg[k];
        let q = (-p.abs()).exp();
        let r = (one + q).recip();
        s.t[k] = (one - q) * r;
        s.comp[k] = (q + q) * r;
    }
    s.suf_t[d] = one;
    s.suf_c[d] = T::zero();
    for k in (0..d).rev() {
        s.suf_t[k] = s.suf_t[k + 1] * s.t[k];
        s.suf_c[k] = s.suf_c[k + 1] + s.comp[k] - s.suf_c[k + 1] * s.comp[k];
    }
    let (mut pre_t, mut pre_c) = (one, T::zero());
    for k in 0..d {
        let p = pre_t * s.suf_t[k + 1];
        let a = pre_c + s.suf_c[k + 1] - pre_c * s.suf_c[k + 1];
        let mag = if p.value() == 0.0 { T::zero() } else { ((p + p) / a).ln_1p().min(T::cst(MSG_CLIP)) };
        s.out[k] = if neg_total ^ s.neg[k] { -mag } else { mag };
        pre_t *= s.t[k];
        pre_c = pre_c + s.comp[k] - pre_c * s.comp[k];
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::ldpc::code::tests::toy;
    use crate::ldpc::peg_regular;
    use crate::numkit::rng::rng_from_seed;
    use rand::Rng;

    /// Pairwise box-plus in the `log P0/P1` domain.
    fn boxplus(a: f64, b: f64) -> f64 {
        a.signum() * b.signum() * a.abs().min(b.abs()) + (-(a + b).abs()).exp().ln_1p()
            - (-(a - b).abs()).exp().ln_1p()
    }

    /// Straightforward undamped flooding reference built on [`boxplus`].
    pub(crate) fn reference_decode(code: &LdpcCode, la: &[f64], iters: usize) -> Vec<f64> {
        let mut msg: Vec<Vec<f64>> = (0..code.m()).map(|c| vec![0.0; code.check(c).len()]).collect();
        let post = |msg: &Vec<Vec<f64>>| {
            let mut t = la.to_vec();
            for c in 0..code.m() {
                for (k, &v) in code.check(c).iter().enumerate() {
                    t[v] += msg[c][k];
                }
            }
            t
        };
        for _ in 0..iters {
            let total = post(&msg);
            for c in 0..code.m() {
                let vs = code.check(c);
                let phi: Vec<f64> =
                    vs.iter().enumerate().map(|(k, &v)| (total[v] - msg[c][k]).clamp(-MSG_CLIP, MSG_CLIP)).collect();
                for k in 0..vs.len() {
                    // Work in the log P0/P1 domain, then flip back.
                    let acc = (0..vs.len()).filter(|&i| i != k).map(|i| -phi[i]).reduce(boxplus).unwrap();
                    msg[c][k] = (-acc).clamp(-MSG_CLIP, MSG_CLIP);
                }
            }
        }
        post(&msg)
    }

    #[test]
    fn toy_single_iteration_passes_through() {
        let code = toy();
        let mut st = DecoderState::new(&code);
        let ld = decode_siso(&code, &[1.25, -0.5], &mut st, 1, &DampingParams::undamped(1), 0).unwrap();
        assert_eq!(ld, vec![0.75, 0.75]);
    }

    #[test]
    fn damping_blend_arithmetic() {
        let d = DampingParams { mu: vec![0.25], xi: vec![0.25], policy: DampingPolicy::Clamp };
        let (a, b, c) = d.weights(0);
        assert_eq!(a * 3.0 + b * 1.0 + c * 2.0, 2.25);
        let over = DampingParams { mu: vec![0.9], xi: vec![0.6], policy: DampingPolicy::Clamp };
        let (a, b, c) = over.weights(0);
        assert!(a.abs() < 1e-15 && (b + c - 1.0).abs() < 1e-15);
        let raw = DampingParams { mu: vec![0.9], xi: vec![0.6], policy: DampingPolicy::Raw };
        assert!((raw.weights(0).0 + 0.5).abs() < 1e-15);
    }

    #[test]
    fn undamped_matches_reference() {
        let mut rng = rng_from_seed(4);
        for inst in 0..20 {
            let code = peg_regular(96, 3, 6, inst).unwrap();
            let la: Vec<f64> = (0..96).map(|_| rng.random_range(-6.0..6.0)).collect();
            let mut st = DecoderState::new(&code);
            let got = decode_siso(&code, &la, &mut st, 8, &DampingParams::undamped(8), 0).unwrap();
            let want = reference_decode(&code, &la, 8);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-9 * w.abs().max(1.0), "{g} vs {w}");
            }
        }
    }

    #[test]
    fn chained_calls_equal_single_call() {
        let code = peg_regular(96, 3, 6, 9).unwrap();
        let mut rng = rng_from_seed(5);
        let la: Vec<f64> = (0..96).map(|_| rng.random_range(-3.0..3.0)).collect();
        let damp = DampingParams {
            mu: (0..12).map(|j| 0.02 * j as f64).collect(),
            xi: (0..12).map(|j| 0.3 - 0.02 * j as f64).collect(),
            policy: DampingPolicy::Clamp,
        };
        let mut one = DecoderState::new(&code);
        let a = decode_siso(&code, &la, &mut one, 12, &damp, 0).unwrap();
        let mut two = DecoderState::new(&code);
        decode_siso(&code, &la, &mut two, 6, &damp, 0).unwrap();
        scale_state(&mut two, 1.0);
        let b = decode_siso(&code, &la, &mut two, 6, &damp, 6).unwrap();
        assert_eq!(a, b);
        assert_eq!(one, two);
    }

    #[test]
    fn saturated_codeword_decodes_in_one_iteration() {
        let code = LdpcCode::bundled();
        let mut rng = rng_from_seed(6);
        let data: Vec<u8> = (0..code.data_len()).map(|_| rng.random::<bool>() as u8).collect();
        let word = code.encode(&data).unwrap();
        let la: Vec<f64> = word.iter().map(|&b| if b == 1 { 40.0 } else { -40.0 }).collect();
        let mut st = DecoderState::new(&code);
        let ld = decode_siso(&code, &la, &mut st, 1, &DampingParams::undamped(1), 0).unwrap();
        let hard = hard_decide(&ld);
        assert_eq!(hard, word);
        assert_eq!(code.syndrome_weight(&hard), 0);
    }

    #[test]
    fn state_scaling_and_errors() {
        let code = toy();
        let mut st = DecoderState { msgs: vec![2.0, -4.0], iteration: 3 };
        scale_state(&mut st, 0.5);
        assert_eq!(st.msgs, vec![1.0, -2.0]);
        scale_state(&mut st, 0.0);
        assert!(st.msgs.iter().all(|m| *m == 0.0));
        let mut bad = DecoderState { msgs: vec![0.0; 3], iteration: 0 };
        assert!(decode_siso(&code, &[0.0, 0.0], &mut bad, 1, &DampingParams::undamped(1), 0).is_err());
        let mut ok = DecoderState::new(&code);
        assert!(decode_siso(&code, &[0.0, 0.0], &mut ok, 2, &DampingParams::undamped(1), 0).is_err());
    }

    #[test]
    fn hard_decision_rule() {
        assert_eq!(hard_decide(&[3.2, -0.1, 0.0, 1e9, -1e9]), vec![1, 0, 0, 1, 0]);
    }
}
