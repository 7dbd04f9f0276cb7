//! Bit-wise and block-wise training losses on data-bit LLRs.

use serde::{Deserialize, Serialize};

use crate::numkit::Real;

/// Default probability clamp.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    /// Binary cross entropy averaged over all data bits.
    Bce,
    /// Normalized log-sum-exp of the per-bit BCE, averaged over user blocks.
    Lse,
}

impl Loss {
    pub fn name(&self) -> &'static str {
        match self {
            Loss::Bce => "bce",
            Loss::Lse => "lse",
        }
    }
}

/// `-d ln p - (1 - d) ln(1 - p)` with `p` clamped to `[clamp, 1 - clamp]`.
pub fn bce_loss(d: u8, p: f64, clamp: f64) -> f64 {
    let p = p.clamp(clamp, 1.0 - clamp);
    if d == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// BCE of bit `d` against `p = sigmoid(llr)`. Uses `1 - sigmoid(l) = sigmoid(-l)`
/// so that the clamp is the only source of saturation.
pub fn bce_from_llr<T: Real>(d: u8, llr: T, clamp: f64) -> T {
    let s = if d == 1 { llr } else { -llr };
    -s.sigmoid().clip(clamp, 1.0 - clamp).ln()
}

/// `ln(sum_k exp(l_k) - D + 1)` for the per-bit losses `l_k >= 0` of one block.
pub fn lse_loss<T: Real>(bce: &[T]) -> T {
    if bce.is_empty() {
        return T::zero();
    }
    let m = bce.iter().map(|l| l.value()).fold(f64::NEG_INFINITY, f64::max);
    if m <= 30.0 {
        // sum exp(l) - D + 1 = 1 + sum expm1(l), free of cancellation
        let mut acc = T::zero();
        for &l in bce {
            acc += l.exp_m1();
        }
        return acc.ln_1p();
    }
    let mut acc = T::zero();
    for &l in bce {
        acc += (l - m).exp();
    }
    let d = bce.len() as f64;
    (acc - (-m).exp() * (d - 1.0)).ln() + m
}

/// Sum of the loss over one frame and the number of terms it averages over
/// (bits for BCE, user blocks for LSE).
pub fn frame_loss<T: Real>(loss: Loss, llr: &[Vec<T>], truth: &[Vec<u8>], clamp: f64) -> (T, usize) {
    let mut sum = T::zero();
    let mut n = 0;
    for (l, d) in llr.iter().zip(truth) {
        let bits = l.iter().zip(d).map(|(&l, &d)| bce_from_llr(d, l, clamp));
        match loss {
            Loss::Bce => {
                for b in bits {
                    sum += b;
                }
                n += d.len();
            }
            Loss::Lse => {
                let v: Vec<T> = bits.collect();
                sum += lse_loss(&v);
                n += 1;
            }
        }
    }
    (sum, n)
}
