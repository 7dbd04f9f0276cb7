//! Channel realizations, pilot-based estimation and noise whitening.

use num_complex::Complex64;
use rand::Rng;

use super::frame::{FrameConfig, RxGrid};
use crate::error::{config, input, numerical, Result};
use crate::numkit::rng::complex_normal;
use crate::numkit::{hpd_inv_sqrt, CMat};

/// Per-RE channel matrices (`B x U`).
#[derive(Clone, Debug, PartialEq)]
pub enum ChannelGrid {
    /// One matrix for the whole frame.
    Block(CMat),
    /// One matrix per RE, indexed by [`FrameConfig::re_index`].
    PerRe(Vec<CMat>),
}

impl ChannelGrid {
    pub fn at(&self, re: usize) -> &CMat {
        match self {
            ChannelGrid::Block(h) => h,
            ChannelGrid::PerRe(hs) => &hs[re],
        }
    }
}

/// True channel, its receiver-side estimate and the estimate's error level.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    pub h: ChannelGrid,
    pub estimate: ChannelGrid,
    /// Per-entry variance of `estimate - h`; zero for perfect CSI.
    pub error_var: f64,
}

impl ChannelRealization {
    pub fn perfect(h: ChannelGrid) -> Self {
        ChannelRealization { estimate: h.clone(), h, error_var: 0.0 }
    }

    /// Covariance of the effective noise `E s + n` for unit-energy symbols of
    /// `users` streams: `(users * error_var + n0) I`.
    pub fn effective_noise(&self, users: usize, n0: f64) -> f64 {
        users as f64 * self.error_var + n0
    }
}

/// Frequency-flat block fading: one `B x U` matrix with i.i.d. `CN(0, 1)` entries.
pub fn rayleigh_block(cfg: &FrameConfig, rng: &mut impl Rng) -> ChannelRealization {
    let h = CMat::from_fn(cfg.antennas, cfg.users, |_, _| complex_normal(rng, 1.0));
    ChannelRealization::perfect(ChannelGrid::Block(h))
}

/// `N0 = 1 / (R Q 10^(Eb/N0 / 10))` for unit-energy symbols; pilot overhead is not included.
pub fn ebn0_to_n0(ebn0_db: f64, rate: f64, bits_per_symbol: usize) -> f64 {
    1.0 / (rate * bits_per_symbol as f64 * 10f64.powf(ebn0_db / 10.0))
}

/// Least-squares estimates at each user's pilot REs, linearly interpolated
/// over subcarriers and then over OFDM symbols (nearest value outside the
/// pilot span). Returns the per-RE estimate and the per-entry error variance.
pub fn ls_estimate(cfg: &FrameConfig, rx: &RxGrid, n0: f64) -> Result<(ChannelGrid, f64)> {
    if cfg.pilot_symbols.is_empty() {
        return Err(config("channel estimation needs pilot symbols"));
    }
    let (w_len, t_len, b_len) = (cfg.subcarriers, cfg.symbols, cfg.antennas);
    // est[u][t * W + w] holds the B-vector estimate of column u.
    let mut est = vec![vec![vec![Complex64::new(0.0, 0.0); b_len]; t_len * w_len]; cfg.users];
    for (u, col) in est.iter_mut().enumerate() {
        let slots = cfg.pilot_slots(u);
        let comb: Vec<usize> = (0..w_len).filter(|&w| cfg.pilot_comb(u, w)).collect();
        if slots.is_empty() || comb.is_empty() {
            return Err(config(format!("user {u} has no pilot REs")));
        }
        for &t in &slots {
            let at: Vec<Vec<Complex64>> = comb
                .iter()
                .map(|&w| {
                    let p = cfg.pilot_value(u, w);
                    rx.y[cfg.re_index(t, w)].iter().map(|y| y / p).collect()
                })
                .collect();
            for w in 0..w_len {
                col[cfg.re_index(t, w)] = interpolate(&comb, &at, w);
            }
        }
        for t in 0..t_len {
            if slots.contains(&t) {
                continue;
            }
            for w in 0..w_len {
                let at: Vec<Vec<Complex64>> = slots.iter().map(|&s| col[cfg.re_index(s, w)].clone()).collect();
                col[cfg.re_index(t, w)] = interpolate(&slots, &at, t);
            }
        }
    }
    let grid = (0..t_len * w_len)
        .map(|re| CMat::from_fn(b_len, cfg.users, |b, u| est[u][re][b]))
        .collect();
    Ok((ChannelGrid::PerRe(grid), n0))
}

/// Piecewise-linear interpolation of vectors known at sorted positions `xs`.
fn interpolate(xs: &[usize], vals: &[Vec<Complex64>], x: usize) -> Vec<Complex64> {
    let hi = xs.partition_point(|&p| p < x);
    if hi < xs.len() && xs[hi] == x {
        return vals[hi].clone();
    }
    if hi == 0 {
        return vals[0].clone();
    }
    if hi == xs.len() {
        return vals[xs.len() - 1].clone();
    }
    let (x0, x1) = (xs[hi - 1] as f64, xs[hi] as f64);
    let f = (x as f64 - x0) / (x1 - x0);
    vals[hi - 1].iter().zip(&vals[hi]).map(|(a, b)| a * (1.0 - f) + b * f).collect()
}

/// Whitens one observation with `C = C_E + N0 I`: returns `(C^{-1/2} y, C^{-1/2} H)`.
/// A scaled-identity `C` reduces to a division by its square root.
pub fn whiten(y: &[Complex64], h: &CMat, c_e: &CMat, n0: f64) -> Result<(Vec<Complex64>, CMat)> {
    let b = h.rows();
    if y.len() != b || c_e.rows() != b || c_e.cols() != b {
        return Err(config("whiten: dimensions of y, H and C_E disagree"));
    }
    if y.iter().any(|v| !v.is_finite()) || !h.is_finite() {
        return Err(input("whiten: non-finite observation or channel"));
    }
    let c = c_e.add_diag(n0);
    let scaled_identity =
        (0..b).all(|i| (0..b).all(|j| if i == j { c[(i, i)] == c[(0, 0)] } else { c[(i, j)] == Complex64::new(0.0, 0.0) }));
    if scaled_identity {
        let s = c[(0, 0)].re;
        if s <= 0.0 || c[(0, 0)].im != 0.0 {
            return Err(numerical(format!("noise covariance {s} is not positive")));
        }
        let k = 1.0 / s.sqrt();
        return Ok((y.iter().map(|v| v * k).collect(), h.scale(k)));
    }
    let w = hpd_inv_sqrt(&c)?;
    Ok((w.matvec(y), w.matmul(h)?))
}
