//! Whitened per-RE observations grouped by coherent channel.

use num_complex::Complex64;

use crate::error::{config, input, Result};
use crate::numkit::CMat;
use crate::phy::{whiten, ChannelGrid, ChannelRealization, FrameConfig, RxGrid};

/// Data REs that share one (whitened) channel matrix.
#[derive(Clone, Debug)]
pub struct CoherentGroup {
    pub h: CMat,
    /// Data RE indices `v` covered by this group.
    pub res: Vec<usize>,
}

/// Whitened model `y~ = H~ s + n~` with unit-variance noise on every data RE.
#[derive(Clone, Debug)]
pub struct Observation {
    pub groups: Vec<CoherentGroup>,
    /// `y[v]`: whitened receive vector of data RE `v`.
    pub y: Vec<Vec<Complex64>>,
}

impl Observation {
    pub fn users(&self) -> usize {
        self.groups.first().map_or(0, |g| g.h.cols())
    }

    pub fn data_res(&self) -> usize {
        self.y.len()
    }

    /// Builds the observation from the receiver's channel estimate. Estimation
    /// error is folded into the noise as `C = (U sigma_E^2 + N0) I`.
    pub fn from_frame(cfg: &FrameConfig, chan: &ChannelRealization, rx: &RxGrid, n0: f64) -> Result<Self> {
        let v_len = cfg.data_res();
        let raw: Vec<&Vec<Complex64>> = (0..v_len)
            .map(|v| {
                let (t, w) = cfg.data_re_position(v);
                &rx.y[cfg.re_index(t, w)]
            })
            .collect();
        match &chan.estimate {
            ChannelGrid::Block(h) => {
                let s = chan.effective_noise(cfg.users, n0);
                if !(s > 0.0) {
                    return Err(config(format!("noise level {s} is not positive")));
                }
                if !h.is_finite() || raw.iter().any(|y| y.iter().any(|z| !z.is_finite())) {
                    return Err(input("non-finite observation or channel"));
                }
                let k = 1.0 / s.sqrt();
                Ok(Observation {
                    groups: vec![CoherentGroup { h: h.scale(k), res: (0..v_len).collect() }],
                    y: raw.iter().map(|y| y.iter().map(|z| z * k).collect()).collect(),
                })
            }
            ChannelGrid::PerRe(_) => {
                let c_e = CMat::identity(cfg.antennas).scale(cfg.users as f64 * chan.error_var);
                let mut groups = Vec::with_capacity(v_len);
                let mut y = Vec::with_capacity(v_len);
                for (v, yv) in raw.into_iter().enumerate() {
                    let (t, w) = cfg.data_re_position(v);
                    let (yw, hw) = whiten(yv, chan.estimate.at(cfg.re_index(t, w)), &c_e, n0)?;
                    groups.push(CoherentGroup { h: hw, res: vec![v] });
                    y.push(yw);
                }
                Ok(Observation { groups, y })
            }
        }
    }

    /// One group holding every RE, for direct construction in tests and benches.
    pub fn single(h: CMat, y: Vec<Vec<Complex64>>) -> Result<Self> {
        if y.iter().any(|v| v.len() != h.rows()) {
            return Err(config("observation length does not match the channel"));
        }
        if !h.is_finite() || y.iter().any(|v| v.iter().any(|z| !z.is_finite())) {
            return Err(input("non-finite observation or channel"));
        }
        let res = (0..y.len()).collect();
        Ok(Observation { groups: vec![CoherentGroup { h, res }], y })
    }
}
