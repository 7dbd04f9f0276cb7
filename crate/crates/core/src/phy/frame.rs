//! Frame geometry, pilot layout and the transmit/receive signal model.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use super::channel::ChannelRealization;
use super::constellation::{map_bits, Constellation, Modulation};
use crate::error::{config, Result};
use crate::ldpc::LdpcCode;
use crate::numkit::rng::{complex_normal, random_bits, splitmix64};

/// Geometry of one OFDM frame shared by all users.
#[derive(Clone, Debug)]
pub struct FrameConfig {
    pub users: usize,
    pub antennas: usize,
    pub subcarriers: usize,
    pub symbols: usize,
    /// OFDM symbols (0-based) reserved for pilots, grouped as described in [`FrameConfig::pilot_slots`].
    pub pilot_symbols: Vec<usize>,
    pub constellation: Constellation,
    pub code: Arc<LdpcCode>,
    data_symbols: Vec<usize>,
}

impl FrameConfig {
    pub fn new(
        users: usize,
        antennas: usize,
        subcarriers: usize,
        symbols: usize,
        pilot_symbols: Vec<usize>,
        constellation: Constellation,
        code: Arc<LdpcCode>,
    ) -> Result<Self> {
        if users == 0 || antennas == 0 || subcarriers == 0 || symbols == 0 {
            return Err(config("frame dimensions must be positive"));
        }
        if antennas < users {
            return Err(config(format!("{antennas} antennas cannot separate {users} users")));
        }
        if pilot_symbols.len() >= symbols {
            return Err(config(format!("{} pilot symbols leave no data in a {symbols}-symbol frame", pilot_symbols.len())));
        }
        let mut seen = vec![false; symbols];
        for &t in &pilot_symbols {
            if t >= symbols || std::mem::replace(&mut seen[t], true) {
                return Err(config(format!("pilot symbol {t} is out of range or repeated")));
            }
        }
        let groups = users.div_ceil(2);
        if !pilot_symbols.is_empty() && !pilot_symbols.len().is_multiple_of(groups) {
            return Err(config(format!(
                "{} pilot symbols cannot be split evenly between {groups} user pairs",
                pilot_symbols.len()
            )));
        }
        let data_symbols: Vec<usize> = (0..symbols).filter(|t| !seen[*t]).collect();
        let v = data_symbols.len() * subcarriers;
        let k = v * constellation.bits_per_symbol();
        if k != code.n() {
            return Err(config(format!(
                "{v} data REs x {} bits = {k} coded bits, but the code length is {}",
                constellation.bits_per_symbol(),
                code.n()
            )));
        }
        Ok(FrameConfig { users, antennas, subcarriers, symbols, pilot_symbols, constellation, code, data_symbols })
    }

    /// 4 users, 4 antennas, 60 subcarriers, 14 symbols with pilots on
    /// symbols {2, 11} (users 0, 1) and {3, 12} (users 2, 3), 16-QAM and
    /// the bundled rate-1/2 code.
    pub fn rayleigh_default() -> Self {
        Self::new(4, 4, 60, 14, vec![2, 3, 11, 12], Constellation::qam16(), LdpcCode::bundled())
            .expect("default frame is consistent")
    }

    pub fn with_antennas(&self, antennas: usize) -> Result<Self> {
        let mut c = self.clone();
        if antennas < c.users {
            return Err(config(format!("{antennas} antennas cannot separate {} users", c.users)));
        }
        c.antennas = antennas;
        Ok(c)
    }

    pub fn modulation(&self) -> Modulation {
        self.constellation.modulation()
    }

    pub fn data_symbols(&self) -> &[usize] {
        &self.data_symbols
    }

    /// Data REs per user, `V = W * T_D`. Data RE `v` sits at symbol
    /// `data_symbols()[v / W]`, subcarrier `v % W`.
    pub fn data_res(&self) -> usize {
        self.data_symbols.len() * self.subcarriers
    }

    /// Coded bits per user `K`.
    pub fn coded_bits(&self) -> usize {
        self.code.n()
    }

    /// Information bits per user `D`.
    pub fn data_bits(&self) -> usize {
        self.code.data_len()
    }

    pub fn rate(&self) -> f64 {
        self.code.rate()
    }

    /// Index of RE `(t, w)` in the full `T x W` grid.
    pub fn re_index(&self, t: usize, w: usize) -> usize {
        t * self.subcarriers + w
    }

    pub fn data_re_position(&self, v: usize) -> (usize, usize) {
        (self.data_symbols[v / self.subcarriers], v % self.subcarriers)
    }

    /// Pilot symbols used by `user`. Users are paired (0-1, 2-3, ...); pair `g`
    /// owns `pilot_symbols[g], pilot_symbols[g + G], ...` for `G` pairs.
    pub fn pilot_slots(&self, user: usize) -> Vec<usize> {
        let groups = self.users.div_ceil(2);
        let g = user / 2;
        self.pilot_symbols.iter().skip(g).step_by(groups).copied().collect()
    }

    /// Whether `user` sends its pilot on subcarrier `w`. Paired users use
    /// disjoint even/odd combs; an unpaired user takes every subcarrier.
    pub fn pilot_comb(&self, user: usize, w: usize) -> bool {
        let paired = (user ^ 1) < self.users;
        !paired || w % 2 == user % 2
    }

    /// Unit-modulus pilot value of `user` on subcarrier `w`.
    pub fn pilot_value(&self, user: usize, w: usize) -> Complex64 {
        pilot_chip(user, w)
    }
}

/// QPSK pilot chips drawn from a fixed hash of `(user, w)`.
fn pilot_chip(user: usize, w: usize) -> Complex64 {
    let h = splitmix64(0x9e1f_07a1 ^ ((user as u64) << 32) ^ w as u64);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(if h & 1 == 0 { s } else { -s }, if h & 2 == 0 { s } else { -s })
}

/// Everything one frame transmits.
#[derive(Clone, Debug)]
pub struct TxFrame {
    /// `data[u]`: information bits.
    pub data: Vec<Vec<u8>>,
    /// `coded[u]`: codeword bits.
    pub coded: Vec<Vec<u8>>,
    /// `symbols[u][v]` over data REs.
    pub symbols: Vec<Vec<Complex64>>,
}

impl TxFrame {
    /// Random information bits for every user, encoded and mapped.
    pub fn random(cfg: &FrameConfig, rng: &mut impl Rng) -> Result<Self> {
        let data: Vec<Vec<u8>> = (0..cfg.users).map(|_| random_bits(rng, cfg.data_bits())).collect();
        Self::from_data(cfg, data)
    }

    pub fn from_data(cfg: &FrameConfig, data: Vec<Vec<u8>>) -> Result<Self> {
        if data.len() != cfg.users {
            return Err(config(format!("{} data streams for {} users", data.len(), cfg.users)));
        }
        let coded = data.iter().map(|d| cfg.code.encode(d)).collect::<Result<Vec<_>>>()?;
        let grid = map_bits(&coded, &cfg.constellation)?;
        Ok(TxFrame { data, coded, symbols: grid.symbols })
    }

    /// Transmit vector (one entry per user) on RE `(t, w)`.
    pub fn tx_vector(&self, cfg: &FrameConfig, t: usize, w: usize) -> Vec<Complex64> {
        match cfg.data_symbols.binary_search(&t) {
            Ok(td) => self.symbols.iter().map(|s| s[td * cfg.subcarriers + w]).collect(),
            Err(_) => (0..cfg.users)
                .map(|u| {
                    if cfg.pilot_slots(u).contains(&t) && cfg.pilot_comb(u, w) {
                        cfg.pilot_value(u, w)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect(),
        }
    }
}

/// Received signal on every RE of the frame, indexed by [`FrameConfig::re_index`].
#[derive(Clone, Debug)]
pub struct RxGrid {
    pub y: Vec<Vec<Complex64>>,
}

/// `y = H s + n` on every RE. Noise is drawn as unit-variance samples and
/// scaled by `sqrt(n0)`, so frames that share a generator differ only in SNR.
pub fn receive(
    cfg: &FrameConfig,
    tx: &TxFrame,
    chan: &ChannelRealization,
    n0: f64,
    rng: &mut impl Rng,
) -> RxGrid {
    let sd = n0.sqrt();
    let mut y = Vec::with_capacity(cfg.symbols * cfg.subcarriers);
    for t in 0..cfg.symbols {
        for w in 0..cfg.subcarriers {
            let s = tx.tx_vector(cfg, t, w);
            let h = chan.h.at(cfg.re_index(t, w));
            let mut r = h.matvec(&s);
            for x in r.iter_mut() {
                *x += complex_normal(rng, 1.0) * sd;
            }
            y.push(r);
        }
    }
    RxGrid { y }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_frame_sizes() {
        let c = FrameConfig::rayleigh_default();
        assert_eq!(c.data_symbols().len(), 10);
        assert_eq!((c.data_res(), c.coded_bits(), c.data_bits()), (600, 2400, 1200));
        assert_eq!(c.pilot_slots(0), vec![2, 11]);
        assert_eq!(c.pilot_slots(1), vec![2, 11]);
        assert_eq!(c.pilot_slots(3), vec![3, 12]);
        assert_eq!(c.data_re_position(61), (1, 1));
        assert_eq!(c.data_re_position(120), (4, 0));
    }

    #[test]
    fn inconsistent_frames_are_rejected() {
        let code = LdpcCode::bundled();
        let q16 = Constellation::qam16();
        assert!(FrameConfig::new(4, 4, 60, 14, vec![2, 3, 11], q16.clone(), code.clone()).is_err());
        assert!(FrameConfig::new(4, 4, 60, 13, vec![2, 3, 11, 12], q16.clone(), code.clone()).is_err());
        assert!(FrameConfig::new(4, 4, 60, 14, vec![2, 3, 11, 14], q16.clone(), code.clone()).is_err());
        assert!(FrameConfig::new(4, 2, 60, 14, vec![2, 3, 11, 12], q16, code).is_err());
    }

    #[test]
    fn pilots_are_orthogonal_between_users() {
        let c = FrameConfig::rayleigh_default();
        for t in c.pilot_symbols.clone() {
            for w in 0..c.subcarriers {
                let active = (0..c.users).filter(|&u| c.pilot_slots(u).contains(&t) && c.pilot_comb(u, w)).count();
                assert_eq!(active, 1, "t={t} w={w}");
            }
        }
        assert!((c.pilot_value(2, 7).norm() - 1.0).abs() < 1e-15);
    }
}
