//! Per-channel filters and per-RE quantities shared by all detector stages.

use num_complex::Complex64;

use super::observation::Observation;
use super::DetectorKind;
use crate::error::{numerical, Result};
use crate::numkit::count::{abs2, cscale, rmul, rrecip};
use crate::numkit::{gram, CMat, Cholesky};

/// Bias below which a user is treated as unrecoverable on a channel.
pub const MU_EPS: f64 = 1e-12;

/// Filters of one coherent channel. Computed once and reused by every stage.
#[derive(Clone, Debug)]
pub struct Filters {
    /// `G = H^H H`
    pub gram: CMat,
    /// `(G + I)^{-1}`
    pub ainv: CMat,
    /// Unbiased LMMSE filter in matched-filter form, `diag(1/mu) (G + I)^{-1}`.
    pub w_lm: CMat,
    /// `mu_LM,u = [(G + I)^{-1} G]_uu = 1 - [(G + I)^{-1}]_uu`
    pub mu_lm: Vec<f64>,
    pub inv_mu_lm: Vec<f64>,
    /// `1 / mu_LM,u - 1`
    pub nu2_lm: Vec<f64>,
    /// LoCo only: `1 / G_uu`.
    pub inv_gram_diag: Vec<f64>,
    /// LoCo only: `|G_uk / G_uu|^2` row-major, zero diagonal.
    pub ratio: Vec<f64>,
}

impl Filters {
    pub fn new(h: &CMat, loco: bool) -> Result<Self> {
        let u = h.cols();
        let g = gram(h)?;
        let ainv = Cholesky::factor(&g.add_diag(1.0))?.inverse();
        let mut mu_lm = Vec::with_capacity(u);
        let mut inv_mu_lm = Vec::with_capacity(u);
        let mut nu2_lm = Vec::with_capacity(u);
        for i in 0..u {
            let mu = 1.0 - ainv[(i, i)].re;
            if mu > MU_EPS {
                let inv = rrecip(mu);
                mu_lm.push(mu);
                inv_mu_lm.push(inv);
                nu2_lm.push(inv - 1.0);
            } else {
                mu_lm.push(0.0);
                inv_mu_lm.push(0.0);
                nu2_lm.push(f64::INFINITY);
            }
        }
        let w_lm = CMat::from_fn(u, u, |r, c| cscale(ainv[(r, c)], inv_mu_lm[r]));
        let (mut inv_gram_diag, mut ratio) = (Vec::new(), Vec::new());
        if loco {
            for i in 0..u {
                let d = g[(i, i)].re;
                if !(d > 0.0) {
                    return Err(numerical(format!("channel column {i} is zero")));
                }
                inv_gram_diag.push(rrecip(d));
            }
            ratio = vec![0.0; u * u];
            for i in 0..u {
                let s = rmul(inv_gram_diag[i], inv_gram_diag[i]);
                for k in 0..u {
                    if k != i {
                        ratio[i * u + k] = rmul(abs2(g[(i, k)]), s);
                    }
                }
            }
        }
        Ok(Filters { gram: g, ainv, w_lm, mu_lm, inv_mu_lm, nu2_lm, inv_gram_diag, ratio })
    }

    pub fn users(&self) -> usize {
        self.gram.rows()
    }

    pub fn erased(&self, u: usize) -> bool {
        self.mu_lm[u] == 0.0
    }
}

/// Everything the detectors need that does not depend on priors.
#[derive(Clone, Debug)]
pub struct DetectionContext {
    pub kind: DetectorKind,
    pub filters: Vec<Filters>,
    /// Group index of each data RE.
    pub group_of: Vec<usize>,
    /// `H^H y` per data RE.
    pub ymf: Vec<Vec<Complex64>>,
    /// Unbiased LMMSE estimates per data RE.
    pub s_lm: Vec<Vec<Complex64>>,
    /// LoCo only: unbiased matched-filter estimates `ymf_u / G_uu`.
    pub s_mf: Vec<Vec<Complex64>>,
}

impl DetectionContext {
    pub fn new(obs: &Observation, kind: DetectorKind) -> Result<Self> {
        let loco = kind == DetectorKind::LocoPic;
        let v_len = obs.data_res();
        let mut filters = Vec::with_capacity(obs.groups.len());
        let mut group_of = vec![usize::MAX; v_len];
        let mut ymf = vec![Vec::new(); v_len];
        let mut s_lm = vec![Vec::new(); v_len];
        let mut s_mf = if loco { vec![Vec::new(); v_len] } else { Vec::new() };
        for (gi, group) in obs.groups.iter().enumerate() {
            let f = Filters::new(&group.h, loco)?;
            for &v in &group.res {
                group_of[v] = gi;
                let m = group.h.hermitian_matvec(&obs.y[v]);
                s_lm[v] = f.w_lm.matvec(&m);
                if loco {
                    s_mf[v] = m.iter().zip(&f.inv_gram_diag).map(|(z, d)| cscale(*z, *d)).collect();
                }
                ymf[v] = m;
            }
            filters.push(f);
        }
        debug_assert!(group_of.iter().all(|&g| g != usize::MAX));
        Ok(DetectionContext { kind, filters, group_of, ymf, s_lm, s_mf })
    }

    pub fn users(&self) -> usize {
        self.filters.first().map_or(0, Filters::users)
    }

    pub fn data_res(&self) -> usize {
        self.ymf.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_channel_filters() {
        let f = Filters::new(&CMat::identity(2), true).unwrap();
        for u in 0..2 {
            assert!((f.mu_lm[u] - 0.5).abs() < 1e-15 && (f.nu2_lm[u] - 1.0).abs() < 1e-14);
        }
        assert_eq!(f.inv_gram_diag, vec![1.0, 1.0]);
        assert!(f.ratio.iter().all(|r| *r == 0.0));
    }

    #[test]
    fn scalar_channel_context() {
        let obs = Observation::single(CMat::identity(1), vec![vec![c(0.5, 0.0)]]).unwrap();
        let ctx = DetectionContext::new(&obs, DetectorKind::LocoPic).unwrap();
        assert!((ctx.s_lm[0][0] - c(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(ctx.s_mf[0][0], c(0.5, 0.0));
        assert!((ctx.filters[0].nu2_lm[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_column_is_erased_or_rejected() {
        let h = CMat::from_vec(2, 2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)]).unwrap();
        let f = Filters::new(&h, false).unwrap();
        assert!(f.erased(1) && !f.erased(0));
        assert!(matches!(Filters::new(&h, true), Err(crate::Error::Numerical(_))));
    }
}
