//! LMMSE, MMSE-PIC and LoCo-PIC soft-output detection on a prepared
//! [`DetectionContext`].

use num_complex::{Complex, Complex64};

use super::context::{DetectionContext, Filters, MU_EPS};
use super::symbols::{maxlog_demap_into, soft_symbol, VAR_FLOOR};
use super::DetectorKind;
use crate::error::{config, Result};
use crate::numkit::count::{cmul, cscale, rmul, rrecip, tally};
use crate::numkit::{inverse, CMat, Real};
use crate::phy::Constellation;

/// Soft output of one detector stage for one frame.
#[derive(Clone, Debug)]
pub struct DetectorOut<T: Real> {
    /// `llr[u][v * Q + q]`, extrinsic and clipped.
    pub llr: Vec<Vec<T>>,
    /// Equalized estimate `s_hat[v * U + u]`.
    pub s_hat: Vec<Complex<T>>,
    /// Post-equalization variance, same layout as `s_hat`.
    pub nu2: Vec<T>,
    /// How many variances were raised to the floor.
    pub floored: usize,
}

impl<T: Real> DetectorOut<T> {
    fn new(users: usize, res: usize, q: usize) -> Self {
        DetectorOut {
            llr: vec![vec![T::zero(); res * q]; users],
            s_hat: vec![Complex::new(T::zero(), T::zero()); res * users],
            nu2: vec![T::zero(); res * users],
            floored: 0,
        }
    }

    fn emit(&mut self, v: usize, u: usize, s: Complex<T>, nu2: T, c: &Constellation) {
        let users = self.llr.len();
        let q = c.bits_per_symbol();
        let nu2 = if nu2.value() < VAR_FLOOR {
            self.floored += 1;
            T::cst(VAR_FLOOR)
        } else {
            nu2
        };
        self.s_hat[v * users + u] = s;
        self.nu2[v * users + u] = nu2;
        maxlog_demap_into(s, nu2, c, &mut self.llr[u][v * q..(v + 1) * q]);
    }

    /// Leaves the LLRs of an unrecoverable user at zero.
    fn erase(&mut self, v: usize, u: usize) {
        let users = self.llr.len();
        self.nu2[v * users + u] = T::cst(f64::INFINITY);
    }
}

fn lift<T: Real>(z: Complex64) -> Complex<T> {
    Complex::new(T::cst(z.re), T::cst(z.im))
}

fn check_priors<T: Real>(ctx: &DetectionContext, priors: &[Vec<T>], c: &Constellation) -> Result<()> {
    let k = ctx.data_res() * c.bits_per_symbol();
    if priors.len() != ctx.users() || priors.iter().any(|p| p.len() != k) {
        return Err(config(format!("priors must be {} x {k}", ctx.users())));
    }
    Ok(())
}

fn lmmse_re<T: Real>(ctx: &DetectionContext, v: usize, c: &Constellation, out: &mut DetectorOut<T>) {
    let f = &ctx.filters[ctx.group_of[v]];
    for u in 0..ctx.users() {
        if f.erased(u) {
            out.erase(v, u);
        } else {
            out.emit(v, u, lift(ctx.s_lm[v][u]), T::cst(f.nu2_lm[u]), c);
        }
    }
}

/// Unbiased LMMSE equalization `s_u = w_u^H y / mu_u` with variance `1/mu_u - 1`.
pub fn lmmse<T: Real>(ctx: &DetectionContext, c: &Constellation) -> DetectorOut<T> {
    let mut out = DetectorOut::new(ctx.users(), ctx.data_res(), c.bits_per_symbol());
    for v in 0..ctx.data_res() {
        lmmse_re(ctx, v, c, &mut out);
    }
    out
}

fn soft_priors<T: Real>(priors: &[Vec<T>], v: usize, c: &Constellation) -> (Vec<Complex<T>>, Vec<T>) {
    let q = c.bits_per_symbol();
    priors.iter().map(|p| soft_symbol(&p[v * q..(v + 1) * q], c)).unzip()
}

/// MMSE parallel interference cancellation. One `(G Lambda + I)^{-1}` per RE
/// in matched-filter form; REs without prior information take the LMMSE
/// path, which is the same filter with `Lambda = I`.
pub fn mmse_pic<T: Real>(ctx: &DetectionContext, priors: Option<&[Vec<T>]>, c: &Constellation) -> Result<DetectorOut<T>> {
    mmse_pic_impl(ctx, priors, c, false)
}

fn mmse_pic_impl<T: Real>(
    ctx: &DetectionContext,
    priors: Option<&[Vec<T>]>,
    c: &Constellation,
    force_general: bool,
) -> Result<DetectorOut<T>> {
    let Some(priors) = priors else {
        return Ok(lmmse(ctx, c));
    };
    check_priors(ctx, priors, c)?;
    let q = c.bits_per_symbol();
    let mut out = DetectorOut::new(ctx.users(), ctx.data_res(), q);
    for v in 0..ctx.data_res() {
        let silent = priors.iter().all(|p| p[v * q..(v + 1) * q].iter().all(Real::is_exact_zero));
        if silent && !force_general {
            lmmse_re(ctx, v, c, &mut out);
        } else {
            mmse_pic_re(ctx, v, priors, c, &mut out)?;
        }
    }
    Ok(out)
}

fn mmse_pic_re<T: Real>(
    ctx: &DetectionContext,
    v: usize,
    priors: &[Vec<T>],
    c: &Constellation,
    out: &mut DetectorOut<T>,
) -> Result<()> {
    let users = ctx.users();
    let g: CMat<T> = ctx.filters[ctx.group_of[v]].gram.lift();
    let (sa, va) = soft_priors(priors, v, c);
    let mut a = CMat::from_fn(users, users, |r, k| cscale(g[(r, k)], va[k]));
    for i in 0..users {
        a[(i, i)].re += T::one();
    }
    let ainv = inverse(&a)?;
    let z: Vec<Complex<T>> = (0..users)
        .map(|r| {
            let mut acc = lift(ctx.ymf[v][r]);
            for k in 0..users {
                acc = acc - cmul(g[(r, k)], sa[k]);
            }
            acc
        })
        .collect();
    let x = ainv.matvec(&z);
    for u in 0..users {
        // mu_u = Re [A^{-1} G]_uu
        let mut mu = T::zero();
        for k in 0..users {
            mu += ainv[(u, k)].re * g[(k, u)].re - ainv[(u, k)].im * g[(k, u)].im;
        }
        tally(2 * users as u64);
        if mu.value() <= MU_EPS {
            out.erase(v, u);
            continue;
        }
        let inv = rrecip(mu);
        out.emit(v, u, cscale(x[u], inv) + sa[u], inv - va[u], c);
    }
    Ok(())
}

/// Cancellation matrix `M = I - F G` of one channel for the interpolated
/// filter `F = zeta W_LM + (1 - zeta) diag(1/G_uu)`, with an exact zero
/// diagonal.
fn loco_cancel<T: Real>(f: &Filters, zeta: T) -> CMat<T> {
    let users = f.users();
    let mut m = CMat::zeros(users, users);
    let one_minus = T::one() - zeta;
    for u in 0..users {
        if f.erased(u) {
            continue;
        }
        let a = rmul(zeta, T::cst(f.inv_mu_lm[u]));
        let b = rmul(one_minus, T::cst(f.inv_gram_diag[u]));
        for k in 0..users {
            if k != u {
                m[(u, k)] = cscale(lift(f.ainv[(u, k)]), a) - cscale(lift(f.gram[(u, k)]), b);
            }
        }
    }
    m
}

/// Low-complexity PIC: filters are fixed per channel and only the
/// interpolation weight `zeta` and the priors change between stages. The
/// first stage reports the LMMSE error variance, later ones the
/// matched-filter NPI variance.
pub fn loco_pic<T: Real>(
    ctx: &DetectionContext,
    priors: Option<&[Vec<T>]>,
    zeta: T,
    first_stage: bool,
    c: &Constellation,
) -> Result<DetectorOut<T>> {
    if ctx.kind != DetectorKind::LocoPic {
        return Err(config("LoCo-PIC needs a context prepared for it"));
    }
    if let Some(p) = priors {
        check_priors(ctx, p, c)?;
    }
    let users = ctx.users();
    let mut out = DetectorOut::new(users, ctx.data_res(), c.bits_per_symbol());
    let cancel: Vec<Option<CMat<T>>> =
        ctx.filters.iter().map(|f| priors.map(|_| loco_cancel(f, zeta))).collect();
    let one_minus = T::one() - zeta;
    for v in 0..ctx.data_res() {
        let gi = ctx.group_of[v];
        let f = &ctx.filters[gi];
        let (sa, va) = match priors {
            Some(p) => soft_priors(p, v, c),
            None => (vec![Complex::new(T::zero(), T::zero()); users], vec![T::one(); users]),
        };
        for u in 0..users {
            if f.erased(u) {
                out.erase(v, u);
                continue;
            }
            let mut s = cscale(lift(ctx.s_lm[v][u]), zeta) + cscale(lift(ctx.s_mf[v][u]), one_minus);
            if let Some(m) = &cancel[gi] {
                for k in 0..users {
                    if k != u {
                        s = s + cmul(m[(u, k)], sa[k]);
                    }
                }
            }
            let nu2 = if first_stage {
                T::cst(f.nu2_lm[u])
            } else {
                let mut acc = T::cst(f.inv_gram_diag[u]);
                for k in 0..users {
                    if k != u {
                        acc += rmul(T::cst(f.ratio[u * users + k]), va[k]);
                    }
                }
                acc
            };
            out.emit(v, u, s, nu2, c);
        }
    }
    Ok(out)
}

/// Runs the detector of `ctx.kind` for one stage.
pub fn detect<T: Real>(
    ctx: &DetectionContext,
    priors: Option<&[Vec<T>]>,
    zeta: T,
    first_stage: bool,
    c: &Constellation,
) -> Result<DetectorOut<T>> {
    match ctx.kind {
        DetectorKind::Lmmse => Ok(lmmse(ctx, c)),
        DetectorKind::MmsePic => mmse_pic(ctx, priors, c),
        DetectorKind::LocoPic => loco_pic(ctx, priors, zeta, first_stage, c),
    }
}
