//! Soft symbols from a-priori LLRs and max-log LLRs from soft estimates.
//!
//! The `*_generic` functions enumerate the constellation and are the
//! reference. The fast versions exploit the separable Gray labelling of the
//! bundled QPSK and 16-QAM tables and are what the detectors call.

use num_complex::Complex;

use crate::error::{numerical, Result};
use crate::numkit::count::{rmul, rrecip, rtanh};
use crate::numkit::Real;
use crate::phy::{Constellation, Modulation};

/// Magnitude limit of detector output LLRs.
pub const LLR_CLIP: f64 = 20.0;

/// Smallest post-equalization variance passed to the demapper.
pub const VAR_FLOOR: f64 = 1e-6;

/// Mean and variance of the symbol implied by independent bit LLRs
/// (`L = log P[b=1]/P[b=0]`), by enumeration of every point.
pub fn soft_symbol_generic<T: Real>(llrs: &[T], c: &Constellation) -> (Complex<T>, T) {
    let probs: Vec<T> = (0..c.points().len())
        .map(|i| {
            c.label(i).iter().zip(llrs).fold(T::one(), |p, (&b, &l)| {
                let s = if b == 1 { l } else { -l };
                p * s.sigmoid()
            })
        })
        .collect();
    let mut mean = Complex::new(T::zero(), T::zero());
    for (a, &p) in c.points().iter().zip(&probs) {
        mean = mean + Complex::new(p * a.re, p * a.im);
    }
    let mut var = T::zero();
    for (a, &p) in c.points().iter().zip(&probs) {
        let dr = T::cst(a.re) - mean.re;
        let di = T::cst(a.im) - mean.im;
        var += p * (dr * dr + di * di);
    }
    (mean, var)
}

/// Closed-form soft symbol for the separable Gray tables. With
/// `t = tanh(L/2)` the sign factor `1 - 2b` has mean `-t`, so one 16-QAM
/// axis `c s0 (2 - s1)` has mean `-c t0 (2 + t1)` and second moment
/// `c^2 (5 + 4 t1)`.
pub fn soft_symbol<T: Real>(llrs: &[T], c: &Constellation) -> (Complex<T>, T) {
    match c.modulation() {
        Modulation::Qpsk => {
            let k = T::cst(std::f64::consts::FRAC_1_SQRT_2);
            let ti = rtanh(llrs[0] * 0.5);
            let tq = rtanh(llrs[1] * 0.5);
            let var = T::one() - (rmul(ti, ti) + rmul(tq, tq)) * 0.5;
            (Complex::new(-rmul(k, ti), -rmul(k, tq)), var)
        }
        Modulation::Qam16 => {
            let k = T::cst(1.0 / 10f64.sqrt());
            let axis = |ls: T, lm: T| {
                let ts = rtanh(ls * 0.5);
                let tm = rtanh(lm * 0.5);
                let mean = -rmul(rmul(ts, tm + 2.0), k);
                // c^2 = 0.1; the two axes add to exactly 1 for zero LLRs.
                let second = rmul(tm * 4.0 + 5.0, T::cst(0.1));
                (mean, second - rmul(mean, mean))
            };
            let (mi, vi) = axis(llrs[0], llrs[2]);
            let (mq, vq) = axis(llrs[1], llrs[3]);
            (Complex::new(mi, mq), (vi + vq).max(T::zero()))
        }
    }
}

/// Max-log LLRs `(min_{a in Q_q^0} |s-a|^2 - min_{a in Q_q^1} |s-a|^2) / nu2`
/// by enumeration, clipped to `±LLR_CLIP`.
pub fn maxlog_demap_generic<T: Real>(s: Complex<T>, nu2: T, c: &Constellation) -> Result<Vec<T>> {
    if !(nu2.value() > 0.0) {
        return Err(numerical(format!("demapper variance {} is not positive", nu2.value())));
    }
    let d: Vec<T> = c
        .points()
        .iter()
        .map(|a| {
            let dr = s.re - a.re;
            let di = s.im - a.im;
            dr * dr + di * di
        })
        .collect();
    let inv = nu2.recip();
    Ok((0..c.bits_per_symbol())
        .map(|q| {
            let m = |b: u8| c.subset(q, b).iter().map(|&i| d[i]).reduce(|x, y| x.min(y)).expect("non-empty subset");
            ((m(0) - m(1)) * inv).clip(-LLR_CLIP, LLR_CLIP)
        })
        .collect())
}

/// Max-log LLRs with the per-axis closed form of the Gray tables. Writes `Q`
/// values into `out`. `nu2` must be positive (callers floor it).
///
/// For one 16-QAM axis with levels `±c, ±3c` and `kappa = 4c / nu2`:
/// sign bit `-kappa x` for `|x| <= 2c`, else `-2 kappa (x ∓ c)`;
/// magnitude bit `kappa (|x| - 2c)`. QPSK keeps only the sign bit.
pub fn maxlog_demap_into<T: Real>(s: Complex<T>, nu2: T, c: &Constellation, out: &mut [T]) {
    let unit = c.axis_unit();
    let kappa = rmul(rrecip(nu2), T::cst(4.0 * unit));
    let sign_bit = |x: T| -> T {
        let v = x.value();
        if v.abs() <= 2.0 * unit || c.modulation() == Modulation::Qpsk {
            -rmul(kappa, x)
        } else if v > 0.0 {
            -rmul(kappa + kappa, x - unit)
        } else {
            -rmul(kappa + kappa, x + unit)
        }
    };
    match c.modulation() {
        Modulation::Qpsk => {
            out[0] = sign_bit(s.re).clip(-LLR_CLIP, LLR_CLIP);
            out[1] = sign_bit(s.im).clip(-LLR_CLIP, LLR_CLIP);
        }
        Modulation::Qam16 => {
            let mag = |x: T| rmul(kappa, x.abs() - 2.0 * unit).clip(-LLR_CLIP, LLR_CLIP);
            out[0] = sign_bit(s.re).clip(-LLR_CLIP, LLR_CLIP);
            out[1] = sign_bit(s.im).clip(-LLR_CLIP, LLR_CLIP);
            out[2] = mag(s.re);
            out[3] = mag(s.im);
        }
    }
}

/// Checked wrapper around [`maxlog_demap_into`].
pub fn maxlog_demap<T: Real>(s: Complex<T>, nu2: T, c: &Constellation) -> Result<Vec<T>> {
    if !(nu2.value() > 0.0) {
        return Err(numerical(format!("demapper variance {} is not positive", nu2.value())));
    }
    let mut out = vec![T::zero(); c.bits_per_symbol()];
    maxlog_demap_into(s, nu2, c, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::rng::rng_from_seed;
    use crate::numkit::Dual;
    use num_complex::Complex64;
    use rand::Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn zero_llrs_give_zero_mean_unit_variance() {
        for c in [Constellation::qpsk(), Constellation::qam16()] {
            let z = vec![0.0; c.bits_per_symbol()];
            let (m, v) = soft_symbol(&z, &c);
            assert_eq!((m.re, m.im, v), (0.0, 0.0, 1.0));
            let (m, v) = soft_symbol_generic(&z, &c);
            assert!(m.norm() < 1e-15 && (v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn perfect_and_half_priors_qpsk() {
        let c = Constellation::qpsk();
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let (m, v) = soft_symbol(&[-40.0, -40.0], &c);
        assert!((m - Complex64::new(s2, s2)).norm() < 1e-12 && v <= 1e-12);
        let (m, v) = soft_symbol(&[0.0, 40.0], &c);
        assert!((m - Complex64::new(0.0, -s2)).norm() < 1e-12);
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fast_soft_symbols_match_enumeration() {
        let mut rng = rng_from_seed(12);
        for c in [Constellation::qpsk(), Constellation::qam16()] {
            for _ in 0..2000 {
                let l: Vec<f64> = (0..c.bits_per_symbol()).map(|_| rng.random_range(-25.0..25.0)).collect();
                let (mf, vf) = soft_symbol(&l, &c);
                let (mg, vg) = soft_symbol_generic(&l, &c);
                assert!((mf - mg).norm() <= 1e-12, "{l:?}");
                assert!((vf - vg).abs() <= 1e-12, "{l:?}");
            }
        }
    }

    #[test]
    fn qpsk_oracle_llr() {
        let c = Constellation::qpsk();
        let l = maxlog_demap(Complex64::new(0.5, 0.0), 1.0, &c).unwrap();
        assert!((l[0] + 2f64.sqrt()).abs() <= 1e-12);
        assert_eq!(l[1], 0.0);
        let g = maxlog_demap_generic(Complex64::new(0.5, 0.0), 1.0, &c).unwrap();
        assert!((g[0] + 2f64.sqrt()).abs() <= 1e-12);
    }

    #[test]
    fn fast_demap_matches_enumeration() {
        let mut rng = rng_from_seed(13);
        for c in [Constellation::qpsk(), Constellation::qam16()] {
            for _ in 0..5000 {
                let s = Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
                let nu2 = rng.random_range(0.01..3.0);
                let f = maxlog_demap(s, nu2, &c).unwrap();
                let g = maxlog_demap_generic(s, nu2, &c).unwrap();
                for (a, b) in f.iter().zip(&g) {
                    assert!(close(*a, *b, 1e-12), "{s} {nu2}: {f:?} vs {g:?}");
                }
            }
        }
    }

    #[test]
    fn demap_signs_scaling_and_errors() {
        let c = Constellation::qam16();
        for i in 0..16 {
            let l = maxlog_demap(c.points()[i], 1e-3, &c).unwrap();
            let bits: Vec<u8> = l.iter().map(|x| (*x > 0.0) as u8).collect();
            assert_eq!(bits, c.label(i));
        }
        let s = Complex64::new(0.13, -0.41);
        let a = maxlog_demap(s, 0.7, &c).unwrap();
        let b = maxlog_demap(s, 1.4, &c).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x / 2.0 - y).abs() < 1e-15);
        }
        assert!(maxlog_demap(s, 0.0, &c).is_err());
        assert!(maxlog_demap_generic(s, -1.0, &c).is_err());
    }

    #[test]
    fn dual_numbers_follow_fast_paths() {
        let c = Constellation::qam16();
        let l = [Dual::<2>::variable(0.7, 0), Dual::constant(-1.1), Dual::variable(2.0, 1), Dual::constant(0.3)];
        let (m, v) = soft_symbol(&l, &c);
        let h = 1e-6;
        let f = |x: f64| soft_symbol(&[x, -1.1, 2.0, 0.3], &c);
        let (mp, vp) = f(0.7 + h);
        let (mm, vm) = f(0.7 - h);
        assert!((m.re.du[0] - (mp.re - mm.re) / (2.0 * h)).abs() < 1e-7);
        assert!((v.du[0] - (vp - vm) / (2.0 * h)).abs() < 1e-7);
    }
}
