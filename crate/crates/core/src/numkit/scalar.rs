//! Real scalar abstraction shared by the receiver.
//!
//! Every algorithm that sits between the hyperparameters and the loss is
//! written against [`Real`], so the same code runs on plain `f64` for
//! Monte-Carlo simulation and on [`Dual`] numbers when hyperparameter
//! gradients are needed. Comparisons (`min`, `max`, clipping) act on the
//! value part only; the derivative of the active branch is propagated.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_traits::{Num, One, Zero};

pub trait Real:
    Copy
    + Debug
    + Default
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Num
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + 'static
{
    /// Constant with zero derivative.
    fn cst(v: f64) -> Self;
    /// Value part.
    fn value(&self) -> f64;

    fn exp(self) -> Self;
    fn exp_m1(self) -> Self;
    fn ln(self) -> Self;
    fn ln_1p(self) -> Self;
    fn sqrt(self) -> Self;
    fn tanh(self) -> Self;
    fn recip(self) -> Self;

    /// True when value and every derivative component are exactly zero.
    fn is_exact_zero(&self) -> bool;

    fn abs(self) -> Self {
        if self.value() < 0.0 {
            -self
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if other.value() < self.value() {
            other
        } else {
            self
        }
    }

    fn max(self, other: Self) -> Self {
        if other.value() > self.value() {
            other
        } else {
            self
        }
    }

    /// Saturates to `[lo, hi]`. Values on the boundary keep their derivative.
    fn clip(self, lo: f64, hi: f64) -> Self {
        let v = self.value();
        if v < lo {
            Self::cst(lo)
        } else if v > hi {
            Self::cst(hi)
        } else {
            self
        }
    }

    /// Logistic sigmoid `1 / (1 + e^{-x})`, evaluated without overflow.
    fn sigmoid(self) -> Self {
        if self.value() >= 0.0 {
            (Self::one() + (-self).exp()).recip()
        } else {
            let e = self.exp();
            e / (Self::one() + e)
        }
    }
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn exp_m1(self) -> Self {
        f64::exp_m1(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn recip(self) -> Self {
        f64::recip(self)
    }
    #[inline]
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
}

/// Forward-mode dual number carrying `N` directional derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<const N: usize> {
    pub re: f64,
    pub du: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub const fn constant(re: f64) -> Self {
        Dual { re, du: [0.0; N] }
    }

    /// Variable seeded along direction `lane`.
    pub fn variable(re: f64, lane: usize) -> Self {
        let mut du = [0.0; N];
        du[lane] = 1.0;
        Dual { re, du }
    }

    /// Applies the chain rule for a scalar function with value `f` and slope `df`.
    #[inline]
    fn chain(self, f: f64, df: f64) -> Self {
        let mut du = self.du;
        for d in du.iter_mut() {
            *d *= df;
        }
        Dual { re: f, du }
    }
}

impl<const N: usize> Default for Dual<N> {
    fn default() -> Self {
        Self::constant(0.0)
    }
}

impl<const N: usize> PartialOrd for Dual<N> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.re.partial_cmp(&other.re)
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self.re += rhs.re;
        for (a, b) in self.du.iter_mut().zip(rhs.du.iter()) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self.re -= rhs.re;
        for (a, b) in self.du.iter_mut().zip(rhs.du.iter()) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut du = [0.0; N];
        for i in 0..N {
            du[i] = self.du[i] * rhs.re + rhs.du[i] * self.re;
        }
        Dual { re: self.re * rhs.re, du }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.re;
        let q = self.re * inv;
        let mut du = [0.0; N];
        for i in 0..N {
            du[i] = (self.du[i] - q * rhs.du[i]) * inv;
        }
        Dual { re: q, du }
    }
}

impl<const N: usize> Rem for Dual<N> {
    type Output = Self;
    fn rem(self, rhs: Self) -> Self {
        let k = (self.re / rhs.re).trunc();
        self - rhs * k
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    #[inline]
    fn neg(mut self) -> Self {
        self.re = -self.re;
        for d in self.du.iter_mut() {
            *d = -*d;
        }
        self
    }
}

impl<const N: usize> Add<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: f64) -> Self {
        self.re += rhs;
        self
    }
}

impl<const N: usize> Sub<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: f64) -> Self {
        self.re -= rhs;
        self
    }
}

impl<const N: usize> Mul<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(mut self, rhs: f64) -> Self {
        self.re *= rhs;
        for d in self.du.iter_mut() {
            *d *= rhs;
        }
        self
    }
}

impl<const N: usize> Div<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(mut self, rhs: f64) -> Self {
        self.re /= rhs;
        for d in self.du.iter_mut() {
            *d /= rhs;
        }
        self
    }
}

macro_rules! assign_ops {
    ($($tr:ident $f:ident $op:tt),*) => {$(
        impl<const N: usize> $tr for Dual<N> {
            #[inline]
            fn $f(&mut self, rhs: Self) {
                *self = *self $op rhs;
            }
        }
    )*};
}
assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /);

impl<const N: usize> Zero for Dual<N> {
    fn zero() -> Self {
        Self::constant(0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0
    }
}

impl<const N: usize> One for Dual<N> {
    fn one() -> Self {
        Self::constant(1.0)
    }
}

impl<const N: usize> Num for Dual<N> {
    type FromStrRadixErr = <f64 as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Self::constant)
    }
}

impl<const N: usize> Real for Dual<N> {
    #[inline]
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }
    #[inline]
    fn value(&self) -> f64 {
        self.re
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    #[inline]
    fn exp_m1(self) -> Self {
        self.chain(self.re.exp_m1(), self.re.exp())
    }
    #[inline]
    fn ln(self) -> Self {
        self.chain(self.re.ln(), 1.0 / self.re)
    }
    #[inline]
    fn ln_1p(self) -> Self {
        self.chain(self.re.ln_1p(), 1.0 / (1.0 + self.re))
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, 0.5 / s)
    }
    #[inline]
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        self.chain(t, 1.0 - t * t)
    }
    #[inline]
    fn recip(self) -> Self {
        let r = 1.0 / self.re;
        self.chain(r, -r * r)
    }
    fn is_exact_zero(&self) -> bool {
        self.re == 0.0 && self.du.iter().all(|d| *d == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type D2 = Dual<2>;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn elementary_derivatives_match_finite_differences() {
        let x = 0.37;
        let v = D2::variable(x, 0);
        let cases: Vec<(D2, f64)> = vec![
            (v.exp(), fd(f64::exp, x)),
            (v.exp_m1(), fd(f64::exp_m1, x)),
            (v.ln(), fd(f64::ln, x)),
            (v.ln_1p(), fd(f64::ln_1p, x)),
            (v.sqrt(), fd(f64::sqrt, x)),
            (v.tanh(), fd(f64::tanh, x)),
            (v.recip(), fd(f64::recip, x)),
            (v.sigmoid(), fd(|t| 1.0 / (1.0 + (-t).exp()), x)),
            ((v * v) / (v + 1.0), fd(|t| t * t / (t + 1.0), x)),
        ];
        for (got, want) in cases {
            assert!((got.du[0] - want).abs() < 1e-8, "{got:?} vs {want}");
            assert_eq!(got.du[1], 0.0);
        }
    }

    #[test]
    fn clip_keeps_boundary_derivative() {
        let v = D2::variable(0.0, 1);
        assert_eq!(v.clip(0.0, 1.0).du[1], 1.0);
        assert_eq!(D2::variable(-0.1, 1).clip(0.0, 1.0).du[1], 0.0);
    }

    #[test]
    fn sigmoid_is_stable_for_large_arguments() {
        assert_eq!(Real::sigmoid(800.0f64), 1.0);
        assert_eq!(Real::sigmoid(-800.0f64), 0.0);
        let s = D2::variable(-50.0, 0).sigmoid();
        assert!(s.du[0].is_finite());
    }
}
