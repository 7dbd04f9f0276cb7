//! Real-multiplication accounting.
//!
//! Convention: a complex-by-complex product costs 4 real multiplications,
//! complex-by-real 2, real-by-real 1. A real division, reciprocal, square
//! root or hyperbolic tangent is tallied as one multiplication. Additions,
//! comparisons and multiplications by constant powers of two are free.
//!
//! The tally lives in a thread-local counter, so each Monte-Carlo worker
//! owns its own count and the harness sums per-worker results.

use std::cell::Cell;

use num_complex::Complex;

use super::Real;

thread_local! {
    static TALLY: Cell<u64> = const { Cell::new(0) };
}

/// Human-readable statement of the convention, copied into reports.
pub const CONVENTION: &str = "real multiplications: complex*complex=4, complex*real=2, \
real*real=1, real division/reciprocal/sqrt/tanh=1; additions not counted";

/// Adds `n` real multiplications to the current thread's tally.
#[inline]
pub fn tally(n: u64) {
    TALLY.with(|t| t.set(t.get() + n));
}

/// Snapshot of the current thread's running tally.
#[inline]
pub fn current() -> u64 {
    TALLY.with(|t| t.get())
}

/// Counter handle measuring multiplications executed since it was started.
#[derive(Clone, Copy, Debug)]
pub struct MulCounter {
    start: u64,
}

impl MulCounter {
    pub fn start() -> Self {
        MulCounter { start: current() }
    }

    pub fn real_mults(&self) -> u64 {
        current() - self.start
    }
}

/// Runs `f` and returns its result together with the multiplications it executed.
/// Scopes nest: an outer scope includes everything counted by inner scopes.
pub fn counted_scope<R>(f: impl FnOnce() -> R) -> (R, u64) {
    let c = MulCounter::start();
    let r = f();
    (r, c.real_mults())
}

#[inline]
pub fn cmul<T: Real>(a: Complex<T>, b: Complex<T>) -> Complex<T> {
    tally(4);
    a * b
}

/// `conj(a) * b`
#[inline]
pub fn cmul_conj<T: Real>(a: Complex<T>, b: Complex<T>) -> Complex<T> {
    tally(4);
    Complex::new(a.re * b.re + a.im * b.im, a.re * b.im - a.im * b.re)
}

#[inline]
pub fn cscale<T: Real>(a: Complex<T>, r: T) -> Complex<T> {
    tally(2);
    Complex::new(a.re * r, a.im * r)
}

#[inline]
pub fn rmul<T: Real>(a: T, b: T) -> T {
    tally(1);
    a * b
}

#[inline]
pub fn rrecip<T: Real>(a: T) -> T {
    tally(1);
    a.recip()
}

#[inline]
pub fn rsqrt<T: Real>(a: T) -> T {
    tally(1);
    a.sqrt()
}

#[inline]
pub fn rtanh<T: Real>(a: T) -> T {
    tally(1);
    a.tanh()
}

/// `|a|^2`
#[inline]
pub fn abs2<T: Real>(a: Complex<T>) -> T {
    tally(2);
    a.re * a.re + a.im * a.im
}
