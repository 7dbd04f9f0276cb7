//! Small dense complex matrices.
//!
//! Sizes in this crate never exceed a few dozen rows, so everything is a
//! straightforward row-major `Vec` with textbook algorithms. Every product
//! goes through the counting helpers in [`super::count`].

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{One, Zero};

use super::count::{abs2, cmul, cmul_conj, cscale, rrecip, rsqrt, tally};
use super::Real;
use crate::error::{config, numerical, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CMat<T: Real = f64> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![Complex::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(config(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(CMat { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.value().is_finite() && z.im.value().is_finite())
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.re.value().powi(2) + z.im.value().powi(2)).sum::<f64>().sqrt()
    }

    pub fn hermitian(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: T) -> Self {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| cscale(*z, s)).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect();
        Ok(CMat { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect();
        Ok(CMat { rows: self.rows, cols: self.cols, data })
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(config(format!(
                "shape mismatch {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// `self + d*I`
    pub fn add_diag(&self, d: T) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)].re += d;
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(config(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = Complex::zero();
                for k in 0..self.cols {
                    acc = acc + cmul(self[(r, k)], other[(k, c)]);
                }
                out[(r, c)] = acc;
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.cols, "matvec length mismatch");
        (0..self.rows)
            .map(|r| {
                let mut acc = Complex::zero();
                for (a, b) in self.row(r).iter().zip(x) {
                    acc = acc + cmul(*a, *b);
                }
                acc
            })
            .collect()
    }

    /// `self^H x`
    pub fn hermitian_matvec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.rows, "hermitian_matvec length mismatch");
        let mut out = vec![Complex::zero(); self.cols];
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[c] = out[c] + cmul_conj(self[(r, c)], x[r]);
            }
        }
        out
    }

    pub fn lift<S: Real>(&self) -> CMat<S> {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| Complex::new(S::cst(z.re.value()), S::cst(z.im.value()))).collect(),
        }
    }
}

impl<T: Real> Index<(usize, usize)> for CMat<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMat<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.cols + c]
    }
}

fn check_tall(h: &CMat<impl Real>) -> Result<()> {
    if h.cols() == 0 || h.rows() < h.cols() {
        return Err(config(format!(
            "Gram matrix needs rows >= cols >= 1, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    Ok(())
}

/// `H^H H`, computing the upper triangle and mirroring it.
/// Costs `4 * B * U (U + 1) / 2` real multiplications.
pub fn gram<T: Real>(h: &CMat<T>) -> Result<CMat<T>> {
    check_tall(h)?;
    let (b, u) = (h.rows(), h.cols());
    let mut g = CMat::zeros(u, u);
    for i in 0..u {
        for j in i..u {
            let mut acc = Complex::zero();
            for r in 0..b {
                acc = acc + cmul_conj(h[(r, i)], h[(r, j)]);
            }
            g[(i, j)] = acc;
            if i != j {
                g[(j, i)] = acc.conj();
            } else {
                g[(i, i)].im = T::zero();
            }
        }
    }
    Ok(g)
}

/// `H^H H` without exploiting symmetry: `4 * B * U^2` real multiplications.
pub fn gram_full<T: Real>(h: &CMat<T>) -> Result<CMat<T>> {
    check_tall(h)?;
    h.hermitian().matmul(h)
}

/// Lower-triangular Cholesky factor `A = L L^H` with cached reciprocal pivots.
#[derive(Clone, Debug)]
pub struct Cholesky<T: Real = f64> {
    l: CMat<T>,
    inv_diag: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn factor(a: &CMat<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(config(format!("Cholesky needs a square matrix, got {}x{}", a.rows(), a.cols())));
        }
        if !a.is_finite() {
            return Err(numerical("Cholesky input contains non-finite entries"));
        }
        let n = a.rows();
        let tol = 1e-12 * a.frobenius();
        let mut l = CMat::zeros(n, n);
        let mut inv_diag = Vec::with_capacity(n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= abs2(l[(j, k)]);
            }
            if d.value() <= tol {
                return Err(numerical(format!(
                    "matrix is not positive definite (pivot {} = {:e})",
                    j,
                    d.value()
                )));
            }
            let ljj = rsqrt(d);
            let inv = rrecip(ljj);
            l[(j, j)] = Complex::new(ljj, T::zero());
            inv_diag.push(inv);
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s = s - cmul_conj(l[(j, k)], l[(i, k)]);
                }
                l[(i, j)] = cscale(s, inv);
            }
        }
        Ok(Cholesky { l, inv_diag })
    }

    pub fn factor_matrix(&self) -> &CMat<T> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves `A x = b` by forward and back substitution.
    pub fn solve_vec(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side length mismatch");
        let l = &self.l;
        let mut y = vec![Complex::zero(); n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s = s - cmul(l[(i, k)], y[k]);
            }
            y[i] = cscale(s, self.inv_diag[i]);
        }
        let mut x = vec![Complex::zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s = s - cmul_conj(l[(k, i)], x[k]);
            }
            x[i] = cscale(s, self.inv_diag[i]);
        }
        x
    }

    pub fn solve(&self, b: &CMat<T>) -> Result<CMat<T>> {
        if b.rows() != self.dim() {
            return Err(config(format!(
                "right-hand side has {} rows, system has {}",
                b.rows(),
                self.dim()
            )));
        }
        let mut x = CMat::zeros(b.rows(), b.cols());
        for c in 0..b.cols() {
            let col = self.solve_vec(&b.column(c));
            for (r, v) in col.into_iter().enumerate() {
                x[(r, c)] = v;
            }
        }
        Ok(x)
    }

    /// Explicit inverse `A^{-1} = L^{-H} L^{-1}`.
    pub fn inverse(&self) -> CMat<T> {
        let n = self.dim();
        let l = &self.l;
        let mut li = CMat::zeros(n, n);
        for j in 0..n {
            li[(j, j)] = Complex::new(self.inv_diag[j], T::zero());
            for i in j + 1..n {
                let mut s = Complex::zero();
                for k in j..i {
                    s = s + cmul(l[(i, k)], li[(k, j)]);
                }
                li[(i, j)] = cscale(-s, self.inv_diag[i]);
            }
        }
        let mut inv = CMat::zeros(n, n);
        for r in 0..n {
            let mut d = T::zero();
            for k in r..n {
                d += abs2(li[(k, r)]);
            }
            inv[(r, r)] = Complex::new(d, T::zero());
            for c in r + 1..n {
                let mut s = Complex::zero();
                for k in c..n {
                    s = s + cmul_conj(li[(k, r)], li[(k, c)]);
                }
                inv[(r, c)] = s;
                inv[(c, r)] = s.conj();
            }
        }
        inv
    }
}

/// Solves `A X = B` for Hermitian positive definite `A` via Cholesky.
pub fn hpd_solve<T: Real>(a: &CMat<T>, b: &CMat<T>) -> Result<CMat<T>> {
    Cholesky::factor(a)?.solve(b)
}

/// Inverse of a general nonsingular matrix by Gauss-Jordan elimination with
/// partial pivoting (about `n^3` complex multiplications).
pub fn inverse<T: Real>(a: &CMat<T>) -> Result<CMat<T>> {
    if !a.is_square() {
        return Err(config(format!("inverse needs a square matrix, got {}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    let tol = 1e-14 * a.frobenius();
    let mut m = a.clone();
    let mut swaps = Vec::new();
    for k in 0..n {
        let mut p = k;
        let mut best = abs2(m[(k, k)]).value();
        for i in k + 1..n {
            let v = abs2(m[(i, k)]).value();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best.sqrt() <= tol {
            return Err(numerical(format!("matrix is singular at column {k}")));
        }
        if p != k {
            for c in 0..n {
                m.data.swap(k * n + c, p * n + c);
            }
            swaps.push((k, p));
        }
        let piv = m[(k, k)];
        let den = rrecip(abs2(piv));
        let pinv = cscale(piv.conj(), den);
        m[(k, k)] = Complex::one();
        for c in 0..n {
            m[(k, c)] = cmul(m[(k, c)], pinv);
        }
        for i in 0..n {
            if i == k {
                continue;
            }
            let f = m[(i, k)];
            m[(i, k)] = Complex::zero();
            for c in 0..n {
                let v = cmul(m[(k, c)], f);
                m[(i, c)] = m[(i, c)] - v;
            }
        }
    }
    for &(k, p) in swaps.iter().rev() {
        for r in 0..n {
            m.data.swap(r * n + k, r * n + p);
        }
    }
    Ok(m)
}

/// Inverse square root of a Hermitian positive definite matrix
/// (Denman-Beavers iteration).
pub fn hpd_inv_sqrt(a: &CMat<f64>) -> Result<CMat<f64>> {
    // reject non-HPD input up front; the iteration itself would not notice
    Cholesky::factor(a)?;
    let n = a.rows();
    let scale = a.frobenius() / (n as f64).sqrt();
    let mut y = a.scale(1.0 / scale);
    let mut z = CMat::identity(n);
    for _ in 0..100 {
        let yi = inverse(&y)?;
        let zi = inverse(&z)?;
        let y_next = y.add(&zi)?.scale(0.5);
        let z_next = z.add(&yi)?.scale(0.5);
        let delta = y_next.sub(&y)?.frobenius() / y_next.frobenius();
        y = y_next;
        z = z_next;
        if delta < 1e-15 {
            break;
        }
    }
    // a^{-1/2} = (a/scale)^{-1/2} / sqrt(scale)
    tally(1);
    let out = z.scale(1.0 / scale.sqrt());
    Ok(CMat::from_fn(n, n, |r, c| 0.5 * (out[(r, c)] + out[(c, r)].conj())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::count::counted_scope;
    use crate::numkit::rng::{complex_normal, rng_from_seed};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut rng = rng_from_seed(seed);
        CMat::from_fn(rows, cols, |_, _| complex_normal(&mut rng, 1.0))
    }

    pub(crate) fn random_hpd(n: usize, seed: u64) -> CMat {
        let h = random(n + 2, n, seed);
        gram(&h).unwrap().add_diag(0.1)
    }

    fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn gram_examples() {
        let i2: CMat = CMat::identity(2);
        assert_eq!(gram(&i2).unwrap(), i2);
        let col = CMat::from_vec(2, 1, vec![c(1., 0.), c(1., 0.)]).unwrap();
        assert_eq!(gram(&col).unwrap()[(0, 0)], c(2., 0.));
        let h = CMat::from_vec(2, 2, vec![c(1., 0.), c(0., 1.), c(0., 0.), c(1., 0.)]).unwrap();
        let g = gram(&h).unwrap();
        let want = CMat::from_vec(2, 2, vec![c(1., 0.), c(0., 1.), c(0., -1.), c(2., 0.)]).unwrap();
        assert_eq!(g, want);
        assert_eq!(gram_full(&h).unwrap(), want);
    }

    #[test]
    fn gram_rejects_wide_matrix() {
        assert!(gram(&random(2, 3, 1)).is_err());
    }

    #[test]
    fn gram_multiply_counts() {
        let h = random(8, 4, 3);
        let (_, sym) = counted_scope(|| gram(&h).unwrap());
        let (_, full) = counted_scope(|| gram_full(&h).unwrap());
        assert_eq!(sym, 4 * 8 * 4 * 5 / 2);
        assert_eq!(full, 4 * 8 * 4 * 4);
    }

    #[test]
    fn hpd_solve_examples() {
        let b = random(3, 2, 5);
        assert_eq!(hpd_solve(&CMat::identity(3), &b).unwrap(), b);
        let two = CMat::<f64>::identity(2).scale(2.0);
        let x = hpd_solve(&two, &CMat::identity(2)).unwrap();
        let err = x.sub(&CMat::<f64>::identity(2).scale(0.5)).unwrap().frobenius();
        assert!(err < 1e-15, "{err}");
    }

    #[test]
    fn hpd_solve_residual() {
        let a = random_hpd(4, 9);
        let b = random(4, 3, 10);
        let x = hpd_solve(&a, &b).unwrap();
        let r = a.matmul(&x).unwrap().sub(&b).unwrap();
        assert!(r.frobenius() / b.frobenius() <= 1e-10);
    }

    #[test]
    fn hpd_solve_rejects_indefinite() {
        let a = CMat::from_vec(2, 2, vec![c(1., 0.), c(2., 0.), c(2., 0.), c(1., 0.)]).unwrap();
        assert!(matches!(hpd_solve(&a, &CMat::identity(2)), Err(crate::Error::Numerical(_))));
        let z: CMat = CMat::zeros(3, 3);
        assert!(Cholesky::factor(&z).is_err());
    }

    #[test]
    fn cholesky_inverse_and_gauss_jordan_agree() {
        for n in [1, 2, 5, 16] {
            let a = random_hpd(n, 20 + n as u64);
            let inv1 = Cholesky::factor(&a).unwrap().inverse();
            let inv2 = inverse(&a).unwrap();
            let eye: CMat = CMat::identity(n);
            assert!(max_abs_diff(&a.matmul(&inv1).unwrap(), &eye) < 1e-9);
            assert!(max_abs_diff(&a.matmul(&inv2).unwrap(), &eye) < 1e-9);
        }
    }

    #[test]
    fn gauss_jordan_handles_pivoting() {
        // zero leading entry forces a row swap
        let a = CMat::from_vec(3, 3, vec![
            c(0., 0.), c(1., 1.), c(2., 0.),
            c(3., 0.), c(0., -1.), c(1., 0.),
            c(1., 2.), c(0., 0.), c(4., 0.),
        ])
        .unwrap();
        let inv = inverse(&a).unwrap();
        assert!(max_abs_diff(&a.matmul(&inv).unwrap(), &CMat::identity(3)) < 1e-12);
        let sing = CMat::from_vec(2, 2, vec![c(1., 0.), c(2., 0.), c(2., 0.), c(4., 0.)]).unwrap();
        assert!(inverse(&sing).is_err());
    }

    #[test]
    fn inv_sqrt_whitens() {
        let a = random_hpd(4, 33);
        let s = hpd_inv_sqrt(&a).unwrap();
        let prod = s.matmul(&a).unwrap().matmul(&s).unwrap();
        assert!(max_abs_diff(&prod, &CMat::identity(4)) < 1e-10);
        let four = CMat::<f64>::identity(3).scale(4.0);
        assert!(max_abs_diff(&hpd_inv_sqrt(&four).unwrap(), &CMat::<f64>::identity(3).scale(0.5)) < 1e-14);
    }
}
