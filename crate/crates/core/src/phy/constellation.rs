//! Gray-labelled QAM constellations.
//!
//! Labels follow the usual 5G NR mapping: even bit positions select the
//! in-phase amplitude, odd positions the quadrature amplitude, and bit 0/1
//! of each axis is the sign bit. Point `i` carries the label whose bit `q`
//! is `(i >> (Q-1-q)) & 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Qpsk,
    Qam16,
}

#[derive(Clone, Debug)]
pub struct Constellation {
    modulation: Modulation,
    bits: usize,
    points: Vec<Complex64>,
    /// `subsets[q][b]` holds the indices of points whose bit `q` equals `b`.
    subsets: Vec<[Vec<usize>; 2]>,
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        match modulation {
            Modulation::Qpsk => Self::qpsk(),
            Modulation::Qam16 => Self::qam16(),
        }
    }

    pub fn qpsk() -> Self {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        Self::build(Modulation::Qpsk, 2, |b| {
            Complex64::new(c * (1.0 - 2.0 * b[0] as f64), c * (1.0 - 2.0 * b[1] as f64))
        })
    }

    pub fn qam16() -> Self {
        let c = 1.0 / 10f64.sqrt();
        Self::build(Modulation::Qam16, 4, |b| {
            let s = |x: u8| 1.0 - 2.0 * x as f64;
            Complex64::new(c * s(b[0]) * (2.0 - s(b[2])), c * s(b[1]) * (2.0 - s(b[3])))
        })
    }

    fn build(modulation: Modulation, bits: usize, f: impl Fn(&[u8]) -> Complex64) -> Self {
        let n = 1usize << bits;
        let points: Vec<Complex64> = (0..n).map(|i| f(&label_bits(i, bits))).collect();
        let subsets = (0..bits)
            .map(|q| {
                let mut s = [Vec::new(), Vec::new()];
                for i in 0..n {
                    s[label_bits(i, bits)[q] as usize].push(i);
                }
                s
            })
            .collect();
        Constellation { modulation, bits, points, subsets }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    /// Bits per symbol `Q`.
    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn label(&self, index: usize) -> Vec<u8> {
        label_bits(index, self.bits)
    }

    /// Indices of the points whose bit `q` equals `b`.
    pub fn subset(&self, q: usize, b: u8) -> &[usize] {
        &self.subsets[q][b as usize]
    }

    pub fn map_label(&self, bits: &[u8]) -> Complex64 {
        let idx = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        self.points[idx]
    }

    /// Nearest-point hard demapping.
    pub fn slice(&self, s: Complex64) -> Vec<u8> {
        let best = (0..self.points.len())
            .min_by(|&a, &b| {
                (s - self.points[a]).norm_sqr().total_cmp(&(s - self.points[b]).norm_sqr())
            })
            .expect("constellation is never empty");
        self.label(best)
    }

    /// Amplitude scale `c` of the per-axis levels `±c, ±3c, ...`.
    pub fn axis_unit(&self) -> f64 {
        match self.modulation {
            Modulation::Qpsk => std::f64::consts::FRAC_1_SQRT_2,
            Modulation::Qam16 => 1.0 / 10f64.sqrt(),
        }
    }
}

fn label_bits(index: usize, bits: usize) -> Vec<u8> {
    (0..bits).map(|q| ((index >> (bits - 1 - q)) & 1) as u8).collect()
}

/// Per-user symbol streams produced by [`map_bits`], together with the bits they carry.
#[derive(Clone, Debug)]
pub struct SymbolGrid {
    /// `symbols[u][v]`
    pub symbols: Vec<Vec<Complex64>>,
    /// `bits[u][k]`
    pub bits: Vec<Vec<u8>>,
}

/// Maps each user's coded bits onto constellation symbols, `Q` bits per symbol.
pub fn map_bits(bits: &[Vec<u8>], c: &Constellation) -> Result<SymbolGrid> {
    let q = c.bits_per_symbol();
    let mut symbols = Vec::with_capacity(bits.len());
    for (u, row) in bits.iter().enumerate() {
        if row.len() % q != 0 {
            return Err(config(format!(
                "user {u}: {} coded bits is not a multiple of {q} bits/symbol",
                row.len()
            )));
        }
        symbols.push(row.chunks(q).map(|chunk| c.map_label(chunk)).collect());
    }
    Ok(SymbolGrid { symbols, bits: bits.to_vec() })
}

/// Hard nearest-point demapping of one symbol stream.
pub fn demap_hard(symbols: &[Complex64], c: &Constellation) -> Vec<u8> {
    symbols.iter().flat_map(|s| c.slice(*s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_points() {
        let q16 = Constellation::qam16();
        let s10 = 10f64.sqrt();
        assert_eq!(q16.map_label(&[0, 0, 0, 0]), Complex64::new(1.0 / s10, 1.0 / s10));
        assert_eq!(q16.map_label(&[1, 0, 1, 0]), Complex64::new(-3.0 / s10, 1.0 / s10));
        let qp = Constellation::qpsk();
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(qp.map_label(&[0, 0]), Complex64::new(s2, s2));
        assert_eq!(qp.map_label(&[1, 1]), Complex64::new(-s2, -s2));
    }

    #[test]
    fn unit_energy_and_unique_points() {
        for c in [Constellation::qpsk(), Constellation::qam16()] {
            let n = c.points().len();
            assert_eq!(n, 1 << c.bits_per_symbol());
            let e: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / n as f64;
            assert!((e - 1.0).abs() < 1e-12);
            for i in 0..n {
                for j in i + 1..n {
                    assert!((c.points()[i] - c.points()[j]).norm() > 1e-6);
                }
            }
        }
    }

    #[test]
    fn nearest_neighbours_differ_in_one_bit() {
        for c in [Constellation::qpsk(), Constellation::qam16()] {
            let pts = c.points();
            let dmin = (0..pts.len())
                .flat_map(|i| (0..pts.len()).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| (pts[i] - pts[j]).norm())
                .fold(f64::INFINITY, f64::min);
            for i in 0..pts.len() {
                for j in 0..pts.len() {
                    if i != j && ((pts[i] - pts[j]).norm() - dmin).abs() < 1e-9 {
                        let diff = c.label(i).iter().zip(c.label(j)).filter(|(a, b)| **a != *b).count();
                        assert_eq!(diff, 1, "points {i},{j}");
                    }
                }
            }
        }
    }

    #[test]
    fn map_demap_bijective_over_all_labels() {
        for c in [Constellation::qpsk(), Constellation::qam16()] {
            let q = c.bits_per_symbol();
            let bits: Vec<u8> = (0..1usize << q).flat_map(|i| c.label(i)).collect();
            let grid = map_bits(std::slice::from_ref(&bits), &c).unwrap();
            assert_eq!(demap_hard(&grid.symbols[0], &c), bits);
        }
    }

    #[test]
    fn map_rejects_partial_symbol() {
        assert!(map_bits(&[vec![0, 1, 1]], &Constellation::qam16()).is_err());
    }

    #[test]
    fn subsets_partition_points() {
        let c = Constellation::qam16();
        for q in 0..4 {
            assert_eq!(c.subset(q, 0).len(), 8);
            assert_eq!(c.subset(q, 1).len(), 8);
            for &i in c.subset(q, 1) {
                assert_eq!(c.label(i)[q], 1);
            }
        }
    }
}
