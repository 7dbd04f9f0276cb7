//! Parity-check matrices, alist I/O and systematic encoding.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use crate::error::{config, input, Result};

/// Binary LDPC code given by its parity-check matrix.
///
/// Edges are numbered check-node-major: the edges of check `c` occupy
/// `cn_start[c]..cn_start[c + 1]`.
#[derive(Clone, Debug)]
pub struct LdpcCode {
    n: usize,
    cn_adj: Vec<Vec<usize>>,
    vn_adj: Vec<Vec<usize>>,
    cn_start: Vec<usize>,
    edge_vn: Vec<u32>,
    encoder: Encoder,
}

#[derive(Clone, Debug)]
struct Encoder {
    data_positions: Vec<usize>,
    parity_positions: Vec<usize>,
    /// Row `i` gives parity bit `parity_positions[i]` as a GF(2) combination of data bits.
    rows: Vec<Vec<u64>>,
}

impl LdpcCode {
    /// Builds a code from the variable-node lists of each check (`cn_adj[c]`).
    /// The matrix must have full row rank.
    pub fn from_checks(n: usize, cn_adj: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 || cn_adj.is_empty() {
            return Err(config("parity-check matrix must have at least one row and column"));
        }
        let mut vn_adj = vec![Vec::new(); n];
        for (c, vs) in cn_adj.iter().enumerate() {
            if vs.is_empty() {
                return Err(config(format!("check {c} has no connections")));
            }
            for &v in vs {
                if v >= n {
                    return Err(input(format!("check {c} references variable {v} >= {n}")));
                }
                if vn_adj[v].contains(&c) {
                    return Err(input(format!("duplicate edge between check {c} and variable {v}")));
                }
                vn_adj[v].push(c);
            }
        }
        let mut cn_start = Vec::with_capacity(cn_adj.len() + 1);
        let mut edge_vn = Vec::new();
        cn_start.push(0);
        for vs in &cn_adj {
            edge_vn.extend(vs.iter().map(|&v| v as u32));
            cn_start.push(edge_vn.len());
        }
        let encoder = Encoder::build(n, &cn_adj)?;
        Ok(LdpcCode { n, cn_adj, vn_adj, cn_start, edge_vn, encoder })
    }

    /// The bundled (3,6)-regular rate-1/2 code with 2400 coded bits.
    pub fn bundled() -> Arc<LdpcCode> {
        static CODE: OnceLock<Arc<LdpcCode>> = OnceLock::new();
        CODE.get_or_init(|| {
            let text = include_str!("../../assets/peg_3_6_n2400.alist");
            Arc::new(Self::parse_alist(text).expect("bundled alist is valid"))
        })
        .clone()
    }

    pub fn load_alist(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_alist(&text)
    }

    /// Parses the MacKay alist layout. Indices in the file are 1-based; zero
    /// entries are treated as padding.
    pub fn parse_alist(text: &str) -> Result<Self> {
        let mut tok = text.split_whitespace().map(|t| {
            t.parse::<usize>().map_err(|_| input(format!("alist: bad integer '{t}'")))
        });
        let mut next = |what: &str| -> Result<usize> {
            tok.next().unwrap_or_else(|| Err(input(format!("alist: unexpected end of file reading {what}"))))
        };
        let n = next("N")?;
        let m = next("M")?;
        let max_col = next("max column degree")?;
        let max_row = next("max row degree")?;
        let col_deg: Vec<usize> = (0..n).map(|_| next("column degree")).collect::<Result<_>>()?;
        let row_deg: Vec<usize> = (0..m).map(|_| next("row degree")).collect::<Result<_>>()?;
        if col_deg.iter().any(|&d| d > max_col) || row_deg.iter().any(|&d| d > max_row) {
            return Err(input("alist: degree exceeds declared maximum"));
        }
        let read_lists = |count: usize, deg: &[usize], max: usize, bound: usize, next: &mut dyn FnMut(&str) -> Result<usize>| -> Result<Vec<Vec<usize>>> {
            let mut out = Vec::with_capacity(count);
            for (i, &d) in deg.iter().enumerate() {
                let mut list = Vec::with_capacity(d);
                for slot in 0..max {
                    let x = next("adjacency entry")?;
                    if x == 0 {
                        if slot < d {
                            return Err(input(format!("alist: list {} shorter than its degree {d}", i + 1)));
                        }
                        continue;
                    }
                    if x > bound {
                        return Err(input(format!("alist: index {x} out of range 1..={bound}")));
                    }
                    list.push(x - 1);
                }
                if list.len() != d {
                    return Err(input(format!("alist: list {} has {} entries, degree says {d}", i + 1, list.len())));
                }
                out.push(list);
            }
            Ok(out)
        };
        let cols = read_lists(n, &col_deg, max_col, m, &mut next)?;
        let rows = read_lists(m, &row_deg, max_row, n, &mut next)?;
        for (v, cs) in cols.iter().enumerate() {
            for &c in cs {
                if !rows[c].contains(&v) {
                    return Err(input(format!("alist: column {} lists row {} but not vice versa", v + 1, c + 1)));
                }
            }
        }
        if cols.iter().map(Vec::len).sum::<usize>() != rows.iter().map(Vec::len).sum::<usize>() {
            return Err(input("alist: row and column lists disagree"));
        }
        Self::from_checks(n, rows)
    }

    pub fn to_alist(&self) -> String {
        let max_col = self.vn_adj.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.cn_adj.iter().map(Vec::len).max().unwrap_or(0);
        let mut s = String::new();
        let line = |s: &mut String, xs: &mut dyn Iterator<Item = usize>| {
            let parts: Vec<String> = xs.map(|x| x.to_string()).collect();
            let _ = writeln!(s, "{}", parts.join(" "));
        };
        let _ = writeln!(s, "{} {}", self.n, self.cn_adj.len());
        let _ = writeln!(s, "{max_col} {max_row}");
        line(&mut s, &mut self.vn_adj.iter().map(Vec::len));
        line(&mut s, &mut self.cn_adj.iter().map(Vec::len));
        for cs in &self.vn_adj {
            line(&mut s, &mut cs.iter().map(|c| c + 1).chain(std::iter::repeat(0)).take(max_col));
        }
        for vs in &self.cn_adj {
            line(&mut s, &mut vs.iter().map(|v| v + 1).chain(std::iter::repeat(0)).take(max_row));
        }
        s
    }

    /// Codeword length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of parity checks.
    pub fn m(&self) -> usize {
        self.cn_adj.len()
    }

    /// Number of information bits per codeword.
    pub fn data_len(&self) -> usize {
        self.encoder.data_positions.len()
    }

    pub fn rate(&self) -> f64 {
        self.data_len() as f64 / self.n as f64
    }

    pub fn edges(&self) -> usize {
        self.edge_vn.len()
    }

    /// Variables attached to check `c`.
    pub fn check(&self, c: usize) -> &[usize] {
        &self.cn_adj[c]
    }

    /// Checks attached to variable `v`.
    pub fn variable(&self, v: usize) -> &[usize] {
        &self.vn_adj[v]
    }

    pub(crate) fn cn_start(&self) -> &[usize] {
        &self.cn_start
    }

    pub(crate) fn edge_vn(&self) -> &[u32] {
        &self.edge_vn
    }

    /// Codeword positions carrying the information bits, in data order.
    pub fn data_positions(&self) -> &[usize] {
        &self.encoder.data_positions
    }

    pub fn encode(&self, data: &[u8]) -> Result<Vec<u8>> {
        let e = &self.encoder;
        if data.len() != e.data_positions.len() {
            return Err(config(format!("encode: expected {} data bits, got {}", e.data_positions.len(), data.len())));
        }
        let packed = pack(data);
        let mut word = vec![0u8; self.n];
        for (&p, &d) in e.data_positions.iter().zip(data) {
            word[p] = d & 1;
        }
        for (row, &p) in e.rows.iter().zip(&e.parity_positions) {
            let ones: u32 = row.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
            word[p] = (ones & 1) as u8;
        }
        Ok(word)
    }

    pub fn syndrome_weight(&self, word: &[u8]) -> usize {
        self.cn_adj
            .iter()
            .filter(|vs| vs.iter().fold(0u8, |acc, &v| acc ^ (word[v] & 1)) == 1)
            .count()
    }

    /// Extracts the information bits from a codeword or hard decision.
    pub fn extract_data<X: Copy>(&self, word: &[X]) -> Vec<X> {
        self.encoder.data_positions.iter().map(|&p| word[p]).collect()
    }
}

fn pack(bits: &[u8]) -> Vec<u64> {
    let mut out = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out
}

impl Encoder {
    /// Reduced row echelon form of `H` over GF(2). Pivot columns carry the
    /// parity bits, the remaining columns the data.
    fn build(n: usize, cn_adj: &[Vec<usize>]) -> Result<Self> {
        let m = cn_adj.len();
        let words = n.div_ceil(64);
        let mut rows: Vec<Vec<u64>> = cn_adj
            .iter()
            .map(|vs| {
                let mut r = vec![0u64; words];
                for &v in vs {
                    r[v / 64] ^= 1 << (v % 64);
                }
                r
            })
            .collect();
        let bit = |r: &[u64], c: usize| (r[c / 64] >> (c % 64)) & 1 == 1;
        let mut pivots = Vec::with_capacity(m);
        let mut rank = 0;
        for col in 0..n {
            if rank == m {
                break;
            }
            let Some(p) = (rank..m).find(|&r| bit(&rows[r], col)) else { continue };
            rows.swap(rank, p);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && bit(row, col) {
                    for (a, b) in row.iter_mut().zip(&pivot_row) {
                        *a ^= b;
                    }
                }
            }
            pivots.push(col);
            rank += 1;
        }
        if rank < m {
            return Err(config(format!("parity-check matrix is rank deficient (rank {rank} < {m} rows)")));
        }
        let mut is_pivot = vec![false; n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let data_positions: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let enc_rows = rows
            .iter()
            .map(|row| {
                let sel: Vec<u8> = data_positions.iter().map(|&c| bit(row, c) as u8).collect();
                pack(&sel)
            })
            .collect();
        Ok(Encoder { data_positions, parity_positions: pivots, rows: enc_rows })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::numkit::rng::{random_bits, rng_from_seed};

    pub(crate) fn toy() -> LdpcCode {
        LdpcCode::from_checks(2, vec![vec![0, 1]]).unwrap()
    }

    #[test]
    fn toy_adjacency() {
        let c = toy();
        assert_eq!(c.variable(0), &[0]);
        assert_eq!(c.variable(1), &[0]);
        assert_eq!(c.data_len(), 1);
        let alist = "2 1\n1 2\n1 1\n2\n1\n1\n1 2\n";
        let p = LdpcCode::parse_alist(alist).unwrap();
        assert_eq!(p.check(0), &[0, 1]);
    }

    #[test]
    fn alist_rejects_out_of_range() {
        let alist = "2 1\n1 2\n1 1\n2\n2\n1\n1 3\n";
        assert!(matches!(LdpcCode::parse_alist(alist), Err(crate::Error::Input(_))));
        assert!(LdpcCode::parse_alist("2 1\n1").is_err());
    }

    #[test]
    fn rank_deficient_is_config_error() {
        let r = LdpcCode::from_checks(3, vec![vec![0, 1], vec![0, 1]]);
        assert!(matches!(r, Err(crate::Error::Config(_))));
    }

    #[test]
    fn bundled_code_shape() {
        let c = LdpcCode::bundled();
        assert_eq!((c.n(), c.m(), c.data_len()), (2400, 1200, 1200));
        assert!((0..c.n()).all(|v| c.variable(v).len() == 3));
        assert!((0..c.m()).all(|k| c.check(k).len() == 6));
        let again = LdpcCode::parse_alist(&c.to_alist()).unwrap();
        assert_eq!(again.cn_adj, c.cn_adj);
    }

    #[test]
    fn encoding_is_systematic_linear_and_valid() {
        let c = LdpcCode::bundled();
        assert!(c.encode(&vec![0; 1200]).unwrap().iter().all(|&b| b == 0));
        let mut rng = rng_from_seed(3);
        let d1 = random_bits(&mut rng, 1200);
        let d2 = random_bits(&mut rng, 1200);
        let w1 = c.encode(&d1).unwrap();
        let w2 = c.encode(&d2).unwrap();
        assert_eq!(c.syndrome_weight(&w1), 0);
        assert_eq!(c.extract_data(&w1), d1);
        let dx: Vec<u8> = d1.iter().zip(&d2).map(|(a, b)| a ^ b).collect();
        let wx: Vec<u8> = w1.iter().zip(&w2).map(|(a, b)| a ^ b).collect();
        assert_eq!(c.encode(&dx).unwrap(), wx);
        assert!(c.encode(&d1[..10]).is_err());
    }
}
