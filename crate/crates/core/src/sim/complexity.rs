//! Real-multiplication counts of the detectors.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::frames::domain;
use crate::detect::{detect, DetectionContext, DetectorKind, DetectorOut, Observation};
use crate::error::Result;
use crate::numkit::count::CONVENTION;
use crate::numkit::rng::{complex_normal, derived_rng};
use crate::numkit::{counted_scope, CMat};
use crate::phy::Constellation;

/// Data REs sharing one channel in the block count.
pub const BLOCK_RES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub antennas: usize,
    pub users: usize,
    pub detector: DetectorKind,
    pub stages: usize,
    /// One channel, [`BLOCK_RES`] data REs.
    pub block_mults: u64,
    /// One channel, every data RE of a frame.
    pub frame_mults: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub convention: String,
    pub frame_res: usize,
    pub rows: Vec<ComplexityRow>,
}

impl ComplexityReport {
    pub fn get(&self, antennas: usize, users: usize, detector: DetectorKind, stages: usize) -> Option<&ComplexityRow> {
        self.rows
            .iter()
            .find(|r| (r.antennas, r.users, r.detector, r.stages) == (antennas, users, detector, stages))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("antennas,users,detector,stages,block_mults,frame_mults\n");
        for r in &self.rows {
            writeln!(s, "{},{},{},{},{},{}", r.antennas, r.users, r.detector, r.stages, r.block_mults, r.frame_mults)
                .expect("writing to a String");
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("# {}\n", self.convention);
        writeln!(s, "{:>8} {:>9} {:>3} {:>14} {:>14}", "BxU", "detector", "I", "block (1e3)", "frame (1e3)").ok();
        for r in &self.rows {
            writeln!(
                s,
                "{:>8} {:>9} {:>3} {:>14.2} {:>14.1}",
                format!("{}x{}", r.antennas, r.users),
                r.detector.name(),
                r.stages,
                r.block_mults as f64 / 1e3,
                r.frame_mults as f64 / 1e3
            )
            .ok();
        }
        s
    }
}

/// Counts detector multiplications for `stages` detection stages over one
/// channel and `res` data REs: filter setup, the zero-prior first stage and
/// `stages - 1` stages with informative priors. Decoding is not counted.
pub fn count_detection(antennas: usize, users: usize, kind: DetectorKind, stages: usize, res: usize, seed: u64) -> Result<u64> {
    let c = Constellation::qam16();
    let q = c.bits_per_symbol();
    let mut rng = derived_rng(seed, domain::COMPLEXITY, (antennas * 1000 + users) as u64);
    let h = CMat::from_fn(antennas, users, |_, _| complex_normal(&mut rng, 1.0));
    let y = (0..res).map(|_| (0..antennas).map(|_| complex_normal(&mut rng, 1.0)).collect()).collect();
    let obs = Observation::single(h, y)?;
    let priors: Vec<Vec<f64>> =
        (0..users).map(|_| (0..res * q).map(|_| rng.random_range(-6.0..6.0)).collect()).collect();
    let (r, n) = counted_scope(|| -> Result<()> {
        let ctx = DetectionContext::new(&obs, kind)?;
        let _: DetectorOut<f64> = detect(&ctx, None, 1.0, true, &c)?;
        for _ in 1..stages {
            detect(&ctx, Some(&priors), 0.5, false, &c)?;
        }
        Ok(())
    });
    r?;
    Ok(n)
}

/// Counts for every `(B, U)` in `sizes`, every detector and `I = 1..=max_stages`
/// (LMMSE only for `I = 1`).
pub fn complexity_report(sizes: &[(usize, usize)], max_stages: usize, frame_res: usize, seed: u64) -> Result<ComplexityReport> {
    let mut rows = Vec::new();
    for &(b, u) in sizes {
        for kind in [DetectorKind::Lmmse, DetectorKind::MmsePic, DetectorKind::LocoPic] {
            let top = if kind == DetectorKind::Lmmse { 1 } else { max_stages };
            for i in 1..=top {
                rows.push(ComplexityRow {
                    antennas: b,
                    users: u,
                    detector: kind,
                    stages: i,
                    block_mults: count_detection(b, u, kind, i, BLOCK_RES, seed)?,
                    frame_mults: count_detection(b, u, kind, i, frame_res, seed)?,
                });
            }
        }
    }
    Ok(ComplexityReport { convention: CONVENTION.to_string(), frame_res, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_grow_with_stages_and_loco_is_cheaper() {
        let r = complexity_report(&[(8, 4)], 3, 20, 1).unwrap();
        assert_eq!(r.rows.len(), 7);
        for i in 2..=3 {
            let m = r.get(8, 4, DetectorKind::MmsePic, i).unwrap().block_mults;
            let l = r.get(8, 4, DetectorKind::LocoPic, i).unwrap().block_mults;
            assert!(l < m);
            assert!(m > r.get(8, 4, DetectorKind::MmsePic, i - 1).unwrap().block_mults);
            assert!(l > r.get(8, 4, DetectorKind::LocoPic, i - 1).unwrap().block_mults);
        }
        assert!(r.to_table().contains("real multiplications"));
        assert_eq!(r.to_csv().lines().count(), 8);
    }

    #[test]
    fn counts_are_deterministic() {
        let a = count_detection(16, 4, DetectorKind::MmsePic, 2, 10, 3).unwrap();
        let b = count_detection(16, 4, DetectorKind::MmsePic, 2, 10, 3).unwrap();
        assert_eq!(a, b);
    }
}
