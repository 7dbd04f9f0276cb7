//! Monte-Carlo BLER/BER sweeps over SNR.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frames::{domain, draw_frame, evaluate_frame, Scenario};
use crate::error::{config, Result};
use crate::pipeline::{HyperParamSet, PipelineSpec};

/// Column order of sweep CSV files.
pub const CSV_HEADER: &str = "snr_db,frames,blk_err,bler,bler_lo,bler_hi,ber,mults_per_frame,pipeline_id,seed";

/// Two-sided 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let den = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / den;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / den;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if p == 1.0 { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Eb/N0 points in dB.
    pub snr_db: Vec<f64>,
    /// Frame cap per point.
    pub frames: usize,
    pub seed: u64,
    /// Stop a point once this many user-block errors were seen.
    #[serde(default)]
    pub early_stop: Option<u64>,
    /// Frames evaluated between stop checks; fixes the stopping point
    /// independently of the worker count.
    #[serde(default = "default_chunk")]
    pub chunk: usize,
}

fn default_chunk() -> usize {
    100
}

impl SweepConfig {
    pub fn new(snr_db: Vec<f64>, frames: usize, seed: u64) -> Self {
        SweepConfig { snr_db, frames, seed, early_stop: Some(200), chunk: default_chunk() }
    }

    pub fn without_early_stop(mut self) -> Self {
        self.early_stop = None;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub frames: u64,
    /// Block errors pooled over users.
    pub blk_err: u64,
    /// Per-user block errors.
    pub user_blk_err: Vec<u64>,
    /// Frames with at least one user in error.
    pub frame_err: u64,
    pub bit_err: u64,
    pub bits: u64,
    pub bler: f64,
    pub bler_lo: f64,
    pub bler_hi: f64,
    pub ber: f64,
    pub mults_per_frame: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub pipeline_id: String,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for p in &self.points {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                p.snr_db,
                p.frames,
                p.blk_err,
                p.bler,
                p.bler_lo,
                p.bler_hi,
                p.ber,
                p.mults_per_frame,
                self.pipeline_id,
                self.seed
            )
            .expect("writing to a String");
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn point(&self, snr_db: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.snr_db == snr_db)
    }

    /// SNR where the BLER curve crosses `target`, interpolating linearly in
    /// `(snr, log10 bler)` between the first bracketing pair of points.
    pub fn snr_at_bler(&self, target: f64) -> Option<f64> {
        self.points.windows(2).find_map(|w| {
            let (a, b) = (&w[0], &w[1]);
            if a.bler >= target && b.bler < target {
                if b.bler <= 0.0 {
                    return Some(b.snr_db);
                }
                let (la, lb, lt) = (a.bler.log10(), b.bler.log10(), target.log10());
                Some(a.snr_db + (la - lt) / (la - lb) * (b.snr_db - a.snr_db))
            } else {
                None
            }
        })
    }
}

#[derive(Default)]
struct Tally {
    frames: u64,
    user_blk: Vec<u64>,
    frame_err: u64,
    bit_err: u64,
    mults: u64,
}

/// Runs `params` over every SNR point. Frame `k` of every point uses stream
/// `(seed, k)`, so points share channels and bits, and results do not depend
/// on the number of worker threads.
pub fn sweep(params: &HyperParamSet, scenario: &Scenario, cfg: &SweepConfig) -> Result<SweepResult> {
    params.validate()?;
    if cfg.chunk == 0 {
        return Err(config("sweep chunk size must be positive"));
    }
    let spec: PipelineSpec = params.spec();
    let p = params.params::<f64>();
    let users = scenario.frame.users;
    let data_bits = scenario.frame.data_bits() as u64;
    let mut points = Vec::with_capacity(cfg.snr_db.len());
    for &snr in &cfg.snr_db {
        let mut t = Tally { user_blk: vec![0; users], ..Tally::default() };
        let mut start = 0usize;
        while start < cfg.frames {
            let end = (start + cfg.chunk).min(cfg.frames);
            let outcomes = (start..end)
                .into_par_iter()
                .map(|k| {
                    let draw = draw_frame(scenario, cfg.seed, domain::SWEEP, k as u64, snr)?;
                    evaluate_frame(&spec, &p, scenario, &draw)
                })
                .collect::<Result<Vec<_>>>()?;
            for o in outcomes {
                t.frames += 1;
                for (u, &e) in o.block_errors.iter().enumerate() {
                    t.user_blk[u] += e as u64;
                }
                t.frame_err += o.block_errors.iter().any(|&e| e) as u64;
                t.bit_err += o.bit_errors as u64;
                t.mults += o.mults;
            }
            start = end;
            let blk: u64 = t.user_blk.iter().sum();
            if cfg.early_stop.is_some_and(|s| blk >= s) {
                break;
            }
        }
        let blk_err: u64 = t.user_blk.iter().sum();
        let blocks = t.frames * users as u64;
        let bits = blocks * data_bits;
        let (lo, hi) = wilson_interval(blk_err, blocks);
        log::info!("{} at {snr} dB: {blk_err}/{blocks} block errors", spec.id());
        points.push(SweepPoint {
            snr_db: snr,
            frames: t.frames,
            blk_err,
            user_blk_err: t.user_blk,
            frame_err: t.frame_err,
            bit_err: t.bit_err,
            bits,
            bler: if blocks > 0 { blk_err as f64 / blocks as f64 } else { 0.0 },
            bler_lo: lo,
            bler_hi: hi,
            ber: if bits > 0 { t.bit_err as f64 / bits as f64 } else { 0.0 },
            mults_per_frame: if t.frames > 0 { t.mults as f64 / t.frames as f64 } else { 0.0 },
        });
    }
    Ok(SweepResult { pipeline_id: spec.id(), seed: cfg.seed, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::DetectorKind;
    use crate::pipeline::classical_init;

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.03 && hi < 0.04);
        let (lo, hi) = wilson_interval(5, 100);
        assert!(lo < 0.05 && hi > 0.05);
        assert!((lo - 0.02154).abs() < 1e-4 && (hi - 0.11175).abs() < 1e-4);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }

    fn point(snr: f64, bler: f64) -> SweepPoint {
        SweepPoint {
            snr_db: snr,
            frames: 1,
            blk_err: 0,
            user_blk_err: vec![],
            frame_err: 0,
            bit_err: 0,
            bits: 0,
            bler,
            bler_lo: 0.0,
            bler_hi: 1.0,
            ber: 0.0,
            mults_per_frame: 0.0,
        }
    }

    #[test]
    fn crossing_interpolates_in_log_domain() {
        let r = SweepResult { pipeline_id: "x".into(), seed: 0, points: vec![point(3.0, 0.1), point(4.0, 2e-2), point(5.0, 5e-3)] };
        let s = r.snr_at_bler(1e-2).unwrap();
        assert!((s - 4.5).abs() < 0.01, "{s}");
        assert!(r.snr_at_bler(1e-4).is_none());
    }

    #[test]
    fn csv_schema_and_noise_free_point() {
        let sc = Scenario::rayleigh(4).unwrap();
        let p = classical_init(&PipelineSpec::even(DetectorKind::Lmmse, 1, 12).unwrap());
        let r = sweep(&p, &sc, &SweepConfig::new(vec![60.0], 3, 4)).unwrap();
        let pt = &r.points[0];
        assert_eq!((pt.frames, pt.blk_err, pt.bler), (3, 0, 0.0));
        assert_eq!(pt.bler_lo, 0.0);
        assert!(pt.bler_hi > 0.0);
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 10);
        assert_eq!(row[8], "lmmse_I1_12_perfect");
    }

    #[test]
    fn early_stop_happens_at_chunk_boundaries() {
        let sc = Scenario::rayleigh(4).unwrap();
        let p = classical_init(&PipelineSpec::even(DetectorKind::Lmmse, 1, 12).unwrap());
        let cfg = SweepConfig { snr_db: vec![-3.0], frames: 40, seed: 1, early_stop: Some(5), chunk: 4 };
        let r = sweep(&p, &sc, &cfg).unwrap();
        assert_eq!(r.points[0].frames, 4);
        assert!(r.points[0].blk_err >= 5);
    }
}
