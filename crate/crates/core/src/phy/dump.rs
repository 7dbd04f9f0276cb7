//! Binary channel dumps for externally generated channels.
//!
//! Layout: the 16-byte [`MAGIC`], one line of JSON header terminated by
//! `\n`, then little-endian `complex64` (two `f32`) entries ordered
//! `[frame][t][w][b][u]`.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::channel::{ChannelGrid, ChannelRealization};
use super::frame::FrameConfig;
use crate::error::{config, input, Result};
use crate::numkit::CMat;

pub const MAGIC: &[u8; 16] = b"MIMO-CHAN-DUMP\x00\x01";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub frames: usize,
    #[serde(rename = "B")]
    pub antennas: usize,
    #[serde(rename = "U")]
    pub users: usize,
    #[serde(rename = "W")]
    pub subcarriers: usize,
    #[serde(rename = "T")]
    pub symbols: usize,
    pub dtype: String,
}

/// Per-frame lists of `T * W` channel matrices, RE-major in `(t, w)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDump {
    pub header: DumpHeader,
    pub frames: Vec<Vec<CMat>>,
}

pub fn write_channel_dump(path: impl AsRef<Path>, dump: &ChannelDump) -> Result<()> {
    let h = &dump.header;
    let per_re = h.antennas * h.users;
    if dump.frames.len() != h.frames
        || dump.frames.iter().any(|f| {
            f.len() != h.symbols * h.subcarriers || f.iter().any(|m| m.rows() != h.antennas || m.cols() != h.users)
        })
    {
        return Err(config("channel dump contents do not match its header"));
    }
    let mut buf = Vec::with_capacity(64 + h.frames * h.symbols * h.subcarriers * per_re * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(serde_json::to_string(h).map_err(|e| input(e.to_string()))?.as_bytes());
    buf.push(b'\n');
    for frame in &dump.frames {
        for m in frame {
            for z in m.as_slice() {
                buf.extend_from_slice(&(z.re as f32).to_le_bytes());
                buf.extend_from_slice(&(z.im as f32).to_le_bytes());
            }
        }
    }
    std::fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

/// Reads a dump verbatim (no normalization). The whole file is validated
/// before anything is returned.
pub fn read_channel_dump(path: impl AsRef<Path>) -> Result<ChannelDump> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(input("channel dump: bad magic"));
    }
    let rest = &bytes[MAGIC.len()..];
    let nl = rest.iter().position(|&c| c == b'\n').ok_or_else(|| input("channel dump: unterminated header"))?;
    let header: DumpHeader =
        serde_json::from_slice(&rest[..nl]).map_err(|e| input(format!("channel dump header: {e}")))?;
    if header.dtype != "c64" {
        return Err(input(format!("channel dump: unsupported dtype '{}'", header.dtype)));
    }
    let payload = &rest[nl + 1..];
    let per_re = header.antennas * header.users;
    let res = header.symbols * header.subcarriers;
    let expected = header.frames * res * per_re * 8;
    if payload.len() != expected {
        return Err(input(format!("channel dump: payload has {} bytes, header implies {expected}", payload.len())));
    }
    let f32_at = |i: usize| f32::from_le_bytes(payload[i..i + 4].try_into().expect("4-byte slice")) as f64;
    let mut frames = Vec::with_capacity(header.frames);
    let mut off = 0;
    for _ in 0..header.frames {
        let mut grid = Vec::with_capacity(res);
        for _ in 0..res {
            let data: Vec<Complex64> = (0..per_re).map(|k| Complex64::new(f32_at(off + 8 * k), f32_at(off + 8 * k + 4))).collect();
            off += per_re * 8;
            grid.push(CMat::from_vec(header.antennas, header.users, data)?);
        }
        frames.push(grid);
    }
    Ok(ChannelDump { header, frames })
}

/// Loads a dump for `cfg`, scaling every frame to unit average energy per
/// channel entry, and returns perfect-CSI realizations.
pub fn load_channel_dump(path: impl AsRef<Path>, cfg: &FrameConfig) -> Result<Vec<ChannelRealization>> {
    let dump = read_channel_dump(path)?;
    let h = &dump.header;
    if (h.antennas, h.users, h.subcarriers, h.symbols) != (cfg.antennas, cfg.users, cfg.subcarriers, cfg.symbols) {
        return Err(input(format!(
            "channel dump is {}x{} over {}x{} REs, frame expects {}x{} over {}x{}",
            h.antennas, h.users, h.subcarriers, h.symbols, cfg.antennas, cfg.users, cfg.subcarriers, cfg.symbols
        )));
    }
    dump.frames
        .into_iter()
        .map(|grid| {
            let grid = normalize_frame(grid)?;
            Ok(ChannelRealization::perfect(ChannelGrid::PerRe(grid)))
        })
        .collect()
}

/// Rescales so that the mean of `||H||_F^2 / (B U)` over REs equals one.
pub fn normalize_frame(grid: Vec<CMat>) -> Result<Vec<CMat>> {
    let n = grid.len() as f64;
    let energy: f64 = grid.iter().map(|m| m.frobenius().powi(2) / (m.rows() * m.cols()) as f64).sum::<f64>() / n;
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(input("channel dump frame has zero or non-finite energy"));
    }
    let k = 1.0 / energy.sqrt();
    Ok(grid.into_iter().map(|m| m.scale(k)).collect())
}
