//! Soft-input soft-output MIMO detection on the whitened per-RE model.

pub mod context;
pub mod detectors;
pub mod observation;
pub mod symbols;

use serde::{Deserialize, Serialize};

pub use context::{DetectionContext, Filters};
pub use detectors::{detect, lmmse, loco_pic, mmse_pic, DetectorOut};
pub use observation::{CoherentGroup, Observation};
pub use symbols::{maxlog_demap, maxlog_demap_generic, soft_symbol, soft_symbol_generic, LLR_CLIP, VAR_FLOOR};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    Lmmse,
    MmsePic,
    LocoPic,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Lmmse => "lmmse",
            DetectorKind::MmsePic => "mmse-pic",
            DetectorKind::LocoPic => "loco-pic",
        }
    }
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lmmse" => Ok(DetectorKind::Lmmse),
            "mmse-pic" | "mmse_pic" | "mmsepic" => Ok(DetectorKind::MmsePic),
            "loco-pic" | "loco_pic" | "locopic" => Ok(DetectorKind::LocoPic),
            other => Err(crate::error::config(format!("unknown detector '{other}'"))),
        }
    }
}
