//! Config-driven experiments: optional training, a sweep and a complexity
//! report, with results, parameters and metadata written to one directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::complexity::{complexity_report, ComplexityReport};
use super::frames::Scenario;
use super::sweep::{sweep, SweepConfig, SweepResult};
use crate::error::{input, Result};
use crate::numkit::count::CONVENTION;
use crate::numkit::rng::ALGORITHM;
use crate::phy::FrameConfig;
use crate::pipeline::{classical_init, HyperParamSet, PipelineSpec};
use crate::train::{curve_csv, train, TrainConfig};

/// How SNR values in configs and result files are defined.
pub const EBN0_CONVENTION: &str =
    "Eb/N0 in dB per receive antenna; N0 = 1 / (R Q 10^(Eb/N0 / 10)) for unit-energy symbols and unit-variance channel entries, pilot overhead excluded";

/// Version string recorded in run metadata.
pub fn version() -> String {
    format!("{}+{}", env!("CARGO_PKG_VERSION"), option_env!("IDD_GIT_REV").unwrap_or("unknown"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default = "default_antennas")]
    pub antennas: usize,
    /// Recorded channels to use instead of i.i.d. Rayleigh fading.
    #[serde(default)]
    pub channel_dump: Option<PathBuf>,
}

fn default_antennas() -> usize {
    4
}

impl ScenarioConfig {
    pub fn build(&self) -> Result<Scenario> {
        match &self.channel_dump {
            None => Scenario::rayleigh(self.antennas),
            Some(p) => Scenario::recorded(FrameConfig::rayleigh_default().with_antennas(self.antennas)?, p),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityConfig {
    /// `(B, U)` pairs.
    pub sizes: Vec<(usize, usize)>,
    #[serde(default = "default_max_stages")]
    pub max_stages: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_max_stages() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub scenario: ScenarioConfig,
    pub spec: PipelineSpec,
    /// Starting parameters; classical IDD when absent.
    #[serde(default)]
    pub params: Option<PathBuf>,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub complexity: Option<ComplexityConfig>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| input(format!("experiment config: {e}")))
    }

    /// Reads a config; relative paths inside it resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| input(format!("cannot read experiment config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.output_dir);
        if let Some(p) = cfg.params.as_mut() {
            fix(p);
        }
        if let Some(p) = cfg.scenario.channel_dump.as_mut() {
            fix(p);
        }
        Ok(cfg)
    }

    /// Starting parameters for the configured pipeline.
    pub fn initial_params(&self) -> Result<HyperParamSet> {
        let p = match &self.params {
            Some(path) => HyperParamSet::load(path)?,
            None => classical_init(&self.spec),
        };
        if p.spec() != self.spec {
            return Err(input(format!("parameter file is for {} but the config asks for {}", p.spec().id(), self.spec.id())));
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunMetadata {
    pub name: String,
    pub pipeline_id: String,
    pub version: String,
    pub seed: Option<u64>,
    pub train_seed: Option<u64>,
    pub counting_convention: String,
    pub ebn0_convention: String,
    pub rng: String,
    pub trained: bool,
    pub train_config: Option<TrainConfig>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub params: HyperParamSet,
    pub sweep: Option<SweepResult>,
    pub complexity: Option<ComplexityReport>,
    pub files: Vec<PathBuf>,
}

/// Trains (if configured), sweeps and counts, writing
/// `<name>_params.json`, `<name>_sweep.csv`, `<name>_train.csv`,
/// `<name>_complexity.csv` and `<name>_metadata.json` to the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.spec.validate()?;
    let scenario = cfg.scenario.build()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let out = |suffix: &str| cfg.output_dir.join(format!("{}_{suffix}", cfg.name));
    let mut files = Vec::new();

    let mut params = cfg.initial_params()?;
    if let Some(tc) = &cfg.train {
        let res = train(&params, &scenario, tc)?;
        std::fs::write(out("train.csv"), curve_csv(&res.curve))?;
        files.push(out("train.csv"));
        params = res.params;
    }
    params.save(out("params.json"))?;
    files.push(out("params.json"));

    let sweep_res = match &cfg.sweep {
        Some(sc) => {
            let r = sweep(&params, &scenario, sc)?;
            r.write_csv(out("sweep.csv"))?;
            files.push(out("sweep.csv"));
            Some(r)
        }
        None => None,
    };
    let complexity = match &cfg.complexity {
        Some(cc) => {
            let r = complexity_report(&cc.sizes, cc.max_stages, scenario.frame.data_res(), cc.seed)?;
            std::fs::write(out("complexity.csv"), r.to_csv())?;
            files.push(out("complexity.csv"));
            Some(r)
        }
        None => None,
    };
    let meta = RunMetadata {
        name: cfg.name.clone(),
        pipeline_id: cfg.spec.id(),
        version: version(),
        seed: cfg.sweep.as_ref().map(|s| s.seed),
        train_seed: cfg.train.as_ref().map(|t| t.seed),
        counting_convention: CONVENTION.to_string(),
        ebn0_convention: EBN0_CONVENTION.to_string(),
        rng: ALGORITHM.to_string(),
        trained: cfg.train.is_some(),
        train_config: cfg.train.clone(),
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| input(e.to_string()))?;
    std::fs::write(out("metadata.json"), text + "\n")?;
    files.push(out("metadata.json"));
    Ok(ExperimentOutput { params, sweep: sweep_res, complexity, files })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"{
        "name": "t",
        "scenario": {"antennas": 4},
        "spec": {"detector": "lmmse", "N_i": [4]},
        "sweep": {"snr_db": [40.0], "frames": 2, "seed": 3},
        "complexity": {"sizes": [[4, 4]], "max_stages": 1},
        "output_dir": "out"
    }"#;

    #[test]
    fn missing_spec_names_the_field() {
        let text = CONFIG.replace(r#""spec": {"detector": "lmmse", "N_i": [4]},"#, "");
        match ExperimentConfig::from_json(&text) {
            Err(crate::Error::Input(m)) => assert!(m.contains("spec"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn runs_and_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.json");
        std::fs::write(&path, CONFIG).unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.output_dir, dir.path().join("out"));
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.files.len(), 4);
        let csv = std::fs::read_to_string(dir.path().join("out/t_sweep.csv")).unwrap();
        assert!(csv.starts_with(super::super::CSV_HEADER));
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/t_metadata.json")).unwrap()).unwrap();
        assert_eq!(meta["seed"], 3);
        assert!(meta["rng"].as_str().unwrap().contains("ChaCha8"));
        assert!(meta["counting_convention"].as_str().unwrap().contains("real multiplications"));
        let p = HyperParamSet::load(dir.path().join("out/t_params.json")).unwrap();
        assert_eq!(p.spec(), cfg.spec);
    }

    #[test]
    fn mismatched_params_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let other = classical_init(&PipelineSpec::even(crate::detect::DetectorKind::MmsePic, 2, 12).unwrap());
        other.save(dir.path().join("p.json")).unwrap();
        let mut cfg = ExperimentConfig::from_json(CONFIG).unwrap();
        cfg.params = Some(dir.path().join("p.json"));
        assert!(matches!(cfg.initial_params(), Err(crate::Error::Input(_))));
    }
}
