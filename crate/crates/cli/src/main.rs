use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use idd_core::sim::{complexity_report, run_experiment, ExperimentConfig, Scenario};

#[derive(Parser)]
#[command(name = "idd", version, about = "MU-MIMO iterative receiver simulations")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train the hyperparameters of the configured pipeline.
    Train(Common),
    /// BLER/BER sweep of the configured pipeline.
    Sweep(Common),
    /// Detector multiplication counts.
    Complexity {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for complexity.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Everything the config asks for: training, sweep, complexity.
    Run(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Frame cap per SNR point.
    #[arg(long)]
    frames: Option<usize>,
    /// Comma-separated Eb/N0 points in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_early_stop: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            if let Some(t) = cfg.train.as_mut() {
                t.seed = seed;
            }
            if let Some(s) = cfg.sweep.as_mut() {
                s.seed = seed;
            }
        }
        if let Some(s) = cfg.sweep.as_mut() {
            if let Some(f) = self.frames {
                s.frames = f;
            }
            if let Some(snr) = &self.snr {
                s.snr_db = snr.clone();
            }
            if self.no_early_stop {
                s.early_stop = None;
            }
        }
        Ok(cfg)
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("setting up the thread pool")?;
    }
    match cli.cmd {
        Cmd::Train(c) => {
            let mut cfg = c.load()?;
            if cfg.train.is_none() {
                bail!("{} has no \"train\" section", c.config.display());
            }
            cfg.sweep = None;
            cfg.complexity = None;
            report(run_experiment(&cfg)?.files);
        }
        Cmd::Sweep(c) => {
            let mut cfg = c.load()?;
            if cfg.sweep.is_none() {
                bail!("{} has no \"sweep\" section", c.config.display());
            }
            cfg.train = None;
            cfg.complexity = None;
            let out = run_experiment(&cfg)?;
            if let Some(s) = &out.sweep {
                print!("{}", s.to_csv());
            }
            report(out.files);
        }
        Cmd::Complexity { config, out } => {
            let (sizes, stages, seed, res) = match config {
                Some(p) => {
                    let cfg = ExperimentConfig::load(&p)?;
                    let cc = cfg.complexity.with_context(|| format!("{} has no \"complexity\" section", p.display()))?;
                    (cc.sizes, cc.max_stages, cc.seed, cfg.scenario.build()?.frame.data_res())
                }
                None => (vec![(8, 4), (16, 4), (32, 16)], 3, 0, Scenario::rayleigh(4)?.frame.data_res()),
            };
            let r = complexity_report(&sizes, stages, res, seed)?;
            print!("{}", r.to_table());
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("complexity.csv"), r.to_csv())?;
            }
        }
        Cmd::Run(c) => {
            let cfg = c.load()?;
            report(run_experiment(&cfg)?.files);
        }
    }
    Ok(())
}

fn report(files: Vec<PathBuf>) {
    for f in files {
        log::info!("wrote {}", f.display());
    }
}
