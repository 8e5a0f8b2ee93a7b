//! Fully resolved run descriptions. Flags are turned into one of these before
//! anything is computed, and the same value is written beside the outputs so
//! `rerun` can replay it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mixcorr::correlators::{uniform_grid, DetectorRole, MixConfig, NormalizationMode};
use mixcorr::dynamics::SystemParams;
use mixcorr::sweeps::SweepSpec;
use mixcorr::tagcorr::CorrelationSettings;
use mixcorr::trajectories::{DetectorChannelSpec, SimulationOptions};

use crate::error::CliError;

pub const CONFIG_FILE: &str = "config.json";
const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Delay grid in ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        uniform_grid(self.start, self.stop, self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TermPair {
    Crossco,
    Coco,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Job {
    pub params: SystemParams,
    pub mix: MixConfig,
    pub roles: [DetectorRole; 2],
    pub delays: Grid,
    pub normalization: NormalizationMode,
    pub irf_fwhm_ps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermsJob {
    pub params: SystemParams,
    pub mix: MixConfig,
    pub pair: TermPair,
    pub delays: Grid,
    pub normalization: NormalizationMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G3Job {
    pub params: SystemParams,
    pub mix: MixConfig,
    pub roles: [DetectorRole; 3],
    pub delays: Grid,
    pub normalization: NormalizationMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gn0Job {
    pub params: SystemParams,
    pub mix: MixConfig,
    pub orders: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepJob {
    pub spec: SweepSpec,
    pub contour_levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateJob {
    pub params: SystemParams,
    /// Already folded into the Co channels' LO amplitudes; kept for reference.
    pub mix: MixConfig,
    pub channels: Vec<DetectorChannelSpec>,
    pub duration_ps: u64,
    pub seed: u64,
    pub options: SimulationOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelateJob {
    pub input: PathBuf,
    pub channels: Vec<u8>,
    pub settings: CorrelationSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Job {
    G2(G2Job),
    G2Terms(TermsJob),
    G3(G3Job),
    Gn0(Gn0Job),
    Sweep(SweepJob),
    Simulate(SimulateJob),
    Correlate(CorrelateJob),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub version: u32,
    pub out: PathBuf,
    pub format: Format,
    #[serde(default)]
    pub workers: Option<usize>,
    pub job: Job,
}

impl RunConfig {
    pub fn new(out: PathBuf, format: Format, workers: Option<usize>, job: Job) -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            out,
            format,
            workers,
            job,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| {
            CliError::Usage(format!("{}: not a run configuration: {e}", path.display()))
        })?;
        if config.version != CONFIG_VERSION {
            return Err(CliError::Usage(format!(
                "{}: configuration version {} is not supported",
                path.display(),
                config.version
            )));
        }
        Ok(config)
    }
}
