//! Experiment configuration: one JSON file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use entperc::pdl::PdlSpec;
use entperc::scp::ScpSpec;
use entperc::{Disorder, LatticeSpec, ScpFamily};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    Rcep,
    Rqep,
}

/// Uniform grid of `points` values on `[start, stop]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DensityGrid {
    pub points: usize,
    pub pdl_max_db: f64,
    pub scp_min: f64,
    pub scp_max: f64,
}

impl Default for DensityGrid {
    fn default() -> Self {
        Self {
            points: 512,
            pdl_max_db: 10.0,
            scp_min: 0.001,
            scp_max: 0.999,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    /// Distributions for `dist-stats` and `qswap-penalty`.
    pub distributions: Vec<ScpSpec>,
    /// PDL models for `pdl`.
    pub pdl_models: Vec<PdlSpec>,
    pub lattice: Option<LatticeSpec>,
    pub mode: Option<ModeName>,
    /// Explicit SCP distribution for `percolate`; otherwise `family` at `mean`.
    pub distribution: Option<ScpSpec>,
    pub family: Option<ScpFamily>,
    pub mean: Option<f64>,
    pub sweep: Option<Range>,
    pub threshold: bool,
    pub compare_shapes: bool,
    pub disorder: Disorder,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    /// Output directory; not part of the config hash.
    pub out: Option<PathBuf>,
    pub grid: DensityGrid,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// SHA-256 of the canonical JSON form, without the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}
