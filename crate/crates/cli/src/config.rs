use std::path::{Path, PathBuf};

use anyhow::Context;
use assocnet::activation::ActivationParams;
use assocnet::NormMode;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 42;

/// Shared run settings, read from a flat TOML file. Command-line flags win
/// over file values, which win over the defaults.
///
/// ```toml
/// lexicon_dir = "resources/lexicon"
/// seed = 7
/// normalization = "l1"   # l1 | max | zscore
/// retention = 0.5
/// decay = 0.0
/// suppress = 0.0
/// # initial = 1000.0     # default: node count
/// # iterations = 20      # default: twice the diameter
/// weighted = true
/// verbosity = "info"     # error | warn | info | debug | trace
/// threads = 4
/// items = "my_items.csv"
/// probe = "my_probe.json"
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub lexicon_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub normalization: Option<NormMode>,
    pub retention: Option<f64>,
    pub decay: Option<f64>,
    pub suppress: Option<f64>,
    pub initial: Option<f64>,
    pub iterations: Option<usize>,
    pub weighted: Option<bool>,
    pub verbosity: Option<String>,
    pub threads: Option<usize>,
    pub items: Option<PathBuf>,
    pub probe: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn load_opt(path: Option<&Path>) -> anyhow::Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn activation(&self) -> ActivationParams {
        let d = ActivationParams::default();
        ActivationParams {
            retention: self.retention.unwrap_or(d.retention),
            decay: self.decay.unwrap_or(d.decay),
            suppress: self.suppress.unwrap_or(d.suppress),
            initial: self.initial.or(d.initial),
            iterations: self.iterations.or(d.iterations),
            weighted: self.weighted.unwrap_or(d.weighted),
        }
    }

    pub fn normalization(&self) -> NormMode {
        self.normalization.unwrap_or_default()
    }
}
