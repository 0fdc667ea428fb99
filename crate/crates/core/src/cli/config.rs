use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::encodings::EncodingConfig;
use crate::model::{TrainConfig, DEFAULT_DROPOUT, DEFAULT_LEARNING_RATE};
use crate::preprocess::SplitMode;
use crate::synth::{PRECIPITATION, STREAMFLOW, TEMPERATURE};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_catchments: usize,
    pub n_days: usize,
    pub seed: u64,
}

/// Either an archive directory or an in-memory synthetic dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Path(PathBuf),
    Synth(SynthSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transform {
    #[serde(rename = "minmax")]
    MinMax,
    #[serde(rename = "minmax+cuberoot")]
    MinMaxCubeRoot,
}

impl Transform {
    pub fn name(self) -> &'static str {
        match self {
            Transform::MinMax => "minmax",
            Transform::MinMaxCubeRoot => "minmax+cuberoot",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "default_split_mode")]
    pub mode: SplitMode,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    /// Falls back to the run seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            mode: default_split_mode(),
            ratio: default_ratio(),
            seed: None,
        }
    }
}

/// A run description. Unknown fields are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSource,
    /// Observed input series.
    #[serde(default = "default_features")]
    pub features: Vec<String>,
    /// Predicted series; may include series that are never inputs.
    #[serde(default = "default_targets")]
    pub targets: Vec<String>,
    /// Series that may only ever be targets.
    #[serde(default = "default_target_only")]
    pub target_only: Vec<String>,
    #[serde(default = "default_tier")]
    pub encoding_tier: u8,
    #[serde(default = "default_true")]
    pub include_static: bool,
    #[serde(default)]
    pub use_pca: bool,
    #[serde(default = "default_pca_threshold")]
    pub pca_threshold: f64,
    #[serde(default = "default_transform")]
    pub transform: Transform,
    #[serde(default = "default_cube_root_features")]
    pub cube_root_features: Vec<String>,
    /// Series whose missing cells are filled with their global mean.
    #[serde(default = "default_impute_series")]
    pub impute_series: Vec<String>,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default = "default_l_seq")]
    pub l_seq: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_dropout")]
    pub dropout: f64,
    #[serde(default = "default_successful_epochs")]
    pub successful_epochs: usize,
    /// Total epoch cap; defaults to ten times `successful_epochs`.
    #[serde(default)]
    pub max_epochs: Option<usize>,
    #[serde(default = "default_width")]
    pub encoder_size: usize,
    #[serde(default = "default_width")]
    pub hidden_size: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Also write `metrics_physical.csv` on inverse-transformed values.
    #[serde(default)]
    pub physical_units: bool,
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn default_split_mode() -> SplitMode {
    SplitMode::Location
}
fn default_ratio() -> f64 {
    0.8
}
fn default_features() -> Vec<String> {
    names(&[PRECIPITATION, TEMPERATURE])
}
fn default_targets() -> Vec<String> {
    names(&[PRECIPITATION, TEMPERATURE, STREAMFLOW])
}
fn default_target_only() -> Vec<String> {
    names(&[STREAMFLOW])
}
fn default_tier() -> u8 {
    3
}
fn default_true() -> bool {
    true
}
fn default_pca_threshold() -> f64 {
    0.9
}
fn default_transform() -> Transform {
    Transform::MinMax
}
fn default_cube_root_features() -> Vec<String> {
    names(&[PRECIPITATION, STREAMFLOW])
}
fn default_impute_series() -> Vec<String> {
    names(&[STREAMFLOW])
}
fn default_l_seq() -> usize {
    21
}
fn default_lr() -> f64 {
    DEFAULT_LEARNING_RATE
}
fn default_dropout() -> f64 {
    DEFAULT_DROPOUT
}
fn default_successful_epochs() -> usize {
    120
}
fn default_width() -> usize {
    64
}
fn default_seed() -> u64 {
    42
}

impl RunConfig {
    pub fn new(data: DataSource) -> Self {
        RunConfig {
            data,
            features: default_features(),
            targets: default_targets(),
            target_only: default_target_only(),
            encoding_tier: default_tier(),
            include_static: true,
            use_pca: false,
            pca_threshold: default_pca_threshold(),
            transform: default_transform(),
            cube_root_features: default_cube_root_features(),
            impute_series: default_impute_series(),
            split: SplitConfig::default(),
            l_seq: default_l_seq(),
            lr: default_lr(),
            dropout: default_dropout(),
            successful_epochs: default_successful_epochs(),
            max_epochs: None,
            encoder_size: default_width(),
            hidden_size: default_width(),
            seed: default_seed(),
            physical_units: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            // serde names the offending field in backticks
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.contains("field"))
                .unwrap_or("<document>")
                .to_string();
            Error::config(field, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        // relative data paths are relative to the config file
        if let DataSource::Path(p) = &mut cfg.data {
            if p.is_relative() {
                if let Some(parent) = path.parent() {
                    *p = parent.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Split seed with the fallback applied.
    pub fn split_seed(&self) -> u64 {
        self.split.seed.unwrap_or(self.seed)
    }

    /// Copy with every defaulted value spelled out.
    pub fn resolved(&self) -> RunConfig {
        let mut r = self.clone();
        r.split.seed = Some(self.split_seed());
        r.max_epochs = Some(self.train_config().epoch_cap());
        r
    }

    pub fn encoding(&self) -> EncodingConfig {
        EncodingConfig {
            tier: self.encoding_tier,
            include_static: self.include_static,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            target_successful_epochs: self.successful_epochs,
            max_epochs: self.max_epochs,
            learning_rate: self.lr,
            l_seq: self.l_seq,
            encoder_size: self.encoder_size,
            hidden_size: self.hidden_size,
            dropout_rate: self.dropout,
            seed: self.seed,
        }
    }

    /// Every series the run touches: inputs then target-only targets.
    pub fn series_names(&self) -> Vec<String> {
        let mut all = self.features.clone();
        for t in &self.targets {
            if !all.contains(t) {
                all.push(t.clone());
            }
        }
        all
    }

    pub fn validate(&self) -> Result<()> {
        EncodingConfig::new(self.encoding_tier, self.include_static)?;
        if self.targets.is_empty() {
            return Err(Error::config("targets", "at least one target is required"));
        }
        if let Some(f) = self.features.iter().find(|f| self.target_only.contains(f)) {
            return Err(Error::config("features", format!("`{f}` is target-only and cannot be an input")));
        }
        for (field, list) in [("features", &self.features), ("targets", &self.targets)] {
            let mut seen = list.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != list.len() {
                return Err(Error::config(field, "duplicate series name"));
            }
        }
        if !(self.pca_threshold > 0.0 && self.pca_threshold <= 1.0) {
            return Err(Error::config("pca_threshold", "must be in (0, 1]"));
        }
        if !(self.split.ratio > 0.0 && self.split.ratio < 1.0) {
            return Err(Error::config("split.ratio", "must be in (0, 1)"));
        }
        if self.l_seq == 0 {
            return Err(Error::config("l_seq", "must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("lr", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("dropout", "must be in [0, 1)"));
        }
        if self.encoder_size == 0 {
            return Err(Error::config("encoder_size", "must be positive"));
        }
        if self.hidden_size == 0 {
            return Err(Error::config("hidden_size", "must be positive"));
        }
        if self.max_epochs == Some(0) && self.successful_epochs > 0 {
            return Err(Error::config("max_epochs", "must be positive"));
        }
        if let DataSource::Synth(s) = &self.data {
            if s.n_catchments < 2 || s.n_days <= self.l_seq {
                return Err(Error::config("data.synth", "needs at least 2 catchments and more days than l_seq"));
            }
        }
        Ok(())
    }
}
