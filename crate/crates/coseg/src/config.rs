//! TOML run configuration.
//!
//! Every key is optional; missing keys take the defaults below. Training
//! hyperparameters default to the published settings; the memory queue size
//! and extrema range default to values suited to short synthetic streams.

use std::fs;
use std::path::{Path, PathBuf};

use coseg_core::data::SynthConfig;
use coseg_core::detect::DetectorConfig;
use coseg_core::embedding::ContrastiveConfig;
use coseg_core::eval::default_thresholds;
use coseg_core::reconstruction::ReconstructionConfig;
use coseg_core::train::{ModelConfig, TrainConfig};
use coseg_core::Sgd;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DESK_QUEUE_CAPACITY: usize = 4096;
pub const DESK_EXTREMA_RANGE: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Directory holding `features/*.csgf` and `annotations.json`.
    pub corpus: PathBuf,
    /// Directory for checkpoints, loss logs, detections and reports.
    pub run: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            corpus: "corpus".into(),
            run: "run".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchConfig {
    pub videos_per_batch: usize,
    pub snippets_per_video: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        BatchConfig {
            videos_per_batch: t.videos_per_batch,
            snippets_per_video: t.snippets_per_video,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub thresholds: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            thresholds: default_thresholds(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub steps: usize,
    pub paths: Paths,
    pub synth: SynthConfig,
    pub model: ModelConfig,
    pub batch: BatchConfig,
    pub contrastive: ContrastiveConfig,
    pub reconstruction: ReconstructionConfig,
    pub optimizer: Sgd,
    pub detector: DetectorConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            steps: 2000,
            paths: Paths::default(),
            synth: SynthConfig::default(),
            model: ModelConfig {
                queue_capacity: DESK_QUEUE_CAPACITY,
                ..ModelConfig::default()
            },
            batch: BatchConfig::default(),
            contrastive: ContrastiveConfig::default(),
            reconstruction: ReconstructionConfig::default(),
            optimizer: Sgd::default(),
            detector: DetectorConfig {
                extrema_range: DESK_EXTREMA_RANGE,
                ..DetectorConfig::default()
            },
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim().replace('\n', " ")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        RunConfig::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            videos_per_batch: self.batch.videos_per_batch,
            snippets_per_video: self.batch.snippets_per_video,
            contrastive: self.contrastive,
            reconstruction: self.reconstruction,
            optimizer: self.optimizer,
        }
    }

    /// Checks each section and the keys that must agree across sections.
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.synth.validate()?;
        self.detector.validate()?;
        self.train_config().validate(&self.model)?;
        let t = self.model.window;
        if self.detector.window != t {
            return Err(CliError::Config(format!(
                "detector.window = {} but model.window = {t}",
                self.detector.window
            )));
        }
        if self.synth.feature_dim != self.model.input_dim {
            return Err(CliError::Config(format!(
                "synth.feature_dim = {} but model.input_dim = {}",
                self.synth.feature_dim, self.model.input_dim
            )));
        }
        self.synth.validate_for_window(t)?;
        if self.eval.thresholds.is_empty() {
            return Err(CliError::Config("eval.thresholds must not be empty".into()));
        }
        if let Some(bad) = self.eval.thresholds.iter().find(|&&th| !(th > 0.0 && th <= 1.0)) {
            return Err(CliError::Config(format!("eval.thresholds: {bad} is outside (0, 1]")));
        }
        Ok(())
    }
}
