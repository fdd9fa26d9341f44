use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::autoencoder::{AutoencoderSpec, TrainConfig};
use crate::identify::{DEFAULT_PERCENTILE, DEFAULT_RUNWAY_SCORE_THRESHOLD};
use crate::runwayscore::RunwayScoreConfig;
use crate::synthgen::ScenarioSpec;
use crate::validate::DEFAULT_PSEUDO_TYPES;

/// Everything a pipeline run needs. Every field has a default, so an empty
/// file (or no file) is a valid configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// When set, replaces the scenario, initialization and training seeds.
    pub seed: Option<u64>,
    /// Abort on malformed input lines instead of skipping them.
    pub strict: bool,
    pub paths: Paths,
    pub synth: ScenarioSpec,
    pub autoencoder: AutoencoderSpec,
    pub train: TrainConfig,
    pub split: SplitConfig,
    pub thresholds: ThresholdConfig,
    pub runway_score: RunwayScoreConfig,
    pub validate: ValidateConfig,
}

/// Input locations. Unset inputs default to the file of the same role
/// inside `out_dir`, which is where the upstream stage writes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub out_dir: PathBuf,
    pub tracks: Option<PathBuf>,
    pub runways: Option<PathBuf>,
    pub registration: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub helicopter_types: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub thresholds: Option<PathBuf>,
    pub results: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            tracks: None,
            runways: None,
            registration: None,
            labels: None,
            helicopter_types: None,
            model: None,
            thresholds: None,
            results: None,
        }
    }
}

pub mod files {
    pub const TRACKS: &str = "tracks.jsonl";
    pub const LABELS: &str = "labels.csv";
    pub const REGISTRATION: &str = "registration.csv";
    pub const RUNWAYS: &str = "runways.csv";
    pub const HELICOPTER_TYPES: &str = "helicopter_types.txt";
    pub const MODEL: &str = "model.rtae";
    pub const LOSS_HISTORY: &str = "loss_history.csv";
    pub const TRAIN_SUMMARY: &str = "train_summary.json";
    pub const TRAIN_IDS: &str = "train_ids.txt";
    pub const THRESHOLDS: &str = "thresholds.json";
    pub const TRAINING_MAE: &str = "training_mae.csv";
    pub const HISTOGRAM: &str = "mae_histogram.csv";
    pub const RESULTS: &str = "results.csv";
    pub const VALIDATION: &str = "validation.csv";
    pub const METRICS: &str = "metrics.csv";
    pub const VENN_CSV: &str = "venn.csv";
    pub const VENN_TXT: &str = "venn.txt";
    pub const PSEUDO_TYPES: &str = "pseudo_types.csv";
    pub const REPORT: &str = "report.txt";
}

impl Paths {
    fn pick(&self, explicit: &Option<PathBuf>, name: &str) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.out_dir.join(name))
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn tracks(&self) -> PathBuf {
        self.pick(&self.tracks, files::TRACKS)
    }
    pub fn runways(&self) -> PathBuf {
        self.pick(&self.runways, files::RUNWAYS)
    }
    pub fn registration(&self) -> PathBuf {
        self.pick(&self.registration, files::REGISTRATION)
    }
    pub fn labels(&self) -> PathBuf {
        self.pick(&self.labels, files::LABELS)
    }
    pub fn helicopter_types(&self) -> PathBuf {
        self.pick(&self.helicopter_types, files::HELICOPTER_TYPES)
    }
    pub fn model(&self) -> PathBuf {
        self.pick(&self.model, files::MODEL)
    }
    pub fn thresholds(&self) -> PathBuf {
        self.pick(&self.thresholds, files::THRESHOLDS)
    }
    pub fn results(&self) -> PathBuf {
        self.pick(&self.results, files::RESULTS)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// Helicopter tracks (first in file order) used for training; every
    /// other track is held out for classification.
    pub training_helicopters: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            training_helicopters: 80,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub percentile: f64,
    pub runway_score_threshold: f64,
    pub histogram_bins: usize,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            percentile: DEFAULT_PERCENTILE,
            runway_score_threshold: DEFAULT_RUNWAY_SCORE_THRESHOLD,
            histogram_bins: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub pseudo_types: Vec<String>,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            pseudo_types: DEFAULT_PSEUDO_TYPES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Pushes a single seed into every seeded stage.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.synth.seed = seed;
        self.autoencoder.seed = seed;
        self.train.seed = seed;
    }
}
