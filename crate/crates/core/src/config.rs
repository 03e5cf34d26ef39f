//! The JSON run configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::filters::FilterConfig;
use crate::metrics::CommentDensityMode;
use crate::scoring::{CvSplit, DEFAULT_SEED};
use crate::trajectory::{ThresholdComparison, TrajectoryConfig, DEFAULT_SLOPE_EPSILON};

pub const CONFIG_ENV: &str = "NBSPECTRUM_CONFIG";

/// A repository to mine, optionally with its owner's identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CorpusRoot {
    Path(PathBuf),
    WithOwner { path: PathBuf, owner: Option<String> },
}

impl CorpusRoot {
    pub fn path(&self) -> &Path {
        match self {
            CorpusRoot::Path(p) => p,
            CorpusRoot::WithOwner { path, .. } => path,
        }
    }

    pub fn owner(&self) -> Option<&str> {
        match self {
            CorpusRoot::Path(_) => None,
            CorpusRoot::WithOwner { owner, .. } => owner.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct RunConfig {
    pub corpus_roots: Vec<CorpusRoot>,
    pub notebook_glob: String,
    pub branch: String,
    pub filter_config: FilterConfig,
    pub model_name: String,
    /// Overrides `modelName` with a CoefficientSet JSON file.
    pub model_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub threshold_comparison: ThresholdComparison,
    pub slope_epsilon: f64,
    pub cv_split: CvSplit,
    pub comment_density: CommentDensityMode,
    /// Parallelism only; left out of the config hash.
    #[serde(skip_serializing)]
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus_roots: Vec::new(),
            notebook_glob: "**/*.ipynb".to_string(),
            branch: "HEAD".to_string(),
            filter_config: FilterConfig::default(),
            model_name: "hybrid".to_string(),
            model_path: None,
            output_dir: PathBuf::from("nbspectrum-out"),
            seed: DEFAULT_SEED,
            threshold_comparison: ThresholdComparison::LessEqual,
            slope_epsilon: DEFAULT_SLOPE_EPSILON,
            cv_split: CvSplit::TrainOnFold,
            comment_density: CommentDensityMode::PerNotebook,
            workers: 1,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.filter_config.validate()?;
        if cfg.slope_epsilon.is_nan() || cfg.slope_epsilon < 0.0 {
            return Err("slopeEpsilon must be non-negative".into());
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::from_json(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// Loads `explicit`, else the file named by `NBSPECTRUM_CONFIG`, else
    /// defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, String> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn trajectory(&self) -> TrajectoryConfig {
        TrajectoryConfig {
            comparison: self.threshold_comparison,
            slope_epsilon: self.slope_epsilon,
        }
    }

    /// SHA-256 of the serialized configuration, hex encoded.
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config always serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
