//! Measure where Jupyter notebooks sit between exploratory and explanatory
//! work, and how that position moves across a repository's history.
//!
//! The pipeline runs `notebook` → `metrics` → `scoring` per document and
//! `history` → `filters` → `trajectory` per versioned notebook; `pipeline`
//! wires these into the `nbspectrum` subcommands.

pub mod config;
pub mod filters;
pub mod history;
pub mod metrics;
pub mod notebook;
pub mod pipeline;
pub mod scoring;
pub mod trajectory;

pub use config::RunConfig;
pub use metrics::{extract_metrics, normalize, Feature, FeatureVector, MetricVector};
pub use notebook::{parse_notebook, Notebook};
pub use scoring::{score, CoefficientSet};
