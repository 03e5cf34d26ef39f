//! Score series per notebook, linear trend fits, shift-group labels and
//! cohort aggregates.

mod report;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::NotebookHistory;
use crate::metrics::{featurize, CommentDensityMode};
use crate::scoring::{score, CoefficientSet, ScoringError};

pub use report::{
    cohort_csv, write_cohort_csv, write_series_csv, COHORT_COLUMNS,
};

pub const EXPLAIN_THRESHOLD: f64 = 0.5;
pub const DEFAULT_SLOPE_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("no parseable versions")]
    NoParseableVersions,
    #[error("need at least 2 points to fit a trend, got {0}")]
    TooFewPoints(usize),
    #[error("no fits to aggregate")]
    EmptyInput,
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeriesPoint {
    pub version_index: usize,
    pub commit_id: String,
    pub timestamp: i64,
    /// Clamped to [0, 1].
    pub score: f64,
    pub raw_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeriesGap {
    pub commit_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoreSeries {
    pub notebook_id: String,
    pub points: Vec<SeriesPoint>,
    pub gaps: Vec<SeriesGap>,
}

impl ScoreSeries {
    /// Series over consecutive indices with no commit metadata.
    pub fn from_scores(notebook_id: impl Into<String>, scores: &[f64]) -> Self {
        ScoreSeries {
            notebook_id: notebook_id.into(),
            points: scores
                .iter()
                .enumerate()
                .map(|(i, &s)| SeriesPoint {
                    version_index: i,
                    commit_id: String::new(),
                    timestamp: i as i64,
                    score: s,
                    raw_score: s,
                })
                .collect(),
            gaps: Vec::new(),
        }
    }

    pub fn scores(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.score).collect()
    }
}

/// Scores every parseable version; unparseable ones become gaps and do not
/// consume a version index.
pub fn build_series(
    h: &NotebookHistory,
    model: &CoefficientSet,
    mode: CommentDensityMode,
) -> Result<ScoreSeries, TrajectoryError> {
    let notebook_id = format!("{}:{}", h.repo_path.display(), h.notebook_path);
    let mut points = Vec::new();
    let mut gaps = Vec::new();
    for v in &h.versions {
        match &v.notebook {
            Some(nb) => {
                let (_, features) = featurize(nb, mode);
                let s = score(&features, model)?;
                points.push(SeriesPoint {
                    version_index: points.len(),
                    commit_id: v.commit_id.clone(),
                    timestamp: v.timestamp,
                    score: s.clamped,
                    raw_score: s.raw,
                });
            }
            None => {
                let reason = v.error.clone().unwrap_or_else(|| "unparseable".into());
                log::warn!("{notebook_id}: skipping version {}: {reason}", v.commit_id);
                gaps.push(SeriesGap {
                    commit_id: v.commit_id.clone(),
                    reason,
                });
            }
        }
    }
    if points.is_empty() {
        return Err(TrajectoryError::NoParseableVersions);
    }
    Ok(ScoreSeries {
        notebook_id,
        points,
        gaps,
    })
}

/// Least-squares line of score on version index: `(slope, intercept)`.
pub fn fit_linear(series: &ScoreSeries) -> Result<(f64, f64), TrajectoryError> {
    let n = series.points.len();
    if n < 2 {
        return Err(TrajectoryError::TooFewPoints(n));
    }
    let xs: Vec<f64> = series.points.iter().map(|p| p.version_index as f64).collect();
    // scores are taken relative to the first one so a flat series gives an
    // exactly zero slope
    let base = series.points[0].score;
    let ys: Vec<f64> = series.points.iter().map(|p| p.score - base).collect();
    let x_mean = xs.iter().sum::<f64>() / n as f64;
    let y_mean = ys.iter().sum::<f64>() / n as f64;
    let (sxy, sxx) = xs
        .iter()
        .zip(&ys)
        .fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
            let dx = x - x_mean;
            (sxy + dx * (y - y_mean), sxx + dx * dx)
        });
    let slope = sxy / sxx;
    let intercept = base + (y_mean - slope * x_mean);
    Ok((slope, intercept))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    ExploreExplore,
    ExplainExplain,
    ExploreExplain,
    ExplainExplore,
}

impl Group {
    /// Row order of the cohort table.
    pub const TABLE_ORDER: [Group; 4] = [
        Group::ExploreExplore,
        Group::ExplainExplain,
        Group::ExploreExplain,
        Group::ExplainExplore,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Group::ExploreExplore => "Explore-Explore",
            Group::ExplainExplain => "Explain-Explain",
            Group::ExploreExplain => "Explore-Explain",
            Group::ExplainExplore => "Explain-Explore",
        }
    }

    fn from_labels(first: SpectrumSide, last: SpectrumSide) -> Self {
        use SpectrumSide::*;
        match (first, last) {
            (Exploratory, Exploratory) => Group::ExploreExplore,
            (Exploratory, Explanatory) => Group::ExploreExplain,
            (Explanatory, Explanatory) => Group::ExplainExplain,
            (Explanatory, Exploratory) => Group::ExplainExplore,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlopeSign {
    Positive,
    Negative,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumSide {
    Exploratory,
    Explanatory,
}

/// How a score equal to the threshold is labeled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ThresholdComparison {
    /// `score <= 0.5` is exploratory.
    #[default]
    LessEqual,
    /// `score < 0.5` is exploratory; 0.5 itself is explanatory.
    LessThan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct TrajectoryConfig {
    pub comparison: ThresholdComparison,
    pub slope_epsilon: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            comparison: ThresholdComparison::LessEqual,
            slope_epsilon: DEFAULT_SLOPE_EPSILON,
        }
    }
}

pub fn spectrum_side(score: f64, comparison: ThresholdComparison) -> SpectrumSide {
    let exploratory = match comparison {
        ThresholdComparison::LessEqual => score <= EXPLAIN_THRESHOLD,
        ThresholdComparison::LessThan => score < EXPLAIN_THRESHOLD,
    };
    if exploratory {
        SpectrumSide::Exploratory
    } else {
        SpectrumSide::Explanatory
    }
}

pub fn slope_sign(slope: f64, epsilon: f64) -> SlopeSign {
    if slope.abs() <= epsilon {
        SlopeSign::Neutral
    } else if slope > 0.0 {
        SlopeSign::Positive
    } else {
        SlopeSign::Negative
    }
}

pub fn classify_group(
    first_score: f64,
    last_score: f64,
    slope: f64,
    cfg: &TrajectoryConfig,
) -> (Group, SlopeSign) {
    let group = Group::from_labels(
        spectrum_side(first_score, cfg.comparison),
        spectrum_side(last_score, cfg.comparison),
    );
    (group, slope_sign(slope, cfg.slope_epsilon))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrajectoryFit {
    pub slope: f64,
    pub intercept: f64,
    pub first_score: f64,
    pub last_score: f64,
    pub version_count: usize,
    pub group: Group,
    pub slope_sign: SlopeSign,
}

/// Fits the trend and labels the series. Group membership uses the observed
/// first and last scores, not the fitted endpoints.
pub fn fit_trajectory(
    series: &ScoreSeries,
    cfg: &TrajectoryConfig,
) -> Result<TrajectoryFit, TrajectoryError> {
    let (slope, intercept) = fit_linear(series)?;
    let first_score = series.points[0].score;
    let last_score = series.points[series.points.len() - 1].score;
    let (group, slope_sign) = classify_group(first_score, last_score, slope, cfg);
    Ok(TrajectoryFit {
        slope,
        intercept,
        first_score,
        last_score,
        version_count: series.points.len(),
        group,
        slope_sign,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupStats {
    pub group: Group,
    pub notebook_count: usize,
    pub percent_of_sample: f64,
    pub avg_version_count: Option<f64>,
    pub avg_first_score: Option<f64>,
    pub avg_last_score: Option<f64>,
    pub avg_slope: Option<f64>,
    pub percent_positive_slope: Option<f64>,
    pub percent_negative_slope: Option<f64>,
    pub percent_neutral_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CohortStats {
    pub total: usize,
    /// One row per group, in [`Group::TABLE_ORDER`].
    pub rows: Vec<GroupStats>,
}

impl CohortStats {
    pub fn row(&self, group: Group) -> &GroupStats {
        self.rows
            .iter()
            .find(|r| r.group == group)
            .expect("every group has a row")
    }

    /// Rows for all four groups with zero counts.
    pub fn empty() -> Self {
        CohortStats {
            total: 0,
            rows: Group::TABLE_ORDER
                .iter()
                .map(|&group| GroupStats {
                    group,
                    notebook_count: 0,
                    percent_of_sample: 0.0,
                    avg_version_count: None,
                    avg_first_score: None,
                    avg_last_score: None,
                    avg_slope: None,
                    percent_positive_slope: None,
                    percent_negative_slope: None,
                    percent_neutral_slope: None,
                })
                .collect(),
        }
    }
}

pub fn cohort_stats(fits: &[TrajectoryFit]) -> Result<CohortStats, TrajectoryError> {
    if fits.is_empty() {
        return Err(TrajectoryError::EmptyInput);
    }
    let total = fits.len();
    let rows = Group::TABLE_ORDER
        .iter()
        .map(|&group| {
            let members: Vec<&TrajectoryFit> = fits.iter().filter(|f| f.group == group).collect();
            let n = members.len();
            let mean = |get: &dyn Fn(&TrajectoryFit) -> f64| {
                (n > 0).then(|| members.iter().map(|f| get(f)).sum::<f64>() / n as f64)
            };
            let pct = |sign: SlopeSign| {
                (n > 0).then(|| {
                    100.0 * members.iter().filter(|f| f.slope_sign == sign).count() as f64 / n as f64
                })
            };
            GroupStats {
                group,
                notebook_count: n,
                percent_of_sample: 100.0 * n as f64 / total as f64,
                avg_version_count: mean(&|f| f.version_count as f64),
                avg_first_score: mean(&|f| f.first_score),
                avg_last_score: mean(&|f| f.last_score),
                avg_slope: mean(&|f| f.slope),
                percent_positive_slope: pct(SlopeSign::Positive),
                percent_negative_slope: pct(SlopeSign::Negative),
                percent_neutral_slope: pct(SlopeSign::Neutral),
            }
        })
        .collect();
    Ok(CohortStats { total, rows })
}
