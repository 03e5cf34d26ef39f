//! Subcommand implementations: scoring one file, filtering one history,
//! training from labeled CSV, and mining a whole corpus.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use globset::Glob;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::RunConfig;
use crate::filters::{apply_filters, FilterConfig, FilterReport};
use crate::history::{extract_history, list_files, root_author_email, HistoryOptions, NotebookHistory};
use crate::metrics::{featurize, CommentDensityMode, Feature, FeatureVector, MetricVector};
use crate::notebook::parse_notebook;
use crate::scoring::{
    bundled_model, cross_validate, is_rubric_label, score, CoefficientSet, CvReport, CvSplit,
    FeatureSet, LabeledExample,
};
use crate::trajectory::{
    build_series, cohort_stats, fit_trajectory, write_cohort_csv, write_series_csv, CohortStats,
    SeriesGap, SeriesPoint, TrajectoryFit,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 1,
            PipelineError::Input(_) => 2,
            PipelineError::Internal(_) => 3,
        }
    }
}

fn input<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::Input(format!("{context}: {e}"))
}

fn internal<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::Internal(format!("{context}: {e}"))
}

/// Resolves a bundled model name or a path to a CoefficientSet file.
pub fn resolve_model(name_or_path: &str) -> Result<CoefficientSet, PipelineError> {
    if let Some(m) = bundled_model(name_or_path) {
        return Ok(m);
    }
    let path = Path::new(name_or_path);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(input(path.display()))?;
        return CoefficientSet::from_json(&text).map_err(input(path.display()));
    }
    Err(PipelineError::Input(format!(
        "unknown model `{name_or_path}` (bundled: hybrid, output, organization; or a JSON file path)"
    )))
}

fn require_trained(model: &CoefficientSet) -> Result<(), PipelineError> {
    if model.is_trained() {
        Ok(())
    } else {
        Err(PipelineError::Input(format!(
            "model `{}` has no weights; train it first with `nbspectrum train`",
            model.name
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoreRecord {
    pub path: String,
    pub model: String,
    pub metrics: MetricVector,
    pub features: FeatureVector,
    pub raw_score: f64,
    pub score: f64,
}

pub fn score_file(
    file: &Path,
    model: &CoefficientSet,
    mode: CommentDensityMode,
) -> Result<ScoreRecord, PipelineError> {
    require_trained(model)?;
    let bytes = fs::read(file).map_err(input(file.display()))?;
    let nb = parse_notebook(&bytes, &file.display().to_string()).map_err(input(file.display()))?;
    let (metrics, features) = featurize(&nb, mode);
    let s = score(&features, model).map_err(input(file.display()))?;
    Ok(ScoreRecord {
        path: file.display().to_string(),
        model: model.name.clone(),
        metrics,
        features,
        raw_score: s.raw,
        score: s.clamped,
    })
}

/// Owner for a repository: explicit override, configured identity, or the
/// author of the branch's first commit.
fn owner_for(repo: &Path, explicit: Option<&str>, cfg: &FilterConfig, branch: &str) -> Option<String> {
    explicit
        .map(str::to_string)
        .or_else(|| cfg.owner_identity.clone())
        .or_else(|| root_author_email(repo, branch).ok())
}

pub fn filter_notebook(
    repo: &Path,
    notebook_path: &str,
    cfg: &RunConfig,
    owner: Option<&str>,
) -> Result<(NotebookHistory, FilterReport), PipelineError> {
    let opts = HistoryOptions {
        branch: cfg.branch.clone(),
    };
    let mut history =
        extract_history(repo, notebook_path, &opts).map_err(|e| PipelineError::Input(e.to_string()))?;
    history.owner_identity = owner_for(repo, owner, &cfg.filter_config, &cfg.branch);
    let report = apply_filters(&history, &cfg.filter_config);
    Ok((history, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrainOutcome {
    pub feature_set: FeatureSet,
    pub examples: usize,
    pub off_rubric_labels: usize,
    pub report: CvReport,
}

/// Reads `feature columns + label` rows for the given feature set.
pub fn read_labeled_csv(path: &Path, set: FeatureSet) -> Result<Vec<LabeledExample>, PipelineError> {
    let mut reader = csv::Reader::from_path(path).map_err(input(path.display()))?;
    let headers = reader.headers().map_err(input(path.display()))?.clone();
    let mut seen = HashSet::new();
    for h in headers.iter() {
        if !seen.insert(h.trim()) {
            return Err(PipelineError::Input(format!(
                "{}: duplicate column `{h}`",
                path.display()
            )));
        }
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| PipelineError::Input(format!("{}: missing column `{name}`", path.display())))
    };
    let features = set.features();
    let feature_cols: Vec<(Feature, usize)> = features
        .iter()
        .map(|f| column(f.name()).map(|c| (*f, c)))
        .collect::<Result<_, _>>()?;
    let label_col = column("label")?;

    let mut examples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(input(path.display()))?;
        let value = |col: usize, name: &str| -> Result<f64, PipelineError> {
            record
                .get(col)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| {
                    PipelineError::Input(format!(
                        "{}: row {}: column `{name}`: {e}",
                        path.display(),
                        row + 2
                    ))
                })
        };
        let mut fv = FeatureVector::default();
        for (f, c) in &feature_cols {
            fv.set(*f, value(*c, f.name())?);
        }
        examples.push(LabeledExample {
            features: fv,
            label: value(label_col, "label")?,
        });
    }
    Ok(examples)
}

/// Cross-validates on a labeled CSV and writes `<set>.model.json` and
/// `<set>.cv.json` into `out_dir`.
pub fn train(
    csv_path: &Path,
    set: FeatureSet,
    seed: u64,
    split: CvSplit,
    out_dir: &Path,
) -> Result<TrainOutcome, PipelineError> {
    let examples = read_labeled_csv(csv_path, set)?;
    let off_rubric_labels = examples.iter().filter(|e| !is_rubric_label(e.label)).count();
    if off_rubric_labels > 0 {
        log::warn!("{off_rubric_labels} label(s) are not on the 0.1..1.0 rubric grid");
    }
    let mut report = cross_validate(&examples, &set.features(), seed, split)
        .map_err(|e| PipelineError::Input(e.to_string()))?;
    report.fitted_model.name = set.name().to_string();

    let outcome = TrainOutcome {
        feature_set: set,
        examples: examples.len(),
        off_rubric_labels,
        report,
    };
    fs::create_dir_all(out_dir).map_err(internal(out_dir.display()))?;
    let model_file = out_dir.join(format!("{}.model.json", set.name()));
    fs::write(&model_file, outcome.report.fitted_model.to_json_pretty() + "\n")
        .map_err(internal(model_file.display()))?;
    let report_file = out_dir.join(format!("{}.cv.json", set.name()));
    let text = serde_json::to_string_pretty(&outcome).map_err(internal("report"))?;
    fs::write(&report_file, text + "\n").map_err(internal(report_file.display()))?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResultRecord {
    pub notebook_id: String,
    pub repo_path: String,
    pub notebook_path: String,
    pub owner_identity: Option<String>,
    pub filter_report: Option<FilterReport>,
    pub scores: Vec<SeriesPoint>,
    pub gaps: Vec<SeriesGap>,
    pub trajectory_fit: Option<TrajectoryFit>,
    pub series_file: Option<String>,
    pub error: Option<String>,
    pub config_hash: String,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeSummary {
    pub notebooks: usize,
    pub accepted: usize,
    pub fitted: usize,
    pub cohort: CohortStats,
    pub output_dir: PathBuf,
}

struct WorkItem {
    repo: PathBuf,
    notebook_path: String,
    owner: Option<String>,
}

/// File-system-safe name for a notebook's series file.
pub fn series_file_name(notebook_id: &str) -> String {
    let readable: String = notebook_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect();
    let tail: String = readable.chars().rev().take(80).collect::<Vec<_>>().into_iter().rev().collect();
    let digest = hex::encode(Sha256::digest(notebook_id.as_bytes()));
    format!("{}-{}.csv", tail.trim_start_matches('_'), &digest[..10])
}

fn discover(cfg: &RunConfig) -> Result<Vec<WorkItem>, PipelineError> {
    let matcher = Glob::new(&cfg.notebook_glob)
        .map_err(|e| PipelineError::Usage(format!("bad notebookGlob: {e}")))?
        .compile_matcher();
    let mut items = Vec::new();
    for root in &cfg.corpus_roots {
        let repo = root.path();
        if !repo.exists() {
            return Err(PipelineError::Input(format!(
                "corpus root does not exist: {}",
                repo.display()
            )));
        }
        let files = match list_files(repo, &cfg.branch) {
            Ok(f) => f,
            Err(e) => {
                log::warn!("skipping {}: {e}", repo.display());
                continue;
            }
        };
        let owner = owner_for(repo, root.owner(), &cfg.filter_config, &cfg.branch);
        for f in files.into_iter().filter(|f| matcher.is_match(f)) {
            items.push(WorkItem {
                repo: repo.to_path_buf(),
                notebook_path: f,
                owner: owner.clone(),
            });
        }
    }
    Ok(items)
}

fn process(item: &WorkItem, cfg: &RunConfig, model: &CoefficientSet, hash: &str) -> ResultRecord {
    let notebook_id = format!("{}:{}", item.repo.display(), item.notebook_path);
    let mut record = ResultRecord {
        notebook_id: notebook_id.clone(),
        repo_path: item.repo.display().to_string(),
        notebook_path: item.notebook_path.clone(),
        owner_identity: item.owner.clone(),
        filter_report: None,
        scores: Vec::new(),
        gaps: Vec::new(),
        trajectory_fit: None,
        series_file: None,
        error: None,
        config_hash: hash.to_string(),
        tool_version: TOOL_VERSION.to_string(),
    };
    let opts = HistoryOptions {
        branch: cfg.branch.clone(),
    };
    let mut history = match extract_history(&item.repo, &item.notebook_path, &opts) {
        Ok(h) => h,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    history.owner_identity = item.owner.clone();
    let report = apply_filters(&history, &cfg.filter_config);
    let accepted = report.accepted;
    record.filter_report = Some(report);
    if !accepted {
        return record;
    }
    match build_series(&history, model, cfg.comment_density) {
        Ok(series) => {
            record.gaps = series.gaps.clone();
            match fit_trajectory(&series, &cfg.trajectory()) {
                Ok(fit) => record.trajectory_fit = Some(fit),
                Err(e) => record.error = Some(e.to_string()),
            }
            record.scores = series.points;
            record.series_file = Some(format!("series/{}", series_file_name(&notebook_id)));
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

pub fn analyze(cfg: &RunConfig) -> Result<AnalyzeSummary, PipelineError> {
    let model = match &cfg.model_path {
        Some(p) => resolve_model(&p.display().to_string())?,
        None => resolve_model(&cfg.model_name)?,
    };
    require_trained(&model)?;

    let out = &cfg.output_dir;
    let series_dir = out.join("series");
    fs::create_dir_all(&series_dir).map_err(input(format!("output directory {}", out.display())))?;

    let items = discover(cfg)?;
    if items.is_empty() {
        log::warn!("no notebooks found in the configured corpus");
    }
    let hash = cfg.config_hash();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(internal("worker pool"))?;
    let mut records: Vec<ResultRecord> =
        pool.install(|| items.par_iter().map(|it| process(it, cfg, &model, &hash)).collect());
    records.sort_by(|a, b| a.notebook_id.cmp(&b.notebook_id));

    let results_path = out.join("results.jsonl");
    let file = fs::File::create(&results_path).map_err(input(results_path.display()))?;
    let mut writer = BufWriter::new(file);
    for r in &records {
        let line = serde_json::to_string(r).map_err(internal("serialize record"))?;
        writeln!(writer, "{line}").map_err(input(results_path.display()))?;
        if let Some(name) = &r.series_file {
            let path = out.join(name);
            let f = fs::File::create(&path).map_err(input(path.display()))?;
            let series = crate::trajectory::ScoreSeries {
                notebook_id: r.notebook_id.clone(),
                points: r.scores.clone(),
                gaps: r.gaps.clone(),
            };
            write_series_csv(&series, BufWriter::new(f)).map_err(input(path.display()))?;
        }
    }
    writer.flush().map_err(input(results_path.display()))?;

    let fits: Vec<TrajectoryFit> = records.iter().filter_map(|r| r.trajectory_fit.clone()).collect();
    let cohort = cohort_stats(&fits).unwrap_or_else(|_| CohortStats::empty());
    let cohort_path = out.join("cohort.csv");
    let f = fs::File::create(&cohort_path).map_err(input(cohort_path.display()))?;
    write_cohort_csv(&cohort, BufWriter::new(f)).map_err(input(cohort_path.display()))?;

    Ok(AnalyzeSummary {
        notebooks: records.len(),
        accepted: records
            .iter()
            .filter(|r| r.filter_report.as_ref().is_some_and(|f| f.accepted))
            .count(),
        fitted: fits.len(),
        cohort,
        output_dir: out.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_names_are_safe_and_distinct() {
        let a = series_file_name("/tmp/repos/a:notebooks/x.ipynb");
        let b = series_file_name("/tmp/repos/a:notebooks_x.ipynb");
        assert_ne!(a, b);
        assert!(a.ends_with(".csv"));
        assert!(!a.contains('/') && !a.contains(':'));
        assert!(a.starts_with("tmp_repos_a_notebooks_x.ipynb-"));
    }

    #[test]
    fn model_resolution() {
        assert_eq!(resolve_model("hybrid").unwrap().name, "hybrid");
        assert!(matches!(resolve_model("nope"), Err(PipelineError::Input(_))));
        let untrained = resolve_model("output").unwrap();
        assert!(require_trained(&untrained).is_err());
    }
}
