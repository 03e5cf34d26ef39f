//! Linear sensemaking-score models: evaluation, least-squares training and
//! five-fold cross-validation.

mod model;
mod ols;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{Feature, FeatureVector};

pub use model::{bundled_model, hybrid, score, CoefficientSet, FeatureSet, Score, Term, BUNDLED_MODELS};
pub use ols::least_squares;

pub const FOLDS: usize = 5;
pub const MIN_CV_EXAMPLES: usize = 10;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("model references unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("model lists feature `{0}` more than once")]
    DuplicateFeature(String),
    #[error("model `{0}` has no trained weights")]
    Untrained(String),
    #[error("design matrix is rank deficient (column {column} is collinear with earlier columns)")]
    RankDeficient { column: usize },
    #[error("too few examples: need at least {needed}, got {got}")]
    TooFewExamples { needed: usize, got: usize },
    #[error("length mismatch: {actual} actual values vs {predicted} predictions")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<ScoringError>,
    },
    #[error("invalid model JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// A feature vector with a manually assigned score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: FeatureVector,
    pub label: f64,
}

impl LabeledExample {
    /// Builds an example whose label is on the rubric grid 0.1, 0.2, …, 1.0.
    pub fn rubric(features: FeatureVector, label: f64) -> Option<Self> {
        is_rubric_label(label).then_some(LabeledExample { features, label })
    }
}

pub fn is_rubric_label(label: f64) -> bool {
    let tenths = label * 10.0;
    (1.0..=10.0).contains(&tenths.round()) && (tenths - tenths.round()).abs() < 1e-9
}

/// Fits `label ~ intercept + Σ wᵢ·featureᵢ` by least squares.
pub fn ols_fit(
    examples: &[LabeledExample],
    features: &[Feature],
) -> Result<CoefficientSet, ScoringError> {
    let needed = features.len() + 1;
    if examples.len() < needed {
        return Err(ScoringError::TooFewExamples {
            needed,
            got: examples.len(),
        });
    }
    let rows: Vec<Vec<f64>> = examples
        .iter()
        .map(|ex| {
            std::iter::once(1.0)
                .chain(features.iter().map(|f| ex.features.get(*f)))
                .collect()
        })
        .collect();
    let labels: Vec<f64> = examples.iter().map(|ex| ex.label).collect();
    let beta = least_squares(&rows, &labels)?;
    Ok(CoefficientSet::trained(
        "ols",
        features.iter().copied().zip(beta[1..].iter().copied()),
        beta[0],
    ))
}

/// Coefficient of determination. Zero-variance `actual` yields 0.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<f64, ScoringError> {
    if actual.len() != predicted.len() {
        return Err(ScoringError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(ScoringError::EmptyInput);
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Ok(0.0);
    }
    let ss_res: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Which side of each fold is used for training.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CvSplit {
    /// Train on the fold (about 20%), test on the other four.
    #[default]
    TrainOnFold,
    /// Train on the other four folds, test on the fold.
    TrainOnRest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CvReport {
    pub split: CvSplit,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    #[serde(rename = "foldR2")]
    pub fold_r2: Vec<f64>,
    #[serde(rename = "meanR2")]
    pub mean_r2: f64,
    #[serde(rename = "medianR2")]
    pub median_r2: f64,
    pub fitted_model: CoefficientSet,
}

/// Shuffles `0..n` with `seed` and cuts it into five near-equal folds; the
/// first `n % 5` folds get one extra index.
pub fn fold_assignment(n: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = n / FOLDS;
    let extra = n % FOLDS;
    let mut folds = Vec::with_capacity(FOLDS);
    let mut start = 0;
    for k in 0..FOLDS {
        let len = base + usize::from(k < extra);
        folds.push(order[start..start + len].to_vec());
        start += len;
    }
    folds
}

pub fn cross_validate(
    examples: &[LabeledExample],
    features: &[Feature],
    seed: u64,
    split: CvSplit,
) -> Result<CvReport, ScoringError> {
    if examples.len() < MIN_CV_EXAMPLES {
        return Err(ScoringError::TooFewExamples {
            needed: MIN_CV_EXAMPLES,
            got: examples.len(),
        });
    }
    let folds = fold_assignment(examples.len(), seed);
    let mut results = Vec::with_capacity(FOLDS);
    for (k, fold) in folds.iter().enumerate() {
        let in_fold: Vec<LabeledExample> = fold.iter().map(|&i| examples[i]).collect();
        let rest: Vec<LabeledExample> = folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .flat_map(|(_, f)| f.iter().map(|&i| examples[i]))
            .collect();
        let (train, test) = match split {
            CvSplit::TrainOnFold => (in_fold, rest),
            CvSplit::TrainOnRest => (rest, in_fold),
        };
        let wrap = |e: ScoringError| ScoringError::Fold {
            fold: k,
            source: Box::new(e),
        };
        let model = ols_fit(&train, features).map_err(wrap)?;
        let predicted = test
            .iter()
            .map(|ex| score(&ex.features, &model).map(|s| s.raw))
            .collect::<Result<Vec<_>, _>>()
            .map_err(wrap)?;
        let actual: Vec<f64> = test.iter().map(|ex| ex.label).collect();
        let r2 = r_squared(&actual, &predicted).map_err(wrap)?;
        results.push(FoldResult {
            fold: k,
            train_size: train.len(),
            test_size: test.len(),
            r2,
        });
    }

    let fold_r2: Vec<f64> = results.iter().map(|r| r.r2).collect();
    let mean_r2 = fold_r2.iter().sum::<f64>() / fold_r2.len() as f64;
    let mut sorted = fold_r2.clone();
    sorted.sort_by(f64::total_cmp);
    let median_r2 = sorted[sorted.len() / 2];

    Ok(CvReport {
        split,
        seed,
        folds: results,
        fold_r2,
        mean_r2,
        median_r2,
        fitted_model: ols_fit(examples, features)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_examples(n: usize) -> Vec<LabeledExample> {
        (0..n)
            .map(|i| {
                let x = i as f64 / n as f64;
                LabeledExample {
                    features: FeatureVector {
                        total_markdown_cells: x,
                        ..Default::default()
                    },
                    label: 0.3 * x + 0.1,
                }
            })
            .collect()
    }

    #[test]
    fn recovers_simple_line() {
        let m = ols_fit(&line_examples(10), &[Feature::TotalMarkdownCells]).unwrap();
        assert!((m.weight(Feature::TotalMarkdownCells).unwrap() - 0.3).abs() < 1e-9);
        assert!((m.intercept.unwrap() - 0.1).abs() < 1e-9);
    }

    #[test]
    fn identical_columns_are_rank_deficient() {
        let ex: Vec<_> = line_examples(10)
            .into_iter()
            .map(|mut e| {
                e.features.total_code_cells = e.features.total_markdown_cells;
                e
            })
            .collect();
        let err = ols_fit(&ex, &[Feature::TotalMarkdownCells, Feature::TotalCodeCells]);
        assert!(matches!(err, Err(ScoringError::RankDeficient { .. })));
    }

    #[test]
    fn too_few_examples() {
        let err = ols_fit(&line_examples(1), &[Feature::TotalMarkdownCells]);
        assert!(matches!(err, Err(ScoringError::TooFewExamples { needed: 2, got: 1 })));
        let err = cross_validate(&line_examples(9), &[Feature::TotalMarkdownCells], 42, CvSplit::TrainOnFold);
        assert!(matches!(err, Err(ScoringError::TooFewExamples { needed: 10, got: 9 })));
    }

    #[test]
    fn r_squared_cases() {
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(r_squared(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), -3.0);
        assert_eq!(r_squared(&[0.4, 0.4], &[0.1, 0.9]).unwrap(), 0.0);
        assert!(matches!(r_squared(&[1.0], &[]), Err(ScoringError::LengthMismatch { .. })));
        assert!(matches!(r_squared(&[], &[]), Err(ScoringError::EmptyInput)));
    }

    #[test]
    fn fold_sizes_for_25() {
        let folds = fold_assignment(25, 7);
        assert!(folds.iter().all(|f| f.len() == 5));
        let mut all: Vec<usize> = folds.concat();
        all.sort();
        assert_eq!(all, (0..25).collect::<Vec<_>>());

        let report = cross_validate(&line_examples(25), &[Feature::TotalMarkdownCells], 7, CvSplit::TrainOnFold).unwrap();
        for f in &report.folds {
            assert_eq!((f.train_size, f.test_size), (5, 20));
        }
        let conv = cross_validate(&line_examples(25), &[Feature::TotalMarkdownCells], 7, CvSplit::TrainOnRest).unwrap();
        for f in &conv.folds {
            assert_eq!((f.train_size, f.test_size), (20, 5));
        }
    }

    #[test]
    fn uneven_folds() {
        let sizes: Vec<usize> = fold_assignment(12, 1).iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 2, 2, 2]);
    }

    #[test]
    fn noiseless_cv_is_perfect() {
        let r = cross_validate(&line_examples(30), &[Feature::TotalMarkdownCells], 42, CvSplit::TrainOnFold).unwrap();
        assert_eq!(r.fold_r2.len(), 5);
        for v in &r.fold_r2 {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!((r.median_r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_labels_give_zero_r2() {
        let ex: Vec<_> = line_examples(20)
            .into_iter()
            .map(|mut e| {
                e.label = 0.5;
                e
            })
            .collect();
        let r = cross_validate(&ex, &[Feature::TotalMarkdownCells], 42, CvSplit::TrainOnFold).unwrap();
        assert!(r.fold_r2.iter().all(|v| *v == 0.0));
        assert_eq!(r.median_r2, 0.0);
    }

    #[test]
    fn fold_errors_carry_index() {
        // every example has the same feature value, so each fold is singular
        let ex: Vec<_> = (0..10)
            .map(|i| LabeledExample {
                features: FeatureVector {
                    total_markdown_cells: 0.5,
                    ..Default::default()
                },
                label: i as f64 / 10.0,
            })
            .collect();
        let err = cross_validate(&ex, &[Feature::TotalMarkdownCells], 42, CvSplit::TrainOnRest).unwrap_err();
        assert!(matches!(err, ScoringError::Fold { fold: 0, .. }), "{err}");
    }

    #[test]
    fn rubric_labels() {
        assert!(is_rubric_label(0.1));
        assert!(is_rubric_label(0.7));
        assert!(is_rubric_label(1.0));
        assert!(!is_rubric_label(0.0));
        assert!(!is_rubric_label(0.15));
        assert!(!is_rubric_label(1.1));
        assert!(LabeledExample::rubric(FeatureVector::default(), 0.3).is_some());
        assert!(LabeledExample::rubric(FeatureVector::default(), 0.33).is_none());
    }
}
