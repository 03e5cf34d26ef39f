use std::collections::HashSet;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::ScoringError;
use crate::metrics::{Feature, FeatureVector};

/// One weighted feature of a linear model. `weight` is `None` for model
/// skeletons that name their features but have not been trained.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub feature: String,
    pub weight: Option<f64>,
}

/// A named linear model over a subset of [`FeatureVector`] fields.
///
/// Serialized as `{"name": .., "intercept": .., "terms": {feature: weight}}`
/// with term order preserved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoefficientFile", into = "CoefficientFile")]
pub struct CoefficientSet {
    pub name: String,
    pub terms: Vec<Term>,
    pub intercept: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct CoefficientFile {
    name: String,
    intercept: Option<f64>,
    terms: IndexMap<String, Option<f64>>,
}

impl TryFrom<CoefficientFile> for CoefficientSet {
    type Error = String;

    fn try_from(file: CoefficientFile) -> Result<Self, Self::Error> {
        Ok(CoefficientSet {
            name: file.name,
            terms: file
                .terms
                .into_iter()
                .map(|(feature, weight)| Term { feature, weight })
                .collect(),
            intercept: file.intercept,
        })
    }
}

impl From<CoefficientSet> for CoefficientFile {
    fn from(set: CoefficientSet) -> Self {
        CoefficientFile {
            name: set.name,
            intercept: set.intercept,
            terms: set
                .terms
                .into_iter()
                .map(|t| (t.feature, t.weight))
                .collect(),
        }
    }
}

/// Unclamped and clamped model output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub raw: f64,
    pub clamped: f64,
}

impl CoefficientSet {
    pub fn trained(
        name: impl Into<String>,
        weights: impl IntoIterator<Item = (Feature, f64)>,
        intercept: f64,
    ) -> Self {
        CoefficientSet {
            name: name.into(),
            terms: weights
                .into_iter()
                .map(|(f, w)| Term {
                    feature: f.name().to_string(),
                    weight: Some(w),
                })
                .collect(),
            intercept: Some(intercept),
        }
    }

    pub fn is_trained(&self) -> bool {
        self.intercept.is_some() && self.terms.iter().all(|t| t.weight.is_some())
    }

    /// Resolves term names to features, rejecting unknown or repeated names.
    pub fn features(&self) -> Result<Vec<Feature>, ScoringError> {
        let mut seen = HashSet::new();
        self.terms
            .iter()
            .map(|t| {
                let f = Feature::from_str(&t.feature)
                    .map_err(|_| ScoringError::UnknownFeature(t.feature.clone()))?;
                if !seen.insert(f) {
                    return Err(ScoringError::DuplicateFeature(t.feature.clone()));
                }
                Ok(f)
            })
            .collect()
    }

    pub fn weight(&self, feature: Feature) -> Option<f64> {
        self.terms
            .iter()
            .find(|t| t.feature == feature.name())
            .and_then(|t| t.weight)
    }

    pub fn from_json(text: &str) -> Result<Self, ScoringError> {
        let set: CoefficientSet = serde_json::from_str(text)?;
        set.features()?;
        Ok(set)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("coefficient sets always serialize")
    }
}

pub fn score(features: &FeatureVector, model: &CoefficientSet) -> Result<Score, ScoringError> {
    let resolved = model.features()?;
    let intercept = model
        .intercept
        .ok_or_else(|| ScoringError::Untrained(model.name.clone()))?;
    let mut raw = intercept;
    for (feature, term) in resolved.into_iter().zip(&model.terms) {
        let weight = term
            .weight
            .ok_or_else(|| ScoringError::Untrained(model.name.clone()))?;
        raw += weight * features.get(feature);
    }
    Ok(Score {
        raw,
        clamped: raw.clamp(0.0, 1.0),
    })
}

/// The three feature combinations a model can be trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Hybrid,
    Output,
    Organization,
}

impl FeatureSet {
    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Hybrid => "hybrid",
            FeatureSet::Output => "output",
            FeatureSet::Organization => "organization",
        }
    }

    pub fn features(self) -> Vec<Feature> {
        use Feature::*;
        match self {
            FeatureSet::Hybrid => vec![
                TotalMarkdownCells,
                TotalMarkdownSpace,
                TotalCodeCells,
                TotalVisualizations,
                TotalTextOutputs,
                TotalTableOutputs,
            ],
            FeatureSet::Output => vec![
                TotalMarkdownCells,
                TotalTableOutputs,
                TotalVisualizations,
                TotalTextOutputs,
            ],
            FeatureSet::Organization => vec![
                TotalCodeCells,
                TotalMarkdownCells,
                TotalMarkdownSpace,
                TotalMarkdownLines,
            ],
        }
    }
}

impl FromStr for FeatureSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hybrid" => Ok(FeatureSet::Hybrid),
            "output" | "output-focused" => Ok(FeatureSet::Output),
            "organization" | "organization-focused" => Ok(FeatureSet::Organization),
            other => Err(format!(
                "unknown feature set `{other}` (expected hybrid, output, or organization)"
            )),
        }
    }
}

const HYBRID_JSON: &str = include_str!("../../assets/hybrid.json");
const OUTPUT_JSON: &str = include_str!("../../assets/output.json");
const ORGANIZATION_JSON: &str = include_str!("../../assets/organization.json");

pub const BUNDLED_MODELS: [&str; 3] = ["hybrid", "output", "organization"];

/// Looks up one of the models shipped with the tool.
pub fn bundled_model(name: &str) -> Option<CoefficientSet> {
    let text = match FeatureSet::from_str(name).ok()? {
        FeatureSet::Hybrid => HYBRID_JSON,
        FeatureSet::Output => OUTPUT_JSON,
        FeatureSet::Organization => ORGANIZATION_JSON,
    };
    Some(CoefficientSet::from_json(text).expect("bundled model assets are valid"))
}

pub fn hybrid() -> CoefficientSet {
    bundled_model("hybrid").expect("hybrid is bundled")
}
