//! Raw per-notebook measures and their normalized [0, 1] features.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::notebook::{Cell, CellKind, Notebook, OutputKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricVector {
    pub code_cells: u64,
    pub markdown_cells: u64,
    pub total_cells: u64,
    pub code_lines: u64,
    pub markdown_lines: u64,
    pub text_outputs: u64,
    pub table_outputs: u64,
    pub visualization_outputs: u64,
    pub total_outputs: u64,
    pub code_comments: u64,
    pub code_spacing: u64,
    pub markdown_spacing: u64,
    pub total_spacing: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeatureVector {
    pub total_code_cells: f64,
    pub total_markdown_cells: f64,
    pub total_markdown_lines: f64,
    pub total_markdown_space: f64,
    pub total_code_space: f64,
    pub total_text_outputs: f64,
    pub total_table_outputs: f64,
    pub total_visualizations: f64,
    pub comment_density: f64,
}

/// Names of the normalized features, as they appear in model files and
/// training CSVs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    TotalCodeCells,
    TotalMarkdownCells,
    TotalMarkdownLines,
    TotalMarkdownSpace,
    TotalCodeSpace,
    TotalTextOutputs,
    TotalTableOutputs,
    TotalVisualizations,
    CommentDensity,
}

impl Feature {
    pub const ALL: [Feature; 9] = [
        Feature::TotalCodeCells,
        Feature::TotalMarkdownCells,
        Feature::TotalMarkdownLines,
        Feature::TotalMarkdownSpace,
        Feature::TotalCodeSpace,
        Feature::TotalTextOutputs,
        Feature::TotalTableOutputs,
        Feature::TotalVisualizations,
        Feature::CommentDensity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::TotalCodeCells => "totalCodeCells",
            Feature::TotalMarkdownCells => "totalMarkdownCells",
            Feature::TotalMarkdownLines => "totalMarkdownLines",
            Feature::TotalMarkdownSpace => "totalMarkdownSpace",
            Feature::TotalCodeSpace => "totalCodeSpace",
            Feature::TotalTextOutputs => "totalTextOutputs",
            Feature::TotalTableOutputs => "totalTableOutputs",
            Feature::TotalVisualizations => "totalVisualizations",
            Feature::CommentDensity => "commentDensity",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown feature `{s}`"))
    }
}

impl FeatureVector {
    pub fn get(&self, feature: Feature) -> f64 {
        match feature {
            Feature::TotalCodeCells => self.total_code_cells,
            Feature::TotalMarkdownCells => self.total_markdown_cells,
            Feature::TotalMarkdownLines => self.total_markdown_lines,
            Feature::TotalMarkdownSpace => self.total_markdown_space,
            Feature::TotalCodeSpace => self.total_code_space,
            Feature::TotalTextOutputs => self.total_text_outputs,
            Feature::TotalTableOutputs => self.total_table_outputs,
            Feature::TotalVisualizations => self.total_visualizations,
            Feature::CommentDensity => self.comment_density,
        }
    }

    pub fn set(&mut self, feature: Feature, value: f64) {
        let slot = match feature {
            Feature::TotalCodeCells => &mut self.total_code_cells,
            Feature::TotalMarkdownCells => &mut self.total_markdown_cells,
            Feature::TotalMarkdownLines => &mut self.total_markdown_lines,
            Feature::TotalMarkdownSpace => &mut self.total_markdown_space,
            Feature::TotalCodeSpace => &mut self.total_code_space,
            Feature::TotalTextOutputs => &mut self.total_text_outputs,
            Feature::TotalTableOutputs => &mut self.total_table_outputs,
            Feature::TotalVisualizations => &mut self.total_visualizations,
            Feature::CommentDensity => &mut self.comment_density,
        };
        *slot = value;
    }
}

/// How comment density is aggregated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CommentDensityMode {
    /// Total comments divided by total code lines.
    #[default]
    PerNotebook,
    /// Mean of per-cell comments/lines over code cells with at least one line.
    PerCellMean,
}

/// Spaces, tabs, and one character per line boundary.
fn spacing(cell: &Cell) -> u64 {
    let inline: usize = cell
        .source_lines
        .iter()
        .map(|l| l.chars().filter(|c| *c == ' ' || *c == '\t').count())
        .sum();
    let boundaries = cell.source_lines.len().saturating_sub(1);
    (inline + boundaries) as u64
}

pub fn extract_metrics(nb: &Notebook) -> MetricVector {
    let mut m = MetricVector::default();
    for cell in &nb.cells {
        let lines = cell.source_lines.len() as u64;
        let space = spacing(cell);
        m.total_cells += 1;
        m.total_spacing += space;
        match cell.kind {
            CellKind::Code => {
                m.code_cells += 1;
                m.code_lines += lines;
                m.code_comments += cell.comment_count as u64;
                m.code_spacing += space;
            }
            CellKind::Markdown => {
                m.markdown_cells += 1;
                m.markdown_lines += lines;
                m.markdown_spacing += space;
            }
            CellKind::Raw => {}
        }
        for out in &cell.outputs {
            m.total_outputs += 1;
            match out.kind {
                OutputKind::Text => m.text_outputs += 1,
                OutputKind::Table => m.table_outputs += 1,
                OutputKind::Visualization => m.visualization_outputs += 1,
                OutputKind::Error | OutputKind::Other => {}
            }
        }
    }
    m
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn normalize(m: &MetricVector) -> FeatureVector {
    FeatureVector {
        total_code_cells: ratio(m.code_cells, m.total_cells),
        total_markdown_cells: ratio(m.markdown_cells, m.total_cells),
        total_markdown_lines: ratio(m.markdown_lines, m.code_lines + m.markdown_lines),
        total_markdown_space: ratio(m.markdown_spacing, m.total_spacing),
        total_code_space: ratio(m.code_spacing, m.total_spacing),
        total_text_outputs: ratio(m.text_outputs, m.total_outputs),
        total_table_outputs: ratio(m.table_outputs, m.total_outputs),
        total_visualizations: ratio(m.visualization_outputs, m.total_outputs),
        comment_density: ratio(m.code_comments, m.code_lines),
    }
}

/// Metrics and features for a notebook in one pass.
pub fn featurize(nb: &Notebook, mode: CommentDensityMode) -> (MetricVector, FeatureVector) {
    let metrics = extract_metrics(nb);
    let mut features = normalize(&metrics);
    if mode == CommentDensityMode::PerCellMean {
        let per_cell: Vec<f64> = nb
            .cells
            .iter()
            .filter(|c| c.kind == CellKind::Code && !c.source_lines.is_empty())
            .map(|c| ratio(c.comment_count as u64, c.source_lines.len() as u64))
            .collect();
        features.comment_density = if per_cell.is_empty() {
            0.0
        } else {
            per_cell.iter().sum::<f64>() / per_cell.len() as f64
        };
    }
    (metrics, features)
}
