//! Corpus inclusion criteria: data-science content, enough versioning,
//! owner-only edits, and a Python kernel.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::NotebookHistory;
use crate::notebook::{comment_start, CellKind, Notebook};

#[derive(Debug, Error, PartialEq)]
pub enum FilterError {
    #[error("owner identity is not configured")]
    MissingOwnerIdentity,
}

pub const DEFAULT_LIBRARIES: [&str; 7] = [
    "numpy",
    "scipy",
    "pandas",
    "scikit-learn",
    "matplotlib",
    "pytorch",
    "tensorflow",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct FilterConfig {
    pub library_list: Vec<String>,
    pub min_libraries: usize,
    pub min_api_calls: usize,
    pub min_revisions: usize,
    pub min_cell_changes: u64,
    pub min_line_changes: u64,
    /// Author name or email accepted as the notebook owner.
    pub owner_identity: Option<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            library_list: DEFAULT_LIBRARIES.iter().map(|s| s.to_string()).collect(),
            min_libraries: 1,
            min_api_calls: 0,
            min_revisions: 4,
            min_cell_changes: 2,
            min_line_changes: 20,
            owner_identity: None,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.library_list.iter().all(|l| l.trim().is_empty()) {
            return Err("libraryList must not be empty".into());
        }
        Ok(())
    }
}

/// Top-level import name for a configured library. Packages whose
/// distribution name differs from their module name are mapped here.
pub fn import_root(library: &str) -> String {
    match library.to_ascii_lowercase().as_str() {
        "scikit-learn" | "scikit_learn" => "sklearn".to_string(),
        "pytorch" => "torch".to_string(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DataScienceResult {
    pub pass: bool,
    pub detected_libraries: Vec<String>,
    pub api_call_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VersionedResult {
    pub pass: bool,
    pub revision_count: usize,
    pub total_cell_changes: u64,
    pub total_line_changes: u64,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OriginalContentResult {
    pub pass: bool,
    pub offending_commits: Vec<String>,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KernelResult {
    pub pass: bool,
    pub kernel_language: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FilterReport {
    pub data_science: DataScienceResult,
    pub versioned: VersionedResult,
    pub original_content: OriginalContentResult,
    pub kernel_is_python: KernelResult,
    pub accepted: bool,
}

static FROM_IMPORT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:^|[\s:])from\s+(\.*[A-Za-z_][\w.]*)\s+import\s+(.+)$").unwrap()
});
static PLAIN_IMPORT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:^|[\s:])import\s+(.+)$").unwrap());
static ATTRIBUTE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:^|[^\w.])([A-Za-z_]\w*)\s*\.\s*[A-Za-z_]").unwrap());

/// Blanks out string literals and drops any trailing comment.
fn code_portion(line: &str) -> String {
    let end = comment_start(line).unwrap_or(line.len());
    let mut out = String::with_capacity(end);
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for ch in line[..end].chars() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == q {
                quote = None;
            }
            out.push(' ');
        } else if ch == '\'' || ch == '"' {
            quote = Some(ch);
            out.push(' ');
        } else {
            out.push(ch);
        }
    }
    out
}

/// (module root, bound name) pairs introduced by one statement, or `None`
/// when the statement is not an import.
fn parse_import(stmt: &str) -> Option<Vec<(String, String)>> {
    if let Some(c) = FROM_IMPORT.captures(stmt) {
        let module = &c[1];
        if module.starts_with('.') {
            return Some(Vec::new());
        }
        let root = module.split('.').next().unwrap_or(module).to_string();
        let names = c[2].trim().trim_start_matches('(').trim_end_matches(')');
        let mut bound = vec![(root.clone(), String::new())];
        for item in names.split(',') {
            let mut words = item.split_whitespace();
            let Some(name) = words.next() else { continue };
            if name == "*" {
                continue;
            }
            let alias = match (words.next(), words.next()) {
                (Some("as"), Some(a)) => a,
                _ => name,
            };
            bound.push((root.clone(), alias.to_string()));
        }
        return Some(bound);
    }
    if let Some(c) = PLAIN_IMPORT.captures(stmt) {
        let mut bound = Vec::new();
        for item in c[1].split(',') {
            let mut words = item.split_whitespace();
            let Some(module) = words.next() else { continue };
            if !module.chars().next().is_some_and(|ch| ch.is_alphabetic() || ch == '_') {
                continue;
            }
            let root = module.split('.').next().unwrap_or(module).to_string();
            let alias = match (words.next(), words.next()) {
                (Some("as"), Some(a)) => a.to_string(),
                _ => root.clone(),
            };
            bound.push((root, alias));
        }
        return Some(bound);
    }
    None
}

/// Statements of all code cells, comments and string contents removed,
/// shell and magic lines skipped.
fn code_statements(nb: &Notebook) -> impl Iterator<Item = String> + '_ {
    nb.cells
        .iter()
        .filter(|c| c.kind == CellKind::Code)
        .flat_map(|c| c.source_lines.iter())
        .filter(|l| {
            let t = l.trim_start();
            !(t.starts_with('!') || t.starts_with('%'))
        })
        .flat_map(|l| {
            code_portion(l)
                .split(';')
                .map(str::to_string)
                .collect::<Vec<_>>()
        })
}

pub fn detect_data_science(nb: &Notebook, cfg: &FilterConfig) -> DataScienceResult {
    // import root -> configured library name
    let wanted: BTreeMap<String, String> = cfg
        .library_list
        .iter()
        .map(|l| (import_root(l), l.clone()))
        .collect();

    let mut detected = BTreeSet::new();
    let mut aliases = BTreeSet::new();
    let mut other_statements = Vec::new();
    for stmt in code_statements(nb) {
        match parse_import(&stmt) {
            Some(bound) => {
                for (root, alias) in bound {
                    if let Some(lib) = wanted.get(&root) {
                        detected.insert(lib.clone());
                        if !alias.is_empty() {
                            aliases.insert(alias);
                        }
                    }
                }
            }
            None => other_statements.push(stmt),
        }
    }

    let api_call_count = other_statements
        .iter()
        .flat_map(|s| ATTRIBUTE.captures_iter(s))
        .filter(|c| aliases.contains(&c[1]))
        .count();

    DataScienceResult {
        pass: detected.len() >= cfg.min_libraries && api_call_count >= cfg.min_api_calls,
        detected_libraries: detected.into_iter().collect(),
        api_call_count,
    }
}

pub fn check_versioned(h: &NotebookHistory, cfg: &FilterConfig) -> VersionedResult {
    let revision_count = h.versions.len();
    let (total_cell_changes, total_line_changes) = h
        .versions
        .iter()
        .filter_map(|v| v.delta)
        .fold((0, 0), |(c, l), d| (c + d.cell_changes(), l + d.line_changes()));

    let mut reasons = Vec::new();
    if revision_count < cfg.min_revisions {
        reasons.push(format!(
            "at least {} revisions required, found {revision_count}",
            cfg.min_revisions
        ));
    }
    if total_cell_changes < cfg.min_cell_changes {
        reasons.push(format!(
            "at least {} cell additions or deletions required, found {total_cell_changes}",
            cfg.min_cell_changes
        ));
    }
    if total_line_changes < cfg.min_line_changes {
        reasons.push(format!(
            "at least {} line additions or deletions required, found {total_line_changes}",
            cfg.min_line_changes
        ));
    }
    VersionedResult {
        pass: reasons.is_empty(),
        revision_count,
        total_cell_changes,
        total_line_changes,
        reason: (!reasons.is_empty()).then(|| reasons.join("; ")),
    }
}

fn owner_of<'a>(h: &'a NotebookHistory, cfg: &'a FilterConfig) -> Option<&'a str> {
    h.owner_identity
        .as_deref()
        .or(cfg.owner_identity.as_deref())
        .map(str::trim)
        .filter(|s| !s.is_empty())
}

/// Every version must be authored by the owner, matched by name or email.
pub fn check_original_content(
    h: &NotebookHistory,
    cfg: &FilterConfig,
) -> Result<OriginalContentResult, FilterError> {
    let owner = owner_of(h, cfg).ok_or(FilterError::MissingOwnerIdentity)?;
    let is_owner = |s: &str| s.trim().eq_ignore_ascii_case(owner);
    let offending_commits: Vec<String> = h
        .versions
        .iter()
        .filter(|v| !(is_owner(&v.author_name) || is_owner(&v.author_email)))
        .map(|v| v.commit_id.clone())
        .collect();
    Ok(OriginalContentResult {
        pass: offending_commits.is_empty(),
        reason: (!offending_commits.is_empty()).then(|| {
            format!(
                "{} commit(s) not authored by owner `{owner}`",
                offending_commits.len()
            )
        }),
        offending_commits,
    })
}

pub fn check_kernel(nb: Option<&Notebook>) -> KernelResult {
    let kernel_language = nb.map(|n| n.kernel_language.clone());
    KernelResult {
        pass: kernel_language
            .as_deref()
            .is_some_and(|k| k.starts_with("python")),
        kernel_language,
    }
}

/// Evaluates every criterion; nothing short-circuits.
pub fn apply_filters(h: &NotebookHistory, cfg: &FilterConfig) -> FilterReport {
    let latest = h.latest_parseable();
    let data_science = match latest {
        Some(nb) => detect_data_science(nb, cfg),
        None => DataScienceResult {
            pass: false,
            detected_libraries: Vec::new(),
            api_call_count: 0,
        },
    };
    let versioned = check_versioned(h, cfg);
    let original_content = check_original_content(h, cfg).unwrap_or_else(|e| OriginalContentResult {
        pass: false,
        offending_commits: Vec::new(),
        reason: Some(e.to_string()),
    });
    let kernel_is_python = check_kernel(latest);
    let accepted =
        data_science.pass && versioned.pass && original_content.pass && kernel_is_python.pass;
    FilterReport {
        data_science,
        versioned,
        original_content,
        kernel_is_python,
        accepted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::{Delta, VersionRecord};
    use crate::notebook::Cell;

    fn code_nb(src: &str) -> Notebook {
        let mut nb = Notebook::empty("ds.ipynb");
        nb.kernel_language = "python".into();
        nb.cells.push(Cell::new(
            CellKind::Code,
            src.lines().map(str::to_string).collect(),
            vec![],
        ));
        nb
    }

    fn history(n: usize, cell_changes: u64, line_changes: u64) -> NotebookHistory {
        let versions = (0..n)
            .map(|i| VersionRecord {
                commit_id: format!("c{i}"),
                author_name: "Ada".into(),
                author_email: "ada@example.org".into(),
                timestamp: i as i64,
                message: String::new(),
                path: "nb.ipynb".into(),
                notebook: Some(code_nb("import numpy as np\nnp.zeros(3)")),
                error: None,
                delta: (i == 1).then_some(Delta {
                    cells_added: cell_changes,
                    cells_deleted: 0,
                    lines_added: line_changes,
                    lines_deleted: 0,
                }),
            })
            .collect();
        NotebookHistory {
            repo_path: "/tmp/repo".into(),
            notebook_path: "nb.ipynb".into(),
            owner_identity: None,
            versions,
        }
    }

    fn owned(cfg: FilterConfig) -> FilterConfig {
        FilterConfig {
            owner_identity: Some("Ada".into()),
            ..cfg
        }
    }

    #[test]
    fn detects_numpy_alias_and_calls() {
        let r = detect_data_science(&code_nb("import numpy as np\nnp.mean(x)"), &FilterConfig::default());
        assert!(r.pass);
        assert_eq!(r.detected_libraries, vec!["numpy"]);
        assert!(r.api_call_count >= 1);
    }

    #[test]
    fn no_imports_fails() {
        let r = detect_data_science(&code_nb("x = 1\nprint(x)"), &FilterConfig::default());
        assert_eq!((r.pass, r.detected_libraries.len(), r.api_call_count), (false, 0, 0));
    }

    #[test]
    fn dotted_root_families() {
        let cfg = FilterConfig::default();
        let r = detect_data_science(&code_nb("from sklearn.linear_model import LinearRegression"), &cfg);
        assert_eq!(r.detected_libraries, vec!["scikit-learn"]);
        let r = detect_data_science(&code_nb("import torch.nn as nn\nnn.Linear(2, 3)"), &cfg);
        assert_eq!(r.detected_libraries, vec!["pytorch"]);
        assert_eq!(r.api_call_count, 1);
        let r = detect_data_science(&code_nb("import matplotlib.pyplot\nmatplotlib.pyplot.plot(x)"), &cfg);
        assert_eq!(r.detected_libraries, vec!["matplotlib"]);
        assert_eq!(r.api_call_count, 1);
    }

    #[test]
    fn import_forms() {
        let cfg = FilterConfig::default();
        let src = "import os, numpy as np, scipy.stats\nfrom pandas import (DataFrame, read_csv as rc)\n\
                   from matplotlib import pyplot as plt; plt.show()\ntry: import tensorflow as tf\nexcept: pass";
        let r = detect_data_science(&code_nb(src), &cfg);
        assert_eq!(
            r.detected_libraries,
            vec!["matplotlib", "numpy", "pandas", "scipy", "tensorflow"]
        );
        assert_eq!(r.api_call_count, 1);
    }

    #[test]
    fn comments_strings_and_magics_are_ignored() {
        let cfg = FilterConfig::default();
        let src = "# import numpy as np\ns = 'import pandas'\n!pip install scipy\n%matplotlib inline\nx = 1  # from sklearn import svm";
        let r = detect_data_science(&code_nb(src), &cfg);
        assert!(!r.pass);
        assert!(r.detected_libraries.is_empty());
    }

    #[test]
    fn api_count_needs_bound_alias() {
        let cfg = FilterConfig::default();
        let r = detect_data_science(&code_nb("import numpy as np\nx.np.mean()\nnp.a + np.b\n'np.c'"), &cfg);
        assert_eq!(r.api_call_count, 2);
        let strict = FilterConfig { min_api_calls: 3, ..cfg };
        assert!(!detect_data_science(&code_nb("import numpy as np\nnp.a + np.b"), &strict).pass);
    }

    #[test]
    fn markdown_imports_do_not_count() {
        let mut nb = Notebook::empty("m.ipynb");
        nb.cells.push(Cell::new(CellKind::Markdown, vec!["import numpy as np".into()], vec![]));
        assert!(!detect_data_science(&nb, &FilterConfig::default()).pass);
    }

    #[test]
    fn versioned_thresholds() {
        let cfg = FilterConfig::default();
        let r = check_versioned(&history(3, 50, 500), &cfg);
        assert!(!r.pass);
        assert!(r.reason.unwrap().contains("at least 4 revisions"));
        assert!(check_versioned(&history(5, 2, 20), &cfg).pass);
        assert!(!check_versioned(&history(6, 1, 20), &cfg).pass);
        assert!(!check_versioned(&history(6, 2, 19), &cfg).pass);
        assert!(check_versioned(&history(4, 2, 20), &cfg).pass);
    }

    #[test]
    fn original_content() {
        let h = history(4, 2, 20);
        assert_eq!(
            check_original_content(&h, &FilterConfig::default()),
            Err(FilterError::MissingOwnerIdentity)
        );
        let cfg = owned(FilterConfig::default());
        let r = check_original_content(&h, &cfg).unwrap();
        assert!(r.pass);
        assert!(r.offending_commits.is_empty());

        let mut other = h.clone();
        other.versions[2].author_name = "Bob".into();
        other.versions[2].author_email = "bob@example.org".into();
        let r = check_original_content(&other, &cfg).unwrap();
        assert!(!r.pass);
        assert_eq!(r.offending_commits, vec!["c2"]);

        let mut by_email = h.clone();
        for v in &mut by_email.versions {
            v.author_name = "Someone Else".into();
        }
        let email_cfg = FilterConfig {
            owner_identity: Some("ADA@example.org".into()),
            ..FilterConfig::default()
        };
        assert!(check_original_content(&by_email, &email_cfg).unwrap().pass);
    }

    #[test]
    fn apply_composes_all_criteria() {
        let cfg = owned(FilterConfig::default());
        let good = history(5, 3, 40);
        assert!(apply_filters(&good, &cfg).accepted);

        let mut r_kernel = good.clone();
        for v in &mut r_kernel.versions {
            v.notebook.as_mut().unwrap().kernel_language = "r".into();
        }
        let rep = apply_filters(&r_kernel, &cfg);
        assert!(!rep.kernel_is_python.pass);
        assert!(!rep.accepted);
        assert!(rep.data_science.pass && rep.versioned.pass && rep.original_content.pass);

        let rep = apply_filters(&history(3, 3, 40), &cfg);
        assert!(!rep.accepted);
        assert!(!rep.versioned.pass);
        assert!(rep.data_science.pass && rep.kernel_is_python.pass);
    }

    #[test]
    fn no_parseable_version_fails_content_checks() {
        let mut h = history(5, 3, 40);
        for v in &mut h.versions {
            v.notebook = None;
        }
        let rep = apply_filters(&h, &owned(FilterConfig::default()));
        assert!(!rep.data_science.pass);
        assert!(!rep.kernel_is_python.pass);
        assert!(rep.kernel_is_python.kernel_language.is_none());
    }
}
