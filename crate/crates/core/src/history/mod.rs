//! Per-notebook version series from local git clones.

mod diff;
mod git;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::notebook::{parse_notebook, Notebook};

pub use diff::{cell_diff, lcs_len, line_diff, Delta};
pub use git::{list_files, root_author_email};

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("not a git repository: {0}")]
    RepoNotFound(String),
    #[error("`{0}` never existed on the traversed branch")]
    PathNeverExisted(String),
    #[error("unreadable blob at {commit}: {reason}")]
    UnreadableBlob { commit: String, reason: String },
    #[error("git: {0}")]
    Git(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HistoryOptions {
    /// Branch or revision whose first-parent chain is walked.
    pub branch: String,
}

impl Default for HistoryOptions {
    fn default() -> Self {
        HistoryOptions {
            branch: "HEAD".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VersionRecord {
    pub commit_id: String,
    pub author_name: String,
    pub author_email: String,
    /// Committer time, seconds since the epoch.
    pub timestamp: i64,
    pub message: String,
    /// Notebook path as of this commit (differs from the history's path
    /// before a rename).
    pub path: String,
    #[serde(skip)]
    pub notebook: Option<Notebook>,
    /// Why the blob could not be read or parsed.
    pub error: Option<String>,
    /// Change against the previous parseable version; absent for the first
    /// one and for unparseable versions.
    pub delta: Option<Delta>,
}

impl VersionRecord {
    pub fn is_parseable(&self) -> bool {
        self.notebook.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NotebookHistory {
    pub repo_path: PathBuf,
    pub notebook_path: String,
    pub owner_identity: Option<String>,
    /// Oldest first.
    pub versions: Vec<VersionRecord>,
}

impl NotebookHistory {
    pub fn latest_parseable(&self) -> Option<&Notebook> {
        self.versions.iter().rev().find_map(|v| v.notebook.as_ref())
    }

    /// Threads deltas through the series: each parseable version is compared
    /// with the closest earlier parseable one.
    pub fn recompute_deltas(&mut self) {
        let mut prev: Option<Notebook> = None;
        for v in &mut self.versions {
            v.delta = None;
            if let Some(nb) = &v.notebook {
                if let Some(p) = &prev {
                    v.delta = Some(Delta::between(p, nb));
                }
                prev = Some(nb.clone());
            }
        }
    }
}

/// Collects every first-parent commit that touched `notebook_path`, oldest
/// first, with parsed notebooks and deltas.
pub fn extract_history(
    repo_path: &Path,
    notebook_path: &str,
    opts: &HistoryOptions,
) -> Result<NotebookHistory, HistoryError> {
    git::ensure_repo(repo_path)?;
    let mut entries = git::path_log(repo_path, &opts.branch, notebook_path)?;
    entries.retain(|e| !e.deleted);
    if entries.is_empty() {
        return Err(HistoryError::PathNeverExisted(notebook_path.to_string()));
    }
    entries.reverse();

    let versions = entries
        .into_iter()
        .map(|e| {
            let (notebook, error) = match git::read_blob(repo_path, &e.id, &e.path) {
                Ok(bytes) => match parse_notebook(&bytes, &e.path) {
                    Ok(nb) => (Some(nb), None),
                    Err(err) => (None, Some(err.to_string())),
                },
                Err(err) => (None, Some(err.to_string())),
            };
            VersionRecord {
                commit_id: e.id,
                author_name: e.author_name,
                author_email: e.author_email,
                timestamp: e.timestamp,
                message: e.message,
                path: e.path,
                notebook,
                error,
                delta: None,
            }
        })
        .collect();

    let mut history = NotebookHistory {
        repo_path: repo_path.to_path_buf(),
        notebook_path: notebook_path.to_string(),
        owner_identity: None,
        versions,
    };
    history.recompute_deltas();
    Ok(history)
}
