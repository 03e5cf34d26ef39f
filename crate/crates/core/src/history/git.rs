//! Thin wrapper over the `git` command line.

use std::path::Path;
use std::process::Command;

use super::HistoryError;

const RECORD_SEP: char = '\u{1e}';
const FIELD_SEP: char = '\u{1f}';

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CommitEntry {
    pub id: String,
    pub author_name: String,
    pub author_email: String,
    pub timestamp: i64,
    pub message: String,
    /// Path of the notebook as of this commit.
    pub path: String,
    pub deleted: bool,
}

fn git(repo: &Path) -> Command {
    let mut cmd = Command::new("git");
    cmd.arg("-C")
        .arg(repo)
        .args(["-c", "core.quotePath=false"])
        .env("GIT_TERMINAL_PROMPT", "0")
        .env("LC_ALL", "C");
    cmd
}

fn run(mut cmd: Command) -> Result<Vec<u8>, HistoryError> {
    let out = cmd.output().map_err(|e| HistoryError::Git(e.to_string()))?;
    if !out.status.success() {
        return Err(HistoryError::Git(
            String::from_utf8_lossy(&out.stderr).trim().to_string(),
        ));
    }
    Ok(out.stdout)
}

pub(crate) fn ensure_repo(repo: &Path) -> Result<(), HistoryError> {
    if !repo.is_dir() {
        return Err(HistoryError::RepoNotFound(repo.display().to_string()));
    }
    let mut cmd = git(repo);
    cmd.args(["rev-parse", "--git-dir"]);
    run(cmd).map_err(|_| HistoryError::RepoNotFound(repo.display().to_string()))?;
    Ok(())
}

/// First-parent commits on `branch` that changed `path`, newest first,
/// following renames.
pub(crate) fn path_log(repo: &Path, branch: &str, path: &str) -> Result<Vec<CommitEntry>, HistoryError> {
    let mut cmd = git(repo);
    cmd.args([
        "log",
        "--first-parent",
        "--diff-merges=first-parent",
        "--follow",
        "--name-status",
        "--format=%x1e%H%x1f%an%x1f%ae%x1f%ct%x1f%B%x1f",
        branch,
        "--",
        path,
    ]);
    let raw = run(cmd)?;
    let text = String::from_utf8_lossy(&raw);

    let mut current_path = path.to_string();
    let mut entries = Vec::new();
    for record in text.split(RECORD_SEP).filter(|r| !r.trim().is_empty()) {
        let fields: Vec<&str> = record.splitn(6, FIELD_SEP).collect();
        if fields.len() < 6 {
            return Err(HistoryError::Git(format!("unexpected log record: {record:?}")));
        }
        let mut entry = CommitEntry {
            id: fields[0].trim().to_string(),
            author_name: fields[1].to_string(),
            author_email: fields[2].to_string(),
            timestamp: fields[3].trim().parse().unwrap_or(0),
            message: fields[4].trim_end().to_string(),
            path: current_path.clone(),
            deleted: false,
        };
        // name-status lines: "M\tpath", "R087\told\tnew"
        if let Some(line) = fields[5].lines().map(str::trim_end).find(|l| l.contains('\t')) {
            let parts: Vec<&str> = line.split('\t').collect();
            let status = parts[0];
            entry.path = parts[parts.len() - 1].to_string();
            entry.deleted = status.starts_with('D');
            current_path = if status.starts_with('R') || status.starts_with('C') {
                parts[1].to_string()
            } else {
                entry.path.clone()
            };
        }
        entries.push(entry);
    }
    Ok(entries)
}

pub(crate) fn read_blob(repo: &Path, commit: &str, path: &str) -> Result<Vec<u8>, HistoryError> {
    let mut cmd = git(repo);
    cmd.arg("show").arg(format!("{commit}:{path}"));
    run(cmd).map_err(|e| HistoryError::UnreadableBlob {
        commit: commit.to_string(),
        reason: e.to_string(),
    })
}

/// Files tracked at the tip of `branch`.
pub fn list_files(repo: &Path, branch: &str) -> Result<Vec<String>, HistoryError> {
    let mut cmd = git(repo);
    cmd.args(["ls-tree", "-r", "--name-only", "-z", branch]);
    let raw = run(cmd)?;
    Ok(raw
        .split(|b| *b == 0)
        .filter(|s| !s.is_empty())
        .map(|s| String::from_utf8_lossy(s).into_owned())
        .collect())
}

/// Author email of the earliest first-parent commit on `branch`.
pub fn root_author_email(repo: &Path, branch: &str) -> Result<String, HistoryError> {
    let mut cmd = git(repo);
    cmd.args(["log", "--first-parent", "--reverse", "--format=%ae", branch]);
    let raw = run(cmd)?;
    String::from_utf8_lossy(&raw)
        .lines()
        .next()
        .map(str::to_string)
        .ok_or_else(|| HistoryError::Git("branch has no commits".into()))
}
