//! Notebook-aware cell and line deltas built on LCS length.

use serde::{Deserialize, Serialize};

use crate::notebook::{CellKind, Notebook};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Delta {
    pub cells_added: u64,
    pub cells_deleted: u64,
    pub lines_added: u64,
    pub lines_deleted: u64,
}

impl Delta {
    pub fn between(a: &Notebook, b: &Notebook) -> Self {
        let (cells_added, cells_deleted) = cell_diff(a, b);
        let (lines_added, lines_deleted) = line_diff(a, b);
        Delta {
            cells_added,
            cells_deleted,
            lines_added,
            lines_deleted,
        }
    }

    pub fn cell_changes(&self) -> u64 {
        self.cells_added + self.cells_deleted
    }

    pub fn line_changes(&self) -> u64 {
        self.lines_added + self.lines_deleted
    }
}

/// Length of the longest common subsequence of `a` and `b`.
///
/// Common prefix and suffix are trimmed first; the remainder uses a
/// two-row table, so memory is linear in the shorter input.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let suffix = a
        .iter()
        .rev()
        .zip(b.iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let (a, b) = (&a[..a.len() - suffix], &b[..b.len() - suffix]);
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };

    let mut prev = vec![0usize; short.len() + 1];
    let mut cur = vec![0usize; short.len() + 1];
    for x in long {
        for (j, y) in short.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prefix + suffix + prev[short.len()]
}

fn added_deleted(a_len: usize, b_len: usize, common: usize) -> (u64, u64) {
    ((b_len - common) as u64, (a_len - common) as u64)
}

/// Cells are equal when kind and exact source match; an edited cell is one
/// deletion plus one addition.
pub fn cell_diff(a: &Notebook, b: &Notebook) -> (u64, u64) {
    let fa = cell_fingerprints(a);
    let fb = cell_fingerprints(b);
    added_deleted(fa.len(), fb.len(), lcs_len(&fa, &fb))
}

pub fn line_diff(a: &Notebook, b: &Notebook) -> (u64, u64) {
    let la = line_tokens(a);
    let lb = line_tokens(b);
    added_deleted(la.len(), lb.len(), lcs_len(&la, &lb))
}

fn cell_fingerprints(nb: &Notebook) -> Vec<(CellKind, &[String])> {
    nb.cells
        .iter()
        .map(|c| (c.kind, c.source_lines.as_slice()))
        .collect()
}

#[derive(Debug, PartialEq)]
pub(crate) enum LineToken<'a> {
    Line(&'a str),
    CellBoundary,
}

/// All source lines in cell order with a boundary token between cells.
pub(crate) fn line_tokens(nb: &Notebook) -> Vec<LineToken<'_>> {
    let mut out = Vec::new();
    for (i, cell) in nb.cells.iter().enumerate() {
        if i > 0 {
            out.push(LineToken::CellBoundary);
        }
        out.extend(cell.source_lines.iter().map(|l| LineToken::Line(l)));
    }
    out
}
