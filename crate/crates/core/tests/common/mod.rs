#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

/// A throwaway git repository driven through the `git` CLI with pinned
/// identities and dates.
pub struct FixtureRepo {
    pub path: PathBuf,
    clock: i64,
}

pub const ALICE: (&str, &str) = ("Alice Analyst", "alice@example.org");
pub const BOB: (&str, &str) = ("Bob Builder", "bob@example.org");

impl FixtureRepo {
    pub fn init(path: &Path) -> Self {
        std::fs::create_dir_all(path).unwrap();
        let repo = FixtureRepo {
            path: path.to_path_buf(),
            clock: 1_600_000_000,
        };
        repo.git(&["init", "-q", "-b", "main"], ALICE);
        repo
    }

    pub fn git(&self, args: &[&str], who: (&str, &str)) -> String {
        let date = format!("@{} +0000", self.clock);
        let out = Command::new("git")
            .arg("-C")
            .arg(&self.path)
            .args(["-c", "commit.gpgsign=false", "-c", "core.autocrlf=false"])
            .args(args)
            .env("GIT_AUTHOR_NAME", who.0)
            .env("GIT_AUTHOR_EMAIL", who.1)
            .env("GIT_COMMITTER_NAME", who.0)
            .env("GIT_COMMITTER_EMAIL", who.1)
            .env("GIT_AUTHOR_DATE", &date)
            .env("GIT_COMMITTER_DATE", &date)
            .env("GIT_CONFIG_NOSYSTEM", "1")
            .env("HOME", &self.path)
            .output()
            .expect("git runs");
        assert!(
            out.status.success(),
            "git {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    /// Writes (or deletes, for `None`) files and commits them; returns the
    /// commit id.
    pub fn commit(&mut self, files: &[(&str, Option<&str>)], who: (&str, &str), msg: &str) -> String {
        self.clock += 3600;
        for (name, content) in files {
            let p = self.path.join(name);
            match content {
                Some(text) => {
                    if let Some(parent) = p.parent() {
                        std::fs::create_dir_all(parent).unwrap();
                    }
                    std::fs::write(&p, text).unwrap();
                    self.git(&["add", "--", name], who);
                }
                None => {
                    self.git(&["rm", "-q", "--", name], who);
                }
            }
        }
        self.git(&["commit", "-q", "--allow-empty", "-m", msg], who);
        self.git(&["rev-parse", "HEAD"], who).trim().to_string()
    }

    pub fn rename(&mut self, from: &str, to: &str, who: (&str, &str), msg: &str) -> String {
        self.clock += 3600;
        self.git(&["mv", from, to], who);
        self.git(&["commit", "-q", "-m", msg], who);
        self.git(&["rev-parse", "HEAD"], who).trim().to_string()
    }
}

fn lines(src: &str) -> Value {
    let parts: Vec<String> = src.split_inclusive('\n').map(str::to_string).collect();
    json!(parts)
}

pub fn code(src: &str, outputs: Vec<Value>) -> Value {
    json!({"cell_type": "code", "execution_count": null, "metadata": {},
           "source": lines(src), "outputs": outputs})
}

pub fn md(src: &str) -> Value {
    json!({"cell_type": "markdown", "metadata": {}, "source": lines(src)})
}

pub fn raw(src: &str) -> Value {
    json!({"cell_type": "raw", "metadata": {}, "source": lines(src)})
}

pub fn stream(text: &str) -> Value {
    json!({"output_type": "stream", "name": "stdout", "text": [text]})
}

pub fn png() -> Value {
    json!({"output_type": "display_data", "metadata": {},
           "data": {"image/png": "iVBORw0KGgo=", "text/plain": ["<Figure size 640x480>"]}})
}

pub fn html_table() -> Value {
    json!({"output_type": "execute_result", "execution_count": 1, "metadata": {},
           "data": {"text/html": ["<div><table class=\"dataframe\"><tr><td>1</td></tr></table></div>"],
                    "text/plain": ["   a\n0  1"]}})
}

pub fn error_output() -> Value {
    json!({"output_type": "error", "ename": "NameError", "evalue": "x", "traceback": []})
}

pub fn notebook(language: &str, cells: Vec<Value>) -> String {
    let doc = json!({
        "nbformat": 4,
        "nbformat_minor": 5,
        "metadata": {"kernelspec": {"display_name": language, "language": language, "name": language}},
        "cells": cells,
    });
    serde_json::to_string_pretty(&doc).unwrap()
}

/// Versions of a notebook that start as bare code and end as a narrated
/// report with figures and tables.
pub fn explore_to_explain_versions() -> Vec<String> {
    let load = "import pandas as pd\nimport numpy as np\nimport matplotlib.pyplot as plt\ndf = pd.read_csv('data.csv')\n";
    let clean = "df = df.dropna()\ndf['ratio'] = df['a'] / df['b']\nnp.mean(df['ratio'])\n";
    let explore = "for c in df.columns:\n    print(c, df[c].min(), df[c].max())\n";
    let extra: String = (0..12).map(|i| format!("v{i} = df['a'] * {i}\n")).collect();
    let plot = "plt.hist(df['ratio'], bins=30)\nplt.title('ratio')\nplt.show()\n";
    let summary = "df.describe()\n";

    vec![
        notebook("python", vec![
            code(load, vec![]),
            code(clean, vec![stream("0.42\n")]),
            code(explore, vec![stream("a 0 9\n")]),
        ]),
        notebook("python", vec![
            code(load, vec![]),
            code(clean, vec![stream("0.42\n")]),
            code(explore, vec![stream("a 0 9\n")]),
            code(&extra, vec![stream("done\n")]),
        ]),
        notebook("python", vec![
            md("# Ratio study\n"),
            code(load, vec![]),
            code(clean, vec![stream("0.42\n")]),
            code(&extra, vec![stream("done\n")]),
            code(plot, vec![png()]),
        ]),
        notebook("python", vec![
            md("# Ratio study\n\nWe look at how the ratio of a to b is distributed.\n"),
            code(load, vec![]),
            md("## Cleaning\n\nRows with missing values are dropped before computing the ratio.\n"),
            code(clean, vec![stream("0.42\n")]),
            code(plot, vec![png()]),
            code(summary, vec![html_table()]),
        ]),
        notebook("python", vec![
            md("# Ratio study\n\nWe look at how the ratio of a to b is distributed across the sample.\n"),
            code(load, vec![]),
            md("## Cleaning\n\nRows with missing values are dropped before computing the ratio.\n"),
            code(clean, vec![]),
            md("## Distribution\n\nThe histogram below shows a single mode near the mean.\n"),
            code(plot, vec![png()]),
            md("## Summary table\n\nSummary statistics for every column.\n"),
            code(summary, vec![html_table()]),
            md("## Conclusion\n\nThe ratio is stable and centred near 0.42, so the two measures move together.\n"),
        ]),
    ]
}

/// A plain data-science notebook whose size grows with `step`.
pub fn growing_notebook(step: usize) -> String {
    let mut cells = vec![code("import numpy as np\nx = np.arange(10)\n", vec![stream("ok\n")])];
    for i in 0..step {
        let body: String = (0..6).map(|j| format!("y{i}_{j} = np.sum(x) + {j}\n")).collect();
        cells.push(code(&body, vec![stream(&format!("{i}\n"))]));
    }
    notebook("python", cells)
}

/// Builds the three-repository corpus: `passing` meets every criterion with
/// an explore→explain arc, `few` touches its notebook only three times, and
/// `shared` has one commit by a second author.
pub fn build_corpus(root: &Path) -> Vec<PathBuf> {
    let mut passing = FixtureRepo::init(&root.join("passing"));
    passing.commit(&[("README.md", Some("ratio study\n"))], ALICE, "readme");
    for (i, v) in explore_to_explain_versions().iter().enumerate() {
        passing.commit(&[("analysis/ratio.ipynb", Some(v))], ALICE, &format!("notebook v{i}"));
    }
    passing.commit(&[("README.md", Some("ratio study\n\nsee analysis/\n"))], ALICE, "docs");

    let mut few = FixtureRepo::init(&root.join("few"));
    few.commit(&[("nb.ipynb", Some(&growing_notebook(0)))], ALICE, "start");
    few.commit(&[("notes.txt", Some("a\n"))], ALICE, "notes");
    few.commit(&[("nb.ipynb", Some(&growing_notebook(3)))], ALICE, "more");
    few.commit(&[("notes.txt", Some("a\nb\n"))], ALICE, "notes");
    few.commit(&[("nb.ipynb", Some(&growing_notebook(6)))], ALICE, "even more");

    let mut shared = FixtureRepo::init(&root.join("shared"));
    for step in 0..6 {
        let who = if step == 3 { BOB } else { ALICE };
        shared.commit(&[("work.ipynb", Some(&growing_notebook(step)))], who, &format!("step {step}"));
    }

    vec![passing.path, few.path, shared.path]
}

use nbspectrum::notebook::{Cell, CellKind, Notebook, Output, OutputKind};
use rand::Rng;

pub struct NotebookShape {
    pub max_cells: usize,
    pub max_lines: usize,
    pub raw_cells: bool,
    pub odd_outputs: bool,
}

fn random_line<R: Rng>(rng: &mut R) -> String {
    const WORDS: [&str; 8] = ["x", "df", "= 1", "# note", "plot(x)", "\t", "  ", "'#s'"];
    let n = rng.gen_range(0..5);
    (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

/// A random notebook built directly from typed cells.
pub fn random_notebook<R: Rng>(rng: &mut R, shape: &NotebookShape) -> Notebook {
    let mut nb = Notebook::empty("random.ipynb");
    let cells = rng.gen_range(0..=shape.max_cells);
    for _ in 0..cells {
        let kind = match rng.gen_range(0..if shape.raw_cells { 3 } else { 2 }) {
            0 => CellKind::Code,
            1 => CellKind::Markdown,
            _ => CellKind::Raw,
        };
        let lines = (0..rng.gen_range(0..=shape.max_lines)).map(|_| random_line(rng)).collect();
        let outputs = (0..rng.gen_range(0..4))
            .map(|_| {
                let kinds: &[OutputKind] = if shape.odd_outputs {
                    &[OutputKind::Text, OutputKind::Table, OutputKind::Visualization, OutputKind::Error, OutputKind::Other]
                } else {
                    &[OutputKind::Text, OutputKind::Table, OutputKind::Visualization]
                };
                Output { kind: kinds[rng.gen_range(0..kinds.len())], byte_size: 8 }
            })
            .collect();
        nb.cells.push(Cell::new(kind, lines, outputs));
    }
    nb
}
