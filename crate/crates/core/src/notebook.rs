//! Typed view of an nbformat-4 document.
//!
//! Only the parts that matter for counting are kept: cell kinds, source
//! lines, comment counts and a coarse category for each code-cell output.

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NotebookError {
    #[error("malformed JSON: {0}")]
    MalformedJson(#[from] serde_json::Error),
    #[error("unsupported nbformat version {0}")]
    UnsupportedFormat(i64),
    #[error("document has no `cells` array")]
    NotANotebook,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Code,
    Markdown,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    Text,
    Table,
    Visualization,
    Error,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Output {
    pub kind: OutputKind,
    pub byte_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub kind: CellKind,
    pub source_lines: Vec<String>,
    pub outputs: Vec<Output>,
    pub comment_count: usize,
}

impl Cell {
    /// Builds a cell from already-split lines. Outputs are dropped for
    /// non-code cells and comments are counted for code cells.
    pub fn new(kind: CellKind, source_lines: Vec<String>, outputs: Vec<Output>) -> Self {
        let (outputs, comment_count) = match kind {
            CellKind::Code => {
                let comments = count_comments(&source_lines);
                (outputs, comments)
            }
            _ => (Vec::new(), 0),
        };
        Cell {
            kind,
            source_lines,
            outputs,
            comment_count,
        }
    }

    /// Source text with lines joined by `\n`.
    pub fn source(&self) -> String {
        self.source_lines.join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Notebook {
    pub path: String,
    pub kernel_language: String,
    pub cells: Vec<Cell>,
    pub format_version: (i64, i64),
}

impl Notebook {
    pub fn empty(path: impl Into<String>) -> Self {
        Notebook {
            path: path.into(),
            kernel_language: "unknown".to_string(),
            cells: Vec::new(),
            format_version: (4, 5),
        }
    }
}

/// Parses raw nbformat JSON bytes.
pub fn parse_notebook(raw_json: &[u8], path: &str) -> Result<Notebook, NotebookError> {
    let doc: Value = serde_json::from_slice(raw_json)?;
    let obj = doc.as_object().ok_or(NotebookError::NotANotebook)?;

    let major = obj.get("nbformat").and_then(Value::as_i64).unwrap_or(0);
    if major != 4 {
        return Err(NotebookError::UnsupportedFormat(major));
    }
    let minor = obj
        .get("nbformat_minor")
        .and_then(Value::as_i64)
        .unwrap_or(0);

    let raw_cells = obj
        .get("cells")
        .and_then(Value::as_array)
        .ok_or(NotebookError::NotANotebook)?;

    let cells = raw_cells.iter().map(parse_cell).collect();

    Ok(Notebook {
        path: path.to_string(),
        kernel_language: kernel_language(obj.get("metadata")),
        cells,
        format_version: (major, minor),
    })
}

fn kernel_language(metadata: Option<&Value>) -> String {
    let Some(kernelspec) = metadata.and_then(|m| m.get("kernelspec")) else {
        return "unknown".to_string();
    };
    kernelspec
        .get("language")
        .and_then(Value::as_str)
        .or_else(|| {
            metadata
                .and_then(|m| m.get("language_info"))
                .and_then(|li| li.get("name"))
                .and_then(Value::as_str)
        })
        .map(str::to_lowercase)
        .unwrap_or_else(|| "unknown".to_string())
}

fn parse_cell(raw: &Value) -> Cell {
    let kind = match raw.get("cell_type").and_then(Value::as_str) {
        Some("code") => CellKind::Code,
        Some("markdown") => CellKind::Markdown,
        _ => CellKind::Raw,
    };
    let source_lines = split_source(raw.get("source"));
    let outputs = raw
        .get("outputs")
        .and_then(Value::as_array)
        .map(|outs| outs.iter().map(classify_output).collect())
        .unwrap_or_default();
    Cell::new(kind, source_lines, outputs)
}

/// Normalizes nbformat's two source representations (a string, or a list of
/// strings each carrying its own terminator) into newline-free lines.
fn split_source(source: Option<&Value>) -> Vec<String> {
    let text = match source {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Array(parts)) => parts.iter().filter_map(Value::as_str).collect(),
        _ => String::new(),
    };
    split_lines(&text)
}

/// Splits on `\n`, dropping the empty segment after a terminal newline.
pub fn split_lines(text: &str) -> Vec<String> {
    if text.is_empty() {
        return Vec::new();
    }
    let body = text.strip_suffix('\n').unwrap_or(text);
    body.split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_string())
        .collect()
}

/// Assigns an nbformat output object to exactly one category.
///
/// Precedence: image or plotly payload, then an HTML table, then plain
/// text or a stream, then error, then other.
pub fn classify_output(raw_output: &Value) -> Output {
    let byte_size = serde_json::to_vec(raw_output).map(|v| v.len()).unwrap_or(0);
    let output_type = raw_output.get("output_type").and_then(Value::as_str);
    let bundle = raw_output.get("data").and_then(Value::as_object);

    let kind = if bundle.is_some_and(has_visual_mime) {
        OutputKind::Visualization
    } else if bundle.is_some_and(has_html_table) {
        OutputKind::Table
    } else if bundle.is_some_and(|b| b.contains_key("text/plain")) || output_type == Some("stream")
    {
        OutputKind::Text
    } else if output_type == Some("error") {
        OutputKind::Error
    } else {
        OutputKind::Other
    };

    Output { kind, byte_size }
}

fn has_visual_mime(bundle: &Map<String, Value>) -> bool {
    bundle
        .keys()
        .any(|k| k.starts_with("image/") || k.starts_with("application/vnd.plotly"))
}

fn has_html_table(bundle: &Map<String, Value>) -> bool {
    let Some(html) = bundle.get("text/html") else {
        return false;
    };
    let text = match html {
        Value::String(s) => s.to_ascii_lowercase(),
        Value::Array(parts) => parts
            .iter()
            .filter_map(Value::as_str)
            .collect::<String>()
            .to_ascii_lowercase(),
        _ => return false,
    };
    text.contains("<table")
}

/// Counts lines holding a `#` outside quoted string literals. Each line
/// contributes at most one.
pub fn count_comments<S: AsRef<str>>(source_lines: &[S]) -> usize {
    source_lines
        .iter()
        .filter(|l| comment_start(l.as_ref()).is_some())
        .count()
}

/// Byte offset of the first `#` that is not inside a `'` or `"` literal.
pub(crate) fn comment_start(line: &str) -> Option<usize> {
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, ch) in line.char_indices() {
        if escaped {
            escaped = false;
            continue;
        }
        match (quote, ch) {
            (Some(_), '\\') => escaped = true,
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, '\'' | '"') => quote = Some(ch),
            (None, '#') => return Some(i),
            (None, _) => {}
        }
    }
    None
}
