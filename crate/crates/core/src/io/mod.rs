//! Case files, plan files, inflow histories and report bundles.

mod case_file;
mod plan_file;
mod reports;

pub use case_file::{case_to_toml, inflow_to_toml, load_case, parse_case, CASE_SCHEMA};
pub use plan_file::{load_plan, parse_history, parse_plan, plan_to_toml, read_history, PLAN_SCHEMA};
pub use reports::{
    capacity_table, circuit_table, convergence_table, dispatch_table, marginal_cost_table, plan_table, summary_toml,
    timing_table, write_reports, ReportBundle, Table, SUMMARY_SCHEMA,
};

use std::fmt;

use thiserror::Error;

/// One problem found in an input file.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    /// 1-based line of the closest matching key or table header.
    pub line: Option<usize>,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.path, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error{}: {message}", fmt_pos(*.line, *.column))]
    Parse {
        line: Option<usize>,
        column: Option<usize>,
        message: String,
    },
    #[error("unsupported schema `{found}`, expected `{expected}`")]
    Schema { expected: &'static str, found: String },
    #[error("{}", fmt_diags(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn fmt_pos(line: Option<usize>, column: Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!(" at line {l}, column {c}"),
        (Some(l), None) => format!(" at line {l}"),
        _ => String::new(),
    }
}

fn fmt_diags(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

impl IoError {
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            IoError::Invalid(d) => d.clone(),
            IoError::Parse { line, message, .. } => vec![Diagnostic {
                line: *line,
                path: String::new(),
                message: message.clone(),
            }],
            other => vec![Diagnostic {
                line: None,
                path: String::new(),
                message: other.to_string(),
            }],
        }
    }
}

/// 1-based line and column of a byte offset.
pub(crate) fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, col)
}

/// Best-effort line of a validation path such as `circuit[2].rating` or
/// `horizon.blocks`: the key inside the matching table, else the table header.
pub(crate) fn locate(text: &str, path: &str) -> Option<usize> {
    let mut parts = path.split('.');
    let head = parts.next()?;
    let key = parts.next().map(|k| k.split('[').next().unwrap_or(k));
    let (table, index) = match head.split_once('[') {
        Some((name, rest)) => (name, rest.trim_end_matches(']').parse::<usize>().ok()),
        None => (head, None),
    };
    let lines: Vec<&str> = text.lines().collect();
    let header_array = format!("[[{table}]]");
    let header = format!("[{table}]");
    let start = match index {
        Some(i) => lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.trim() == header_array)
            .nth(i)
            .map(|(n, _)| n),
        None => lines
            .iter()
            .position(|l| l.trim() == header)
            .or_else(|| lines.iter().position(|l| l.trim() == header_array)),
    }?;
    if let Some(key) = key {
        for (n, l) in lines.iter().enumerate().skip(start + 1) {
            let t = l.trim();
            if t.starts_with('[') {
                break;
            }
            if t.split('=').next().is_some_and(|k| k.trim() == key) {
                return Some(n + 1);
            }
        }
    }
    Some(start + 1)
}
