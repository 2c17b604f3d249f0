//! CSV and Markdown report emission.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;

pub const CSV_HEADER: [&str; 7] = ["config", "method", "price", "stderr", "iv", "rel_err", "published"];

/// One method's value for one configuration.
///
/// `rel_err` is |price − MC| / MC against the engine's own MC price. Rows
/// whose `config` starts with `average` carry only an averaged `rel_err`
/// and, where available, the published average in `published`. Relative
/// errors are fractions, not percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub config: String,
    pub method: String,
    pub price: Option<f64>,
    pub stderr: Option<f64>,
    pub iv: Option<f64>,
    pub rel_err: Option<f64>,
    pub published: Option<f64>,
}

impl ReportRow {
    pub fn empty(config: impl Into<String>, method: impl Into<String>) -> Self {
        Self {
            config: config.into(),
            method: method.into(),
            price: None,
            stderr: None,
            iv: None,
            rel_err: None,
            published: None,
        }
    }

    pub fn is_average(&self) -> bool {
        self.config.starts_with("average")
    }
}

/// Renders rows in the requested format. `preamble` lines go above the
/// Markdown table and are ignored for CSV.
pub fn emit_report(rows: &[ReportRow], format: OutputFormat, preamble: &[String]) -> String {
    match format {
        OutputFormat::Csv => to_csv(rows),
        OutputFormat::Markdown => to_markdown(rows, preamble),
    }
}

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

pub fn parse_csv_report(text: &str) -> Result<Vec<ReportRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

fn fmt_opt(x: Option<f64>, digits: usize) -> String {
    x.map(|v| format!("{v:.digits$}")).unwrap_or_else(|| "n/a".into())
}

/// Markdown pivot: one line per config, one column per method, each cell
/// showing the engine value with the published value in brackets. Average
/// rows follow as relative errors in percent.
pub fn to_markdown(rows: &[ReportRow], preamble: &[String]) -> String {
    let mut methods: Vec<&str> = Vec::new();
    let mut configs: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
        if !r.is_average() && !configs.contains(&r.config.as_str()) {
            configs.push(&r.config);
        }
    }
    let mut out = String::new();
    for line in preamble {
        let _ = writeln!(out, "{line}");
    }
    if !preamble.is_empty() {
        out.push('\n');
    }
    let _ = writeln!(out, "| config | {} |", methods.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(methods.len()));
    let find = |c: &str, m: &str| rows.iter().find(|r| r.config == c && r.method == m);
    for c in &configs {
        let cells: Vec<String> = methods
            .iter()
            .map(|m| match find(c, m) {
                None => String::new(),
                Some(r) => {
                    let mut s = fmt_opt(r.price, 4);
                    if let Some(se) = r.stderr {
                        let _ = write!(s, " ± {se:.4}");
                    }
                    if let Some(p) = r.published {
                        let _ = write!(s, " [{p:.2}]");
                    }
                    s
                }
            })
            .collect();
        let _ = writeln!(out, "| {c} | {} |", cells.join(" | "));
    }
    let mut average_labels: Vec<&str> = Vec::new();
    for r in rows.iter().filter(|r| r.is_average()) {
        if !average_labels.contains(&r.config.as_str()) {
            average_labels.push(&r.config);
        }
    }
    for label in average_labels {
        let cells: Vec<String> = methods
            .iter()
            .map(|m| match find(label, m) {
                None => String::new(),
                Some(r) => {
                    let mut s = fmt_opt(r.rel_err.map(|e| 100.0 * e), 2);
                    s.push('%');
                    if let Some(p) = r.published {
                        let _ = write!(s, " [{:.1}%]", 100.0 * p);
                    }
                    s
                }
            })
            .collect();
        let _ = writeln!(out, "| {label} | {} |", cells.join(" | "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ReportRow {
        ReportRow {
            config: "base, T=1".into(),
            method: "lba".into(),
            price: Some(7.371_234_567_890_123),
            stderr: None,
            iv: Some(0.214),
            rel_err: Some(0.0028),
            published: Some(7.37),
        }
    }

    #[test]
    fn empty_is_header_only() {
        assert_eq!(to_csv(&[]), "config,method,price,stderr,iv,rel_err,published\n");
        assert!(parse_csv_report(&to_csv(&[])).unwrap().is_empty());
    }

    #[test]
    fn one_row_two_lines_with_quoting() {
        let text = to_csv(&[row()]);
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("\"base, T=1\",lba,7.371234567890123,,"));
        assert_eq!(parse_csv_report(&text).unwrap(), vec![row()]);
    }

    #[test]
    fn markdown_pivot() {
        let mut avg = ReportRow::empty("average", "lba");
        avg.rel_err = Some(0.004);
        avg.published = Some(0.004);
        let md = to_markdown(&[row(), avg], &["settings".into()]);
        assert!(md.starts_with("settings\n\n| config | lba |"));
        assert!(md.contains("| base, T=1 | 7.3712 [7.37] |"));
        assert!(md.contains("| average | 0.40% [0.4%] |"));
    }
}
