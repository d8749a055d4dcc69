//! Plain-text result tables and their comma-separated twin.

use std::fmt::Write as _;

use super::{ClassReport, ConfusionMatrix};
use crate::error::{Error, Result};

const NA: &str = "NA";

/// Evaluation output of one trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub label: String,
    pub report: ClassReport,
    pub confusion: ConfusionMatrix,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedReport {
    pub text: String,
    /// Columns: experiment, class, precision, recall, f1, accuracy, loss.
    pub csv: String,
}

/// `value` with `decimals` digits after the point. Rounding is to nearest,
/// ties to even, on the exact binary value.
pub fn format_fixed(value: f64, decimals: usize) -> String {
    format!("{value:.decimals$}")
}

/// `fraction` as a percentage truncated (not rounded) to `decimals` places,
/// e.g. `0.8139534` → `"81.39%"`.
pub fn format_percent(fraction: f64, decimals: usize) -> String {
    let scale = 10f64.powi(decimals as i32);
    // Nudge by a few ulps so values like 0.29 (28.999999...%) truncate as intended.
    let scaled = fraction * 100.0 * scale;
    let truncated = (scaled + scaled.abs() * 4.0 * f64::EPSILON).trunc() / scale;
    format!("{truncated:.decimals$}%")
}

fn score(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |v| format_fixed(v, 2))
}

fn display_name(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn render(&self, out: &mut String) {
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|c| {
                self.rows
                    .iter()
                    .map(|r| r[c].chars().count())
                    .chain([self.headers[c].chars().count()])
                    .max()
                    .unwrap()
            })
            .collect();
        let line = |cells: &[String], out: &mut String| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:<w$}"))
                .collect();
            out.push_str(padded.join(" | ").trim_end());
            out.push('\n');
        };
        line(&self.headers, out);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&rule.join("-+-"));
        out.push('\n');
        for row in &self.rows {
            line(row, out);
        }
    }
}

/// Renders the accuracy/loss table, the per-class precision/recall/F1 table
/// and one confusion matrix per experiment. Classes an experiment does not
/// have are shown as `NA`.
pub fn render_report(results: &[ExperimentResult]) -> Result<RenderedReport> {
    if results.is_empty() {
        return Err(Error::domain("nothing to report"));
    }
    let mut classes: Vec<&str> = Vec::new();
    for r in results {
        for name in &r.report.class_names {
            if !classes.contains(&name.as_str()) {
                classes.push(name);
            }
        }
    }

    let mut text = String::new();
    text.push_str("Test results\n\n");
    let mut summary = Table::new(&["Model", "Test Accuracy", "Test Loss"]);
    for r in results {
        summary.rows.push(vec![
            r.label.clone(),
            format_fixed(r.report.accuracy, 5),
            format_fixed(r.loss, 5),
        ]);
    }
    summary.render(&mut text);

    text.push_str("\nPrecision, recall and F1-score\n\n");
    let mut scores = Table::new(&["Class", "Model", "Precision", "Recall", "F1-Score"]);
    let mut csv = String::from("experiment,class,precision,recall,f1,accuracy,loss\n");
    for class in &classes {
        for r in results {
            let idx = r.report.class_names.iter().position(|n| n == class);
            let (p, rc, f1) = match idx {
                Some(i) => (r.report.precision[i], r.report.recall[i], r.report.f1[i]),
                None => (None, None, None),
            };
            scores.rows.push(vec![
                display_name(class),
                r.label.clone(),
                score(p),
                score(rc),
                score(f1),
            ]);
            let raw = |v: Option<f64>| v.map_or_else(|| NA.to_string(), |v| v.to_string());
            writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                csv_field(&r.label),
                csv_field(class),
                raw(p),
                raw(rc),
                raw(f1),
                r.report.accuracy,
                r.loss
            )
            .unwrap();
        }
    }
    scores.render(&mut text);

    for r in results {
        writeln!(
            text,
            "\nConfusion matrix: {} (rows = true class, columns = predicted)\n",
            r.label
        )
        .unwrap();
        let names = r.confusion.class_names();
        let mut headers = vec![String::new()];
        headers.extend(names.iter().map(|n| display_name(n)));
        let mut table = Table {
            headers,
            rows: Vec::new(),
        };
        for (t, name) in names.iter().enumerate() {
            let mut row = vec![display_name(name)];
            row.extend(r.confusion.row(t).iter().map(u64::to_string));
            table.rows.push(row);
        }
        table.render(&mut text);
    }
    Ok(RenderedReport { text, csv })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
