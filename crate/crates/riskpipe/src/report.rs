//! Report emission in JSON, CSV and Markdown.
//!
//! JSON uses shortest round-trip float formatting, so identical reports
//! serialize to identical bytes.

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::compare::{scheme_label, ComparisonReport};
use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(PipelineError::Config(format!("unknown format `{other}`"))),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn level_tag(a: f64) -> String {
    format!("{a}")
}

/// One CSV row per scheme and segment.
pub fn comparison_csv(report: &ComparisonReport) -> String {
    let levels = &report.config.var_levels;
    let mut out = String::from("scheme,segment,n,volatility,volatility_annualized");
    for a in levels {
        let t = level_tag(*a);
        let _ = write!(out, ",var_{t},es_{t}");
    }
    out.push('\n');
    for r in &report.rows {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            scheme_label(r.scheme),
            r.segment.label(),
            r.n,
            r.volatility,
            r.volatility_annualized
        );
        for t in &r.tail {
            let _ = write!(out, ",{},{}", t.var_alpha, t.es_alpha);
        }
        out.push('\n');
    }
    out
}

/// Volatility table (schemes × segments) followed by one VaR (ES) table.
pub fn comparison_markdown(report: &ComparisonReport) -> String {
    let schemes: Vec<_> = report.weights.iter().map(|w| w.scheme).collect();
    let mut out = String::new();
    let m = &report.metadata;
    let _ = writeln!(
        out,
        "# Portfolio comparison\n\nBefore: {} up to, not including, {} ({} returns). During: from {} on ({} returns).\n",
        m.first_date, m.event_date, m.n_before, m.event_date, m.n_during
    );
    out.push_str("## Volatility (annualized, per-period in brackets)\n\n");
    out.push_str("| Portfolio | Before | During |\n|---|---|---|\n");
    for s in &schemes {
        let cell = |seg| {
            report
                .row(*s, seg)
                .map(|r| format!("{:.4} ({:.6})", r.volatility_annualized, r.volatility))
                .unwrap_or_default()
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} |",
            scheme_label(*s),
            cell(crate::compare::Segment::Before),
            cell(crate::compare::Segment::During)
        );
    }
    for (k, a) in report.config.var_levels.iter().enumerate() {
        let _ = writeln!(out, "\n## VaR (ES) at level {a}\n");
        out.push_str("| Portfolio | Before | During |\n|---|---|---|\n");
        for s in &schemes {
            let cell = |seg| {
                report
                    .row(*s, seg)
                    .map(|r| format!("{:.6} ({:.6})", r.tail[k].var_alpha, r.tail[k].es_alpha))
                    .unwrap_or_default()
            };
            let _ = writeln!(
                out,
                "| {} | {} | {} |",
                scheme_label(*s),
                cell(crate::compare::Segment::Before),
                cell(crate::compare::Segment::During)
            );
        }
    }
    out
}

pub fn render_comparison(report: &ComparisonReport, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(report),
        Format::Csv => Ok(comparison_csv(report)),
        Format::Markdown => Ok(comparison_markdown(report)),
    }
}

/// Flattens any serializable value to `path,value` pairs, for the commands
/// whose output is not tabular.
pub fn flatten<T: Serialize>(value: &T) -> Result<Vec<(String, String)>> {
    fn walk(prefix: &str, v: &serde_json::Value, out: &mut Vec<(String, String)>) {
        let join = |k: &str| if prefix.is_empty() { k.to_owned() } else { format!("{prefix}.{k}") };
        match v {
            serde_json::Value::Object(map) => {
                for (k, v) in map {
                    walk(&join(k), v, out);
                }
            }
            serde_json::Value::Array(items) => {
                for (i, v) in items.iter().enumerate() {
                    walk(&join(&i.to_string()), v, out);
                }
            }
            serde_json::Value::String(s) => out.push((prefix.to_owned(), s.clone())),
            serde_json::Value::Null => out.push((prefix.to_owned(), String::new())),
            other => out.push((prefix.to_owned(), other.to_string())),
        }
    }
    let mut out = Vec::new();
    walk("", &serde_json::to_value(value)?, &mut out);
    Ok(out)
}

pub fn render_value<T: Serialize>(value: &T, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(value),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["field", "value"]).expect("in-memory write");
            for (k, v) in flatten(value)? {
                w.write_record([k, v]).expect("in-memory write");
            }
            Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8"))
        }
        Format::Markdown => {
            let mut out = String::from("| field | value |\n|---|---|\n");
            for (k, v) in flatten(value)? {
                let _ = writeln!(out, "| {k} | {v} |");
            }
            Ok(out)
        }
    }
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(text: &str, path: Option<&std::path::Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| PipelineError::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| PipelineError::io("<stdout>", e)),
    }
}

/// Renders a comparison report and writes it.
pub fn emit_report(report: &ComparisonReport, format: Format, path: Option<&std::path::Path>) -> Result<()> {
    emit(&render_comparison(report, format)?, path)
}
