//! Price and weight CSV files.
//!
//! Price files are wide: a `date` column in `YYYY-MM-DD` form followed by
//! one column of positive prices per asset, dates increasing. An empty cell
//! (or `NA`) marks a missing quote; that date is then dropped for every
//! selected asset. Weight files have the header `asset,weight`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use riskpipe_core::timeseries::{align, PriceSeries, PriceTable, ReturnPanel};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PriceFile {
    pub dates: Vec<NaiveDate>,
    pub columns: Vec<String>,
    /// cells[j][i]: column j on date i.
    pub cells: Vec<Vec<Option<f64>>>,
}

/// Aligned prices and their log-return panel.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub table: PriceTable,
    pub panel: ReturnPanel,
    pub dropped_dates: Vec<NaiveDate>,
}

impl Ingested {
    pub fn dropped_rows(&self) -> usize {
        self.dropped_dates.len()
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| PipelineError::io(path, e))
}

fn parse_err(row: usize, col: usize, message: impl Into<String>) -> PipelineError {
    PipelineError::Parse { row, col, message: message.into() }
}

fn csv_err(e: csv::Error) -> PipelineError {
    let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
    parse_err(row, 0, e.to_string())
}

/// Reads a wide price CSV. Rows and columns in errors are 1-based file
/// positions (the header is row 1).
pub fn read_prices<R: Read>(reader: R) -> Result<PriceFile> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(PipelineError::Schema("empty file: expected a header `date,<asset>...`".into()));
    }
    if !header[0].eq_ignore_ascii_case("date") {
        return Err(PipelineError::Schema(format!("first column must be `date`, found `{}`", &header[0])));
    }
    if header.len() < 2 {
        return Err(PipelineError::Schema("no price columns".into()));
    }
    let columns: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut dates = Vec::new();
    let mut cells = vec![Vec::new(); columns.len()];
    for (k, record) in rdr.records().enumerate() {
        let row = k + 2;
        let record = record.map_err(csv_err)?;
        if record.len() != header.len() {
            return Err(parse_err(row, record.len() + 1, format!("expected {} fields", header.len())));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| parse_err(row, 1, format!("bad date `{}`: {e}", &record[0])))?;
        dates.push(date);
        for (j, cell) in record.iter().skip(1).enumerate() {
            let value = if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
                None
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| parse_err(row, j + 2, format!("not a number: `{cell}`")))?;
                if v <= 0.0 || !v.is_finite() {
                    return Err(parse_err(row, j + 2, format!("price must be positive, got {v}")));
                }
                Some(v)
            };
            cells[j].push(value);
        }
    }
    if dates.is_empty() {
        return Err(PipelineError::Schema("no data rows".into()));
    }
    Ok(PriceFile { dates, columns, cells })
}

impl PriceFile {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| PipelineError::Schema(format!("missing column `{name}`")))
    }

    /// One price series per requested column, missing cells skipped.
    pub fn series(&self, name: &str) -> Result<PriceSeries> {
        let j = self.column_index(name)?;
        let (dates, values): (Vec<_>, Vec<_>) = self
            .dates
            .iter()
            .zip(&self.cells[j])
            .filter_map(|(d, v)| v.map(|v| (*d, v)))
            .unzip();
        Ok(PriceSeries::new(dates, values)?)
    }

    /// Aligns the requested columns (all when empty) and takes log-returns.
    pub fn select(&self, columns: &[String]) -> Result<Ingested> {
        let names: Vec<String> = if columns.is_empty() { self.columns.clone() } else { columns.to_vec() };
        let series = names
            .iter()
            .map(|n| Ok((n.clone(), self.series(n)?)))
            .collect::<Result<Vec<_>>>()?;
        let alignment = align(&series)?;
        let panel = alignment.table.log_return_panel()?;
        Ok(Ingested { table: alignment.table, panel, dropped_dates: alignment.dropped_dates })
    }
}

/// Reads `path` and returns the aligned log-return panel of `columns`.
pub fn ingest(path: &Path, columns: &[String]) -> Result<Ingested> {
    read_prices(open(path)?)?.select(columns)
}

pub fn read_prices_path(path: &Path) -> Result<PriceFile> {
    read_prices(open(path)?)
}

/// Reads `asset,weight` rows.
pub fn read_weights<R: Read>(reader: R) -> Result<Vec<(String, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.len() != 2 || &header[0] != "asset" || &header[1] != "weight" {
        return Err(PipelineError::Schema("weights file needs the header `asset,weight`".into()));
    }
    let mut out = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let w: f64 = record[1]
            .parse()
            .map_err(|_| parse_err(k + 2, 2, format!("not a number: `{}`", &record[1])))?;
        out.push((record[0].to_owned(), w));
    }
    if out.is_empty() {
        return Err(PipelineError::Schema("weights file has no rows".into()));
    }
    Ok(out)
}

pub fn read_weights_path(path: &Path) -> Result<Vec<(String, f64)>> {
    read_weights(open(path)?)
}

/// Orders `weights` to match `assets`; every asset must be listed once.
pub fn weights_for(assets: &[String], weights: &[(String, f64)]) -> Result<Vec<f64>> {
    assets
        .iter()
        .map(|a| {
            let mut hits = weights.iter().filter(|(n, _)| n == a);
            match (hits.next(), hits.next()) {
                (Some((_, w)), None) => Ok(*w),
                (None, _) => Err(PipelineError::Schema(format!("no weight for asset `{a}`"))),
                (Some(_), Some(_)) => Err(PipelineError::Schema(format!("asset `{a}` listed twice"))),
            }
        })
        .collect()
}

/// Writes a panel as `date,<asset>...` CSV.
pub fn write_panel_csv<W: Write>(panel: &ReturnPanel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date".to_owned()];
    header.extend(panel.assets().iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (i, d) in panel.dates().iter().enumerate() {
        let mut row = vec![d.format("%Y-%m-%d").to_string()];
        row.extend(panel.matrix().row(i).iter().map(|v| format!("{v:e}")));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| PipelineError::io("<output>", e))
}
