//! Date-aligned multi-series panels: CSV ingestion, calendar alignment,
//! log returns and chronological splitting.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DATE_FORMAT: &str = "%Y-%m-%d";

/// What the cells of a [`Panel`] hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelKind {
    /// Strictly positive settlement prices.
    Price,
    /// Log returns `ln(P_t / P_{t-1})`.
    LogReturn,
    /// Unconstrained levels (synthetic random walks, spreads).
    Level,
}

impl PanelKind {
    fn label(self) -> &'static str {
        match self {
            PanelKind::Price => "price",
            PanelKind::LogReturn => "log_return",
            PanelKind::Level => "level",
        }
    }
}

/// Rectangular, gap-free table of series observed on common dates.
///
/// Rows are dates (strictly increasing), columns are named series.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    dates: Vec<NaiveDate>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    kind: PanelKind,
}

impl Panel {
    /// Builds a panel from column vectors, validating every invariant.
    pub fn new(
        dates: Vec<NaiveDate>,
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        kind: PanelKind,
    ) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if names.is_empty() {
            return Err(Error::InvalidPanel("panel has no columns".into()));
        }
        if dates.is_empty() {
            return Err(Error::TooFewObservations {
                needed: 1,
                got: dates.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidPanel(format!("duplicate column `{name}`")));
            }
        }
        for (row, pair) in dates.windows(2).enumerate() {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidPanel(format!(
                    "dates not strictly increasing at row {}",
                    row + 1
                )));
            }
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != dates.len() {
                return Err(Error::DimensionMismatch(format!(
                    "column `{name}` has {} values for {} dates",
                    col.len(),
                    dates.len()
                )));
            }
            for (row, &v) in col.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidPanel(format!(
                        "non-finite value at row {row}, column `{name}`"
                    )));
                }
                if kind == PanelKind::Price && v <= 0.0 {
                    return Err(Error::NonPositivePrice {
                        row,
                        column: name.clone(),
                        value: v,
                    });
                }
            }
        }
        Ok(Self {
            dates,
            names,
            columns,
            kind,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kind(&self) -> PanelKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.dates.len()
    }

    pub fn cols(&self) -> usize {
        self.names.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column_by_name(&self, name: &str) -> Result<&[f64]> {
        self.index_of(name)
            .map(|j| self.column(j))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Keeps the named columns, in the order given.
    pub fn select(&self, names: &[String]) -> Result<Panel> {
        let mut columns = Vec::with_capacity(names.len());
        for name in names {
            columns.push(self.column_by_name(name)?.to_vec());
        }
        Panel::new(self.dates.clone(), names.to_vec(), columns, self.kind)
    }

    /// Contiguous row range `[start, end)`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Panel> {
        let end = end.min(self.rows());
        if start >= end {
            return Err(Error::TooFewObservations { needed: 1, got: 0 });
        }
        Panel::new(
            self.dates[start..end].to_vec(),
            self.names.clone(),
            self.columns.iter().map(|c| c[start..end].to_vec()).collect(),
            self.kind,
        )
    }

    /// Writes the panel in the same CSV shape `load_csv` accepts.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (i, date) in self.dates.iter().enumerate() {
            let mut record = vec![date.format(DATE_FORMAT).to_string()];
            record.extend(self.columns.iter().map(|c| c[i].to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Which CSV columns to read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub date_column: String,
    /// Series to keep; `None` keeps every non-date column.
    pub columns: Option<Vec<String>>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            date_column: "date".to_string(),
            columns: None,
        }
    }
}

/// Reads a price panel from a CSV file.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Panel> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file, schema)
}

/// Reads a price panel from any CSV source.
///
/// Rows with an empty cell in a requested column are dropped; a present but
/// non-positive price is an error. Rows are sorted by date.
pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Panel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let date_idx = headers
        .iter()
        .position(|h| *h == schema.date_column)
        .ok_or_else(|| Error::MissingColumn(schema.date_column.clone()))?;
    let names: Vec<String> = match &schema.columns {
        Some(cols) => cols.clone(),
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != date_idx)
            .map(|(_, h)| h.clone())
            .collect(),
    };
    if names.is_empty() {
        return Err(Error::InvalidPanel("no numeric columns".into()));
    }
    let col_idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| Error::MissingColumn(n.clone()))
        })
        .collect::<Result<_>>()?;

    let mut rows: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        // header is line 1 of the file
        let row = line + 2;
        let raw_date = record.get(date_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, DATE_FORMAT).map_err(|_| {
            Error::UnparsableDate {
                row,
                value: raw_date.to_string(),
            }
        })?;
        let mut values = Vec::with_capacity(col_idx.len());
        let mut complete = true;
        for (name, &ci) in names.iter().zip(&col_idx) {
            let cell = record.get(ci).unwrap_or("");
            if cell.is_empty() {
                complete = false;
                break;
            }
            let v: f64 = cell.parse().map_err(|_| Error::UnparsableNumber {
                row,
                column: name.clone(),
                value: cell.to_string(),
            })?;
            if !(v > 0.0) {
                return Err(Error::NonPositivePrice {
                    row,
                    column: name.clone(),
                    value: v,
                });
            }
            values.push(v);
        }
        if rows.contains_key(&date) {
            return Err(Error::DuplicateDate {
                row,
                date: raw_date.to_string(),
            });
        }
        if complete {
            rows.insert(date, values);
        }
    }

    let dates: Vec<NaiveDate> = rows.keys().copied().collect();
    let mut columns = vec![Vec::with_capacity(dates.len()); names.len()];
    for values in rows.values() {
        for (col, v) in columns.iter_mut().zip(values) {
            col.push(*v);
        }
    }
    Panel::new(dates, names, columns, PanelKind::Price)
}

/// Inner join of panels on their dates; columns are concatenated in input order.
pub fn align(panels: &[Panel]) -> Result<Panel> {
    if panels.len() < 2 {
        return Err(Error::InvalidPanel("align needs at least two panels".into()));
    }
    let kind = panels[0].kind;
    if let Some(p) = panels.iter().find(|p| p.kind != kind) {
        return Err(Error::KindMismatch {
            expected: kind.label().into(),
            found: p.kind.label().into(),
        });
    }
    let mut common: Vec<NaiveDate> = panels[0].dates.clone();
    for p in &panels[1..] {
        let other: HashSet<&NaiveDate> = p.dates.iter().collect();
        common.retain(|d| other.contains(d));
    }
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for p in panels {
        let lookup: BTreeMap<&NaiveDate, usize> =
            p.dates.iter().enumerate().map(|(i, d)| (d, i)).collect();
        let idx: Vec<usize> = common.iter().map(|d| lookup[d]).collect();
        for (name, col) in p.names.iter().zip(&p.columns) {
            names.push(name.clone());
            columns.push(idx.iter().map(|&i| col[i]).collect());
        }
    }
    Panel::new(common, names, columns, kind)
}

/// `r_t = ln(P_t / P_{t-1})` per column; the first date is dropped.
pub fn log_returns(panel: &Panel) -> Result<Panel> {
    if panel.kind != PanelKind::Price {
        return Err(Error::KindMismatch {
            expected: PanelKind::Price.label().into(),
            found: panel.kind.label().into(),
        });
    }
    if panel.rows() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: panel.rows(),
        });
    }
    let columns = panel
        .columns
        .iter()
        .map(|c| c.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
        .collect();
    Panel::new(
        panel.dates[1..].to_vec(),
        panel.names.clone(),
        columns,
        PanelKind::LogReturn,
    )
}

/// Number of training rows for a chronological split.
pub fn split_point(rows: usize, train_fraction: f64) -> Result<usize> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::DegenerateSplit {
            rows,
            fraction: train_fraction,
        });
    }
    let train = (train_fraction * rows as f64).floor() as usize;
    if train == 0 || train >= rows {
        return Err(Error::DegenerateSplit {
            rows,
            fraction: train_fraction,
        });
    }
    Ok(train)
}

/// Chronological split into `(train, test)`; train gets `floor(fraction * n)` rows.
pub fn train_test_split(panel: &Panel, train_fraction: f64) -> Result<(Panel, Panel)> {
    let n = panel.rows();
    let train = split_point(n, train_fraction)?;
    let side = |start, end| {
        panel.slice_rows(start, end).map_err(|_| Error::DegenerateSplit {
            rows: n,
            fraction: train_fraction,
        })
    };
    Ok((side(0, train)?, side(train, n)?))
}
