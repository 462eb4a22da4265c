//! Artifact record shapes and the CSV + JSON writer.
//!
//! Every artifact is written twice, `<name>.csv` and `<name>.json`, from the
//! same in-memory value. Floats use the shortest representation that parses
//! back to the identical `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use linkage::report::LabeledMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub series: String,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// Excess kurtosis.
    pub kurtosis: f64,
    pub jb_reject: bool,
    pub adf_p: f64,
    pub weak_stationary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRow {
    pub series: String,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub iqr: f64,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub n_outliers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub variable: String,
    pub coefficient: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsSummaryRow {
    pub target: String,
    pub n: usize,
    pub k: usize,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_statistic: Option<f64>,
    pub f_p_value: Option<f64>,
    pub durbin_watson: Option<f64>,
    pub residual_jb_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarCoefficientRow {
    pub equation: String,
    pub regressor: String,
    pub coefficient: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootRow {
    pub root: usize,
    pub modulus: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfRow {
    pub horizon: usize,
    pub shock: String,
    pub response: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    pub date: String,
    pub series: String,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgarchParamRow {
    pub series: String,
    pub mu: f64,
    pub omega: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    /// Student-t degrees of freedom; empty for Gaussian innovations.
    pub nu: Option<f64>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub date: String,
    /// `series_i/series_j`.
    pub pair: String,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCorrelationRow {
    pub rank: usize,
    pub series_i: String,
    pub series_j: String,
    pub mean_rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DccParamRow {
    pub alpha: f64,
    pub beta: f64,
    pub loglik_correlation_part: f64,
    pub joint_loglik: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Output directory plus the list of files written so far.
pub struct ArtifactWriter {
    dir: PathBuf,
    written: Vec<String>,
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime {
        kind: "io".into(),
        message: format!("{}: {e}", path.display()),
    }
}

impl ArtifactWriter {
    /// Creates the directory; failure is a config error.
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Config {
            kind: "unwritable_output".into(),
            message: format!("cannot create output directory {}: {e}", dir.display()),
            column: None,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// File names written so far, sorted.
    pub fn written(&self) -> Vec<String> {
        let mut names = self.written.clone();
        names.sort();
        names
    }

    fn file(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> Result<(), CliError>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush().map_err(|e| io_error(&path, e))?;
        if !self.written.iter().any(|n| n == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn raw(&mut self, file_name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(file_name);
        self.file(file_name, |w| w.write_all(bytes).map_err(|e| io_error(&path, e)))
    }

    pub fn json<T: Serialize>(&mut self, file_name: &str, value: &T) -> Result<(), CliError> {
        self.file(file_name, |w| Ok(linkage::report::write_json(w, value)?))
    }

    /// `<name>.csv` with one row per record and `<name>.json` as an array.
    pub fn records<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let csv_name = format!("{name}.csv");
        let path = self.dir.join(&csv_name);
        self.file(&csv_name, |w| {
            let mut c = csv::Writer::from_writer(w);
            for row in rows {
                c.serialize(row).map_err(|e| io_error(&path, e))?;
            }
            c.flush().map_err(|e| io_error(&path, e))
        })?;
        self.json(&format!("{name}.json"), &rows)
    }

    /// `<name>.csv` as a labeled grid; `<name>.json` holds `detail`.
    pub fn matrix<T: Serialize>(&mut self, name: &str, matrix: &LabeledMatrix, detail: &T) -> Result<(), CliError> {
        self.file(&format!("{name}.csv"), |w| Ok(matrix.write_csv(w)?))?;
        self.json(&format!("{name}.json"), detail)
    }
}

/// Reads back a records CSV written by [`ArtifactWriter::records`].
pub fn read_records<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io_error(path, e))?;
    rdr.deserialize().map(|r| r.map_err(|e| io_error(path, e))).collect()
}
