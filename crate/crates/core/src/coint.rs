//! Pairwise Engle-Granger cointegration and Granger-causality p-value
//! matrices.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::adf::{adf_statistic, AdfLags, AdfSpec};
use crate::error::{Error, Result};
use crate::mackinnon::{mackinnon_p, Surface, TABLE_VERSION};
use crate::ols::least_squares;
use crate::panel::Panel;
use crate::report::LabeledMatrix;
use crate::stats::{check_finite, TestReport};

/// How to read an entry of a [`PairMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Entry `(i, j)` tests whether row series `i` Granger-causes column series `j`.
    RowCausesColumn,
    /// Entry `(i, j) = (j, i)` tests the unordered pair.
    UnorderedPair,
}

/// P-values for every ordered or unordered pair; the diagonal is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMatrix {
    pub names: Vec<String>,
    pub p_values: LabeledMatrix,
    pub direction: Direction,
    /// Free-form notes, e.g. the dependent-variable convention.
    pub notes: Vec<String>,
}

impl PairMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.p_values.get(i, j)
    }
}

/// Two-step Engle-Granger test with `y` as the dependent variable.
pub fn engle_granger(y: &[f64], x: &[f64]) -> Result<TestReport> {
    engle_granger_with(y, x, AdfLags::Auto)
}

/// Engle-Granger with an explicit lag rule for the residual ADF.
///
/// Step one regresses `y` on a constant and `x`; step two runs an ADF
/// without deterministic terms on the residuals and reads the p-value off
/// the two-variable constant surface.
pub fn engle_granger_with(y: &[f64], x: &[f64], lags: AdfLags) -> Result<TestReport> {
    if y.len() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "series lengths {} and {}",
            y.len(),
            x.len()
        )));
    }
    if y.len() < 50 {
        return Err(Error::TooFewObservations {
            needed: 50,
            got: y.len(),
        });
    }
    check_finite(y)?;
    check_finite(x)?;
    let ones = vec![1.0; y.len()];
    let step1 = least_squares(y, &[&ones, x]).map_err(|e| match e {
        Error::RankDeficient(_) => Error::SingularRegression,
        other => other,
    })?;
    let (stat, used) = adf_statistic(&step1.residuals, AdfSpec::NoConstant, lags)?;
    let p = mackinnon_p(stat, Surface::Constant, 2);
    Ok(TestReport::new("engle_granger", stat, p)
        .with("adf_lags", used)
        .with("beta", step1.coefficients[1])
        .with("table", TABLE_VERSION))
}

/// Options for [`coint_matrix_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CointOptions {
    pub lags: AdfLags,
    /// Test both dependent-variable choices and keep the smaller p-value.
    pub both_directions: bool,
}

impl Default for CointOptions {
    fn default() -> Self {
        Self {
            lags: AdfLags::Auto,
            both_directions: false,
        }
    }
}

/// Symmetric Engle-Granger p-value matrix; the lower-index series is the
/// dependent variable.
pub fn coint_matrix(panel: &Panel) -> Result<PairMatrix> {
    coint_matrix_with(panel, CointOptions::default())
}

pub fn coint_matrix_with(panel: &Panel, opts: CointOptions) -> Result<PairMatrix> {
    let k = panel.cols();
    if k < 2 {
        return Err(Error::InvalidPanel("need at least two series".into()));
    }
    let mut values = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let mut p = engle_granger_with(panel.column(i), panel.column(j), opts.lags)?.p_value;
            if opts.both_directions {
                let q = engle_granger_with(panel.column(j), panel.column(i), opts.lags)?.p_value;
                p = p.min(q);
            }
            values[i][j] = Some(p);
            values[j][i] = Some(p);
        }
    }
    let note = if opts.both_directions {
        "minimum p-value over both dependent-variable choices; not a size-corrected test"
    } else {
        "dependent variable is the lower-index series of each pair"
    };
    Ok(PairMatrix {
        names: panel.names().to_vec(),
        p_values: LabeledMatrix::square(panel.names().to_vec(), values),
        direction: Direction::UnorderedPair,
        notes: vec![note.to_string()],
    })
}

/// Granger F-test: do `lags` lags of `cause` improve an autoregression of
/// `effect` (with intercept)?
pub fn granger(cause: &[f64], effect: &[f64], lags: usize) -> Result<TestReport> {
    if cause.len() != effect.len() {
        return Err(Error::DimensionMismatch(format!(
            "series lengths {} and {}",
            cause.len(),
            effect.len()
        )));
    }
    if lags == 0 {
        return Err(Error::InvalidConfig("granger lags must be >= 1".into()));
    }
    let len = cause.len();
    if len <= 3 * lags + 2 {
        return Err(Error::TooFewObservations {
            needed: 3 * lags + 3,
            got: len,
        });
    }
    check_finite(cause)?;
    check_finite(effect)?;
    let n = len - lags;
    let response = &effect[lags..];
    let ones = vec![1.0; n];
    let own: Vec<&[f64]> = (1..=lags).map(|l| &effect[lags - l..len - l]).collect();
    let other: Vec<&[f64]> = (1..=lags).map(|l| &cause[lags - l..len - l]).collect();
    let mut restricted_cols = vec![ones.as_slice()];
    restricted_cols.extend(own.iter().copied());
    let mut full_cols = restricted_cols.clone();
    full_cols.extend(other.iter().copied());
    let singular = |e| match e {
        Error::RankDeficient(_) => Error::SingularRegression,
        other => other,
    };
    let restricted = least_squares(response, &restricted_cols).map_err(singular)?;
    let full = least_squares(response, &full_cols).map_err(singular)?;
    let df_den = (n - 2 * lags - 1) as f64;
    // the restricted model is nested, so its SSR can only be larger
    let ssr_r = restricted.ssr.max(full.ssr);
    let stat = ((ssr_r - full.ssr) / lags as f64) / (full.ssr / df_den);
    let p = if stat.is_finite() {
        FisherSnedecor::new(lags as f64, df_den).expect("positive df").sf(stat)
    } else {
        0.0
    };
    Ok(TestReport::new("granger_f", stat, p)
        .with("lags", lags)
        .with("df_num", lags)
        .with("df_den", n - 2 * lags - 1)
        .with("ssr_restricted", ssr_r)
        .with("ssr_unrestricted", full.ssr))
}

/// Granger p-values for every ordered pair: row causes column.
pub fn granger_matrix(panel: &Panel, lags: usize) -> Result<PairMatrix> {
    let k = panel.cols();
    if k < 2 {
        return Err(Error::InvalidPanel("need at least two series".into()));
    }
    let mut values = vec![vec![None; k]; k];
    for (i, row) in values.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j {
                *cell = Some(granger(panel.column(i), panel.column(j), lags)?.p_value);
            }
        }
    }
    Ok(PairMatrix {
        names: panel.names().to_vec(),
        p_values: LabeledMatrix::square(panel.names().to_vec(), values),
        direction: Direction::RowCausesColumn,
        notes: vec![format!("row series Granger-causes column series; lags = {lags}")],
    })
}
