//! Ordinary least squares via Householder QR, with the usual inference and
//! residual diagnostics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::error::{Error, Result};
use crate::panel::{Panel, PanelKind};
use crate::stats::{jarque_bera, TestReport};

/// Bare least-squares solution shared by the regression-based tests.
#[derive(Debug, Clone)]
pub(crate) struct LeastSquares {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub ssr: f64,
    /// Diagonal of `(X'X)^{-1}`.
    pub xtx_inv_diag: Vec<f64>,
    pub n: usize,
    pub k: usize,
}

impl LeastSquares {
    pub fn sigma2(&self) -> f64 {
        self.ssr / (self.n - self.k) as f64
    }

    pub fn std_error(&self, j: usize) -> f64 {
        (self.sigma2() * self.xtx_inv_diag[j]).sqrt()
    }

    pub fn t_stat(&self, j: usize) -> f64 {
        self.coefficients[j] / self.std_error(j)
    }

    /// Gaussian AIC with the constant terms statsmodels keeps.
    pub fn aic(&self) -> f64 {
        let n = self.n as f64;
        let llf = -n / 2.0 * ((2.0 * std::f64::consts::PI).ln() + (self.ssr / n).ln() + 1.0);
        -2.0 * llf + 2.0 * self.k as f64
    }
}

/// Solves `min ||y - X b||` for column-major regressors.
pub(crate) fn least_squares(y: &[f64], columns: &[&[f64]]) -> Result<LeastSquares> {
    let n = y.len();
    let k = columns.len();
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "regressor of length {} for response of length {n}",
            c.len()
        )));
    }
    if n <= k {
        return Err(Error::TooFewObservations { needed: k + 1, got: n });
    }
    let x = DMatrix::from_fn(n, k, |i, j| columns[j][i]);
    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..k {
        let norm = columns[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || r[(j, j)].abs() <= 1e-10 * norm {
            return Err(Error::RankDeficient(j));
        }
    }
    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);
    let rhs = qty.rows(0, k).into_owned();
    let beta = r.solve_upper_triangular(&rhs).ok_or(Error::SingularRegression)?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or(Error::SingularRegression)?;
    let xtx_inv_diag = (0..k)
        .map(|i| (i..k).map(|j| r_inv[(i, j)].powi(2)).sum())
        .collect();
    let fitted = &x * &beta;
    let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let ssr = residuals.iter().map(|e| e * e).sum();
    Ok(LeastSquares {
        coefficients: beta.iter().copied().collect(),
        residuals,
        ssr,
        xtx_inv_diag,
        n,
        k,
    })
}

/// Full regression report mirroring the usual OLS summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    /// Variable labels, `const` first when an intercept is present.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Two-sided 95% intervals from Student-t(n - k).
    pub conf_intervals: Vec<(f64, f64)>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    /// `None` when there is no slope to test.
    pub f_statistic: Option<f64>,
    pub f_p_value: Option<f64>,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    pub durbin_watson: Option<f64>,
    pub residual_jb: Option<TestReport>,
    pub n: usize,
    pub k: usize,
    pub intercept: bool,
}

/// `sum (e_t - e_{t-1})^2 / sum e_t^2`.
pub fn durbin_watson(residuals: &[f64]) -> Result<f64> {
    if residuals.len() < 3 {
        return Err(Error::TooFewObservations {
            needed: 3,
            got: residuals.len(),
        });
    }
    let den: f64 = residuals.iter().map(|e| e * e).sum();
    if den == 0.0 {
        return Err(Error::ZeroResiduals);
    }
    let num: f64 = residuals.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok(num / den)
}

/// Regresses `y` on the columns of `x` (plus an intercept when requested).
pub fn fit(y: &[f64], x: &[Vec<f64>], intercept: bool) -> Result<OlsFit> {
    let names: Vec<String> = (1..=x.len()).map(|i| format!("x{i}")).collect();
    fit_named(y, x, &names, intercept)
}

pub fn fit_named(y: &[f64], x: &[Vec<f64>], names: &[String], intercept: bool) -> Result<OlsFit> {
    if names.len() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} names for {} regressors",
            names.len(),
            x.len()
        )));
    }
    let n = y.len();
    if let Some(c) = x.iter().find(|c| c.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "regressor of length {} for response of length {n}",
            c.len()
        )));
    }
    let ones = vec![1.0; n];
    let mut cols: Vec<&[f64]> = Vec::with_capacity(x.len() + 1);
    let mut labels = Vec::with_capacity(x.len() + 1);
    if intercept {
        cols.push(&ones);
        labels.push("const".to_string());
    }
    cols.extend(x.iter().map(Vec::as_slice));
    labels.extend(names.iter().cloned());
    let k = cols.len();
    if k == 0 {
        return Err(Error::DimensionMismatch("no regressors".into()));
    }
    if n <= k + 1 {
        return Err(Error::TooFewObservations { needed: k + 2, got: n });
    }
    let ls = least_squares(y, &cols)?;
    let df = (n - k) as f64;
    let t_dist = StudentsT::new(0.0, 1.0, df).expect("positive df");
    let t_crit = t_dist.inverse_cdf(0.975);

    let mut standard_errors = Vec::with_capacity(k);
    let mut t_stats = Vec::with_capacity(k);
    let mut p_values = Vec::with_capacity(k);
    let mut conf_intervals = Vec::with_capacity(k);
    for j in 0..k {
        let se = ls.std_error(j);
        let b = ls.coefficients[j];
        let t = b / se;
        let p = if t.is_nan() {
            f64::NAN
        } else {
            2.0 * t_dist.sf(t.abs())
        };
        standard_errors.push(se);
        t_stats.push(t);
        p_values.push(p);
        conf_intervals.push((b - t_crit * se, b + t_crit * se));
    }

    let ssr = ls.ssr;
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let tss = if intercept {
        y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>()
    } else {
        y.iter().map(|v| v * v).sum::<f64>()
    };
    let slopes = if intercept { k - 1 } else { k };
    let (r_squared, adj_r_squared) = if slopes == 0 {
        (0.0, 0.0)
    } else if tss > 0.0 {
        let r2 = (1.0 - ssr / tss).clamp(0.0, 1.0);
        let dof_total = if intercept { n - 1 } else { n } as f64;
        (r2, 1.0 - (1.0 - r2) * dof_total / df)
    } else {
        (1.0, 1.0)
    };
    let (f_statistic, f_p_value) = if slopes == 0 {
        (None, None)
    } else {
        let f = ((tss - ssr) / slopes as f64) / (ssr / df);
        let p = if f.is_finite() {
            FisherSnedecor::new(slopes as f64, df).expect("positive df").sf(f)
        } else {
            0.0
        };
        (Some(f), Some(p))
    };
    let fitted: Vec<f64> = y.iter().zip(&ls.residuals).map(|(a, e)| a - e).collect();
    Ok(OlsFit {
        names: labels,
        coefficients: ls.coefficients,
        standard_errors,
        t_stats,
        p_values,
        conf_intervals,
        r_squared,
        adj_r_squared,
        f_statistic,
        f_p_value,
        durbin_watson: durbin_watson(&ls.residuals).ok(),
        residual_jb: jarque_bera(&ls.residuals).ok(),
        residuals: ls.residuals,
        fitted,
        n,
        k,
        intercept,
    })
}

/// Regresses one panel column on all the others, with an intercept.
pub fn fit_panel_regression(panel: &Panel, target: &str) -> Result<OlsFit> {
    let y = panel.column_by_name(target)?;
    let (names, x): (Vec<String>, Vec<Vec<f64>>) = panel
        .names()
        .iter()
        .zip(panel.columns())
        .filter(|(n, _)| n.as_str() != target)
        .map(|(n, c)| (n.clone(), c.clone()))
        .unzip();
    fit_named(y, &x, &names, true)
}

/// Return-regression wrapper: target log return on the remaining log returns.
pub fn fit_returns_regression(panel: &Panel, target: &str) -> Result<OlsFit> {
    if panel.kind() != PanelKind::LogReturn {
        return Err(Error::KindMismatch {
            expected: "log_return".into(),
            found: format!("{:?}", panel.kind()).to_lowercase(),
        });
    }
    fit_panel_regression(panel, target)
}
