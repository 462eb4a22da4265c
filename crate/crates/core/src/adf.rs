//! Augmented Dickey-Fuller unit-root test with AIC lag selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mackinnon::{mackinnon_p, Surface, TABLE_VERSION};
use crate::ols::{least_squares, LeastSquares};
use crate::stats::{check_finite, TestReport};

/// Deterministic terms of the test regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdfSpec {
    /// No deterministic terms; used on cointegration residuals.
    NoConstant,
    ConstantOnly,
    ConstantTrend,
}

impl AdfSpec {
    fn surface(self) -> Surface {
        match self {
            AdfSpec::NoConstant => Surface::NoConstant,
            AdfSpec::ConstantOnly => Surface::Constant,
            AdfSpec::ConstantTrend => Surface::ConstantTrend,
        }
    }

    fn deterministic_terms(self) -> usize {
        match self {
            AdfSpec::NoConstant => 0,
            AdfSpec::ConstantOnly => 1,
            AdfSpec::ConstantTrend => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AdfSpec::NoConstant => "none",
            AdfSpec::ConstantOnly => "constant",
            AdfSpec::ConstantTrend => "constant-trend",
        }
    }
}

/// How many lagged differences to include.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdfLags {
    /// AIC over `0..=floor(12 (n/100)^(1/4))`.
    Auto,
    /// AIC over `0..=max`.
    Max(usize),
    /// Exactly this many lags.
    Fixed(usize),
}

/// Schwert's rule of thumb, `floor(12 (n/100)^(1/4))`.
pub fn schwert_max_lags(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Regression of `dy_t` on deterministics, `y_{t-1}` and `lags` lagged
/// differences, over observations `t = start..` of the difference series.
fn adf_regression(y: &[f64], spec: AdfSpec, lags: usize, start: usize) -> Result<LeastSquares> {
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    // row t of the difference series: dy[t] = y[t+1] - y[t], level lag y[t]
    let rows: Vec<usize> = (start.max(lags)..dy.len()).collect();
    let response: Vec<f64> = rows.iter().map(|&t| dy[t]).collect();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(spec.deterministic_terms() + 1 + lags);
    if spec != AdfSpec::NoConstant {
        cols.push(vec![1.0; rows.len()]);
    }
    if spec == AdfSpec::ConstantTrend {
        cols.push((1..=rows.len()).map(|i| i as f64).collect());
    }
    cols.push(rows.iter().map(|&t| y[t]).collect());
    for i in 1..=lags {
        cols.push(rows.iter().map(|&t| dy[t - i]).collect());
    }
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    least_squares(&response, &refs).map_err(|e| match e {
        Error::RankDeficient(_) => Error::SingularRegression,
        other => other,
    })
}

pub fn adf(series: &[f64], spec: AdfSpec, max_lags: AdfLags) -> Result<TestReport> {
    let n = series.len();
    if n < 25 {
        return Err(Error::TooFewObservations { needed: 25, got: n });
    }
    check_finite(series)?;
    let det = spec.deterministic_terms();
    let cap = (n / 2).saturating_sub(det + 1);
    let (lags, selected) = match max_lags {
        AdfLags::Fixed(k) => (k.min(cap), false),
        AdfLags::Auto | AdfLags::Max(_) => {
            let max = match max_lags {
                AdfLags::Max(m) => m,
                _ => schwert_max_lags(n),
            }
            .min(cap);
            // common sample so AIC values are comparable
            let mut best = (f64::INFINITY, 0);
            for k in 0..=max {
                let fit = adf_regression(series, spec, k, max)?;
                let aic = fit.aic();
                if aic < best.0 {
                    best = (aic, k);
                }
            }
            (best.1, true)
        }
    };
    let fit = adf_regression(series, spec, lags, 0)?;
    let level_idx = det;
    let stat = fit.t_stat(level_idx);
    if !stat.is_finite() {
        return Err(Error::SingularRegression);
    }
    let p = mackinnon_p(stat, spec.surface(), 1);
    Ok(TestReport::new("adf", stat, p)
        .with("lags", lags)
        .with("lag_selection", if selected { "aic" } else { "fixed" })
        .with("spec", spec.label())
        .with("nobs", fit.n)
        .with("table", TABLE_VERSION))
}

/// ADF statistic with its regression, for reuse by residual-based tests.
pub(crate) fn adf_statistic(series: &[f64], spec: AdfSpec, max_lags: AdfLags) -> Result<(f64, usize)> {
    let r = adf(series, spec, max_lags)?;
    let lags = r.nuisance["lags"].parse().expect("lags recorded");
    Ok((r.statistic, lags))
}
