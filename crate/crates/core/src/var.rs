//! Vector autoregressions: equation-by-equation OLS, companion-matrix
//! stability, iterated forecasts and impulse responses.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ols::{fit_named, OlsFit};
use crate::panel::Panel;

/// Fitted VAR(p): `y_t = b + sum_l B_l y_{t-l} + e_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarFit {
    pub p: usize,
    pub names: Vec<String>,
    pub intercepts: Vec<f64>,
    /// `coefficient_matrices[l][i][j]`: effect of series `j` at lag `l + 1` on series `i`.
    pub coefficient_matrices: Vec<Vec<Vec<f64>>>,
    /// `E'E / (n_effective - N p - 1)`.
    pub residual_cov: Vec<Vec<f64>>,
    /// One regression per series; empty for hand-built systems.
    pub per_equation: Vec<OlsFit>,
    pub n_effective: usize,
}

impl VarFit {
    /// Assembles a system from known parameters (no estimation attached).
    pub fn from_parts(
        names: Vec<String>,
        intercepts: Vec<f64>,
        coefficient_matrices: Vec<Vec<Vec<f64>>>,
        residual_cov: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = names.len();
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if intercepts.len() != n
            || coefficient_matrices.is_empty()
            || !coefficient_matrices.iter().all(square)
            || !square(&residual_cov)
        {
            return Err(Error::DimensionMismatch("VAR parts disagree on N".into()));
        }
        Ok(Self {
            p: coefficient_matrices.len(),
            names,
            intercepts,
            coefficient_matrices,
            residual_cov,
            per_equation: Vec::new(),
            n_effective: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    fn lag_matrix(&self, l: usize) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.coefficient_matrices[l][i][j])
    }
}

/// Regressor block shared by every equation: lags `1..=p` of every series.
fn lagged_regressors(panel: &Panel, p: usize) -> (Vec<String>, Vec<Vec<f64>>) {
    let rows = panel.rows();
    let mut names = Vec::new();
    let mut cols = Vec::new();
    for l in 1..=p {
        for (j, name) in panel.names().iter().enumerate() {
            names.push(format!("L{l}.{name}"));
            cols.push(panel.column(j)[p - l..rows - l].to_vec());
        }
    }
    (names, cols)
}

/// Estimates a VAR(p) by OLS, one equation per series.
pub fn fit_var(panel: &Panel, p: usize) -> Result<VarFit> {
    let n = panel.cols();
    let rows = panel.rows();
    if p == 0 {
        return Err(Error::InvalidConfig("VAR lag order must be >= 1".into()));
    }
    if rows <= n * p + p + 10 {
        return Err(Error::TooFewObservations {
            needed: n * p + p + 11,
            got: rows,
        });
    }
    let (reg_names, regressors) = lagged_regressors(panel, p);
    let mut per_equation = Vec::with_capacity(n);
    for j in 0..n {
        let y = &panel.column(j)[p..];
        per_equation.push(fit_named(y, &regressors, &reg_names, true)?);
    }
    let n_eff = rows - p;
    let intercepts = per_equation.iter().map(|f| f.coefficients[0]).collect();
    let coefficient_matrices = (0..p)
        .map(|l| {
            per_equation
                .iter()
                .map(|f| f.coefficients[1 + l * n..1 + (l + 1) * n].to_vec())
                .collect()
        })
        .collect();
    let dof = (n_eff - n * p - 1) as f64;
    let mut residual_cov = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a..n {
            let s: f64 = per_equation[a]
                .residuals
                .iter()
                .zip(&per_equation[b].residuals)
                .map(|(x, y)| x * y)
                .sum::<f64>()
                / dof;
            residual_cov[a][b] = s;
            residual_cov[b][a] = s;
        }
    }
    Ok(VarFit {
        p,
        names: panel.names().to_vec(),
        intercepts,
        coefficient_matrices,
        residual_cov,
        per_equation,
        n_effective: n_eff,
    })
}

/// Information criteria for one candidate lag order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagCriterion {
    pub p: usize,
    pub aic: f64,
    pub bic: f64,
}

/// AIC/BIC for `p = 1..=max_p` on a common sample. Reported only; never
/// applied automatically.
pub fn select_order(panel: &Panel, max_p: usize) -> Result<Vec<LagCriterion>> {
    let n = panel.cols();
    let trimmed_rows = panel.rows().saturating_sub(max_p);
    let mut out = Vec::with_capacity(max_p);
    for p in 1..=max_p {
        // drop the first max_p - p rows so every order sees the same responses
        let sub = panel.slice_rows(max_p - p, panel.rows())?;
        let fit = fit_var(&sub, p)?;
        let t = trimmed_rows as f64;
        let sigma = DMatrix::from_fn(n, n, |a, b| {
            fit.per_equation[a]
                .residuals
                .iter()
                .zip(&fit.per_equation[b].residuals)
                .map(|(x, y)| x * y)
                .sum::<f64>()
                / t
        });
        let log_det = sigma.determinant().ln();
        let params = (n * (n * p + 1)) as f64;
        out.push(LagCriterion {
            p,
            aic: log_det + 2.0 * params / t,
            bic: log_det + t.ln() * params / t,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub max_modulus: f64,
    pub stable: bool,
    /// Moduli of all companion-matrix eigenvalues, descending.
    pub moduli: Vec<f64>,
}

/// Eigenvalue moduli of the `N p` companion matrix.
pub fn stability(fit: &VarFit) -> StabilityReport {
    let n = fit.dim();
    let np = n * fit.p;
    let mut companion = DMatrix::zeros(np, np);
    for l in 0..fit.p {
        for i in 0..n {
            for j in 0..n {
                companion[(i, l * n + j)] = fit.coefficient_matrices[l][i][j];
            }
        }
    }
    for k in n..np {
        companion[(k, k - n)] = 1.0;
    }
    let mut moduli: Vec<f64> = companion.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    let max_modulus = moduli.first().copied().unwrap_or(0.0);
    StabilityReport {
        max_modulus,
        stable: max_modulus < 1.0,
        moduli,
    }
}

/// Impulse responses, `responses[h][i][j]` = response of series `i` at step
/// `h` to a shock in series `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfResult {
    pub names: Vec<String>,
    pub horizon: usize,
    pub responses: Vec<Vec<Vec<f64>>>,
    /// Shocks are one-standard-deviation Cholesky innovations.
    pub orthogonalized: bool,
    /// `ordering[k]` is the series placed k-th in the Cholesky ordering.
    pub ordering: Vec<usize>,
    /// Whether the fitted system was stable.
    pub stable: bool,
}

impl IrfResult {
    /// Long-form rows `(h, shock, response, value)`.
    pub fn long_form(&self) -> Vec<(usize, &str, &str, f64)> {
        let mut rows = Vec::new();
        for (h, m) in self.responses.iter().enumerate() {
            for (j, shock) in self.names.iter().enumerate() {
                for (i, response) in self.names.iter().enumerate() {
                    rows.push((h, shock.as_str(), response.as_str(), m[i][j]));
                }
            }
        }
        rows
    }
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Moving-average coefficients `Psi_0 = I`, `Psi_h = sum_l B_l Psi_{h-l}`.
fn ma_coefficients(fit: &VarFit, horizon: usize) -> Vec<DMatrix<f64>> {
    let n = fit.dim();
    let lags: Vec<DMatrix<f64>> = (0..fit.p).map(|l| fit.lag_matrix(l)).collect();
    let mut psi = vec![DMatrix::identity(n, n)];
    for h in 1..=horizon {
        let mut acc = DMatrix::zeros(n, n);
        for l in 1..=h.min(fit.p) {
            acc += &lags[l - 1] * &psi[h - l];
        }
        psi.push(acc);
    }
    psi
}

/// Lower Cholesky factor of the residual covariance under `ordering`,
/// mapped back to the original series positions.
fn impact_matrix(fit: &VarFit, ordering: &[usize]) -> Result<DMatrix<f64>> {
    let n = fit.dim();
    let permuted = DMatrix::from_fn(n, n, |a, b| fit.residual_cov[ordering[a]][ordering[b]]);
    let chol = permuted.cholesky().ok_or(Error::CholeskyFailure)?;
    let l = chol.l();
    let mut impact = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            impact[(ordering[a], ordering[b])] = l[(a, b)];
        }
    }
    Ok(impact)
}

fn check_ordering(ordering: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if ordering.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "ordering of length {} for {n} series",
            ordering.len()
        )));
    }
    for &k in ordering {
        if k >= n || seen[k] {
            return Err(Error::InvalidConfig("ordering is not a permutation".into()));
        }
        seen[k] = true;
    }
    Ok(())
}

/// Impulse responses up to `horizon`. With `orthogonalized`, shocks are
/// Cholesky innovations in the given `ordering` (identity when `None`).
pub fn irf(
    fit: &VarFit,
    horizon: usize,
    orthogonalized: bool,
    ordering: Option<&[usize]>,
) -> Result<IrfResult> {
    if horizon == 0 {
        return Err(Error::InvalidConfig("IRF horizon must be >= 1".into()));
    }
    let n = fit.dim();
    let ordering: Vec<usize> = ordering.map(<[usize]>::to_vec).unwrap_or_else(|| (0..n).collect());
    check_ordering(&ordering, n)?;
    let psi = ma_coefficients(fit, horizon);
    let responses = if orthogonalized {
        let impact = impact_matrix(fit, &ordering)?;
        psi.iter().map(|m| to_rows(&(m * &impact))).collect()
    } else {
        psi.iter().map(to_rows).collect()
    };
    Ok(IrfResult {
        names: fit.names.clone(),
        horizon,
        responses,
        orthogonalized,
        ordering,
        stable: stability(fit).stable,
    })
}

/// Iterated point forecasts; `last_obs` holds the final `p` observations,
/// oldest first. Returns `steps` rows of `N` values.
pub fn var_forecast(fit: &VarFit, last_obs: &[Vec<f64>], steps: usize) -> Result<Vec<Vec<f64>>> {
    let n = fit.dim();
    if last_obs.len() != fit.p || last_obs.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "expected {} x {n} last observations",
            fit.p
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidConfig("forecast steps must be >= 1".into()));
    }
    let mut history: Vec<Vec<f64>> = last_obs.to_vec();
    for _ in 0..steps {
        let mut next = fit.intercepts.clone();
        for l in 1..=fit.p {
            let past = &history[history.len() - l];
            for (i, v) in next.iter_mut().enumerate() {
                *v += fit.coefficient_matrices[l - 1][i]
                    .iter()
                    .zip(past)
                    .map(|(b, y)| b * y)
                    .sum::<f64>();
            }
        }
        history.push(next);
    }
    Ok(history.split_off(fit.p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(b: Vec<Vec<f64>>, cov: Vec<Vec<f64>>) -> VarFit {
        let n = b.len();
        VarFit::from_parts((0..n).map(|i| format!("y{i}")).collect(), vec![0.0; n], vec![b], cov).unwrap()
    }

    fn eye(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    }

    #[test]
    fn stability_examples() {
        let zero = system(vec![vec![0.0; 2]; 2], eye(2));
        let s = stability(&zero);
        assert_eq!(s.max_modulus, 0.0);
        assert!(s.stable);

        let unit = system(eye(2), eye(2));
        let s = stability(&unit);
        assert!((s.max_modulus - 1.0).abs() < 1e-12);
        assert!(!s.stable);

        let diag = system(vec![vec![0.5, 0.0], vec![0.0, 0.3]], eye(2));
        assert!((stability(&diag).max_modulus - 0.5).abs() < 1e-12);

        // complex pair: rotation scaled by 0.9
        let rot = system(vec![vec![0.0, -0.9], vec![0.9, 0.0]], eye(2));
        assert!((stability(&rot).max_modulus - 0.9).abs() < 1e-12);
    }

    #[test]
    fn irf_examples() {
        let zero = system(vec![vec![0.0; 2]; 2], eye(2));
        let r = irf(&zero, 5, false, None).unwrap();
        assert_eq!(r.responses[0], eye(2));
        assert!(r.responses[1..].iter().flatten().flatten().all(|&v| v == 0.0));

        let ar = system(vec![vec![0.5]], vec![vec![1.0]]);
        let r = irf(&ar, 6, false, None).unwrap();
        for h in 0..=6 {
            assert!((r.responses[h][0][0] - 0.5f64.powi(h as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn orthogonal_impact_is_cholesky_under_ordering() {
        let cov = vec![vec![4.0, 1.2, 0.4], vec![1.2, 2.0, 0.3], vec![0.4, 0.3, 1.0]];
        let b = vec![vec![0.2, 0.1, 0.0], vec![0.0, 0.3, 0.1], vec![0.1, 0.0, 0.4]];
        let fit = system(b, cov.clone());
        let r = irf(&fit, 3, true, None).unwrap();
        let l = DMatrix::from_fn(3, 3, |i, j| cov[i][j]).cholesky().unwrap().l();
        for i in 0..3 {
            for j in 0..3 {
                assert!((r.responses[0][i][j] - l[(i, j)]).abs() < 1e-14);
            }
        }
        let ord = [2, 0, 1];
        let r = irf(&fit, 3, true, Some(&ord)).unwrap();
        let permuted = DMatrix::from_fn(3, 3, |a, b| cov[ord[a]][ord[b]]);
        let lp = permuted.cholesky().unwrap().l();
        for a in 0..3 {
            for b in 0..3 {
                assert!((r.responses[0][ord[a]][ord[b]] - lp[(a, b)]).abs() < 1e-14);
            }
        }
        assert!(matches!(irf(&fit, 3, true, Some(&[0, 0, 1])), Err(Error::InvalidConfig(_))));

        let bad = system(vec![vec![0.1, 0.0], vec![0.0, 0.1]], vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert_eq!(irf(&bad, 2, true, None).unwrap_err(), Error::CholeskyFailure);
    }

    #[test]
    fn identity_covariance_makes_orthogonal_equal_plain() {
        let fit = system(vec![vec![0.4, 0.2], vec![-0.1, 0.3]], eye(2));
        assert_eq!(
            irf(&fit, 8, true, None).unwrap().responses,
            irf(&fit, 8, false, None).unwrap().responses
        );
    }

    #[test]
    fn forecast_examples() {
        let zero = system(vec![vec![0.0; 2]; 2], eye(2));
        let f = var_forecast(&zero, &[vec![3.0, -1.0]], 4).unwrap();
        assert!(f.iter().flatten().all(|&v| v == 0.0));

        let ar = VarFit::from_parts(vec!["y".into()], vec![1.0], vec![vec![vec![0.5]]], vec![vec![1.0]]).unwrap();
        let f = var_forecast(&ar, &[vec![0.0]], 4).unwrap();
        assert_eq!(f, vec![vec![1.0], vec![1.5], vec![1.75], vec![1.875]]);

        let b = vec![vec![0.5, 0.1], vec![0.0, 0.3]];
        let fit = VarFit::from_parts(vec!["a".into(), "b".into()], vec![0.2, -0.4], vec![b.clone()], eye(2)).unwrap();
        let f = var_forecast(&fit, &[vec![10.0, 10.0]], 500).unwrap();
        // (I - B)^{-1} b
        let m = DMatrix::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 0.0 } - b[i][j]);
        let mean = m.try_inverse().unwrap() * nalgebra::DVector::from_vec(vec![0.2, -0.4]);
        assert!((f[499][0] - mean[0]).abs() < 1e-12 && (f[499][1] - mean[1]).abs() < 1e-12);

        assert!(matches!(var_forecast(&fit, &[vec![1.0]], 2), Err(Error::DimensionMismatch(_))));
    }
}
