//! DCC(1,1) dynamic conditional correlations, estimated as the second stage
//! after univariate EGARCH fits.
//!
//! `Q_0 = Qbar = (1/T) sum_t z_t z_t'`,
//! `Q_t = (1 - alpha - beta) Qbar + alpha z_{t-1} z_{t-1}' + beta Q_{t-1}`,
//! `R_t = diag(Q_t)^{-1/2} Q_t diag(Q_t)^{-1/2}`.

use serde::{Deserialize, Serialize};

use crate::egarch::EgarchFit;
use crate::error::{Error, Result};
use crate::optim::{constrained_minimize, NelderMeadOptions, SimplexPair};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DccFit {
    pub names: Vec<String>,
    pub alpha: f64,
    pub beta: f64,
    pub q_bar: Vec<Vec<f64>>,
    /// One `N x N` correlation matrix per observation.
    pub r_path: Vec<Vec<Vec<f64>>>,
    /// `-sum_t (ln|R_t| + z_t' R_t^{-1} z_t - z_t' z_t) / 2`.
    pub loglik_correlation_part: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Standardized residuals stored row-major: `z[t * n + i]`.
struct Residuals {
    n: usize,
    t: usize,
    z: Vec<f64>,
}

impl Residuals {
    fn from_columns(columns: &[&[f64]]) -> Result<Self> {
        let n = columns.len();
        if n < 2 {
            return Err(Error::DimensionMismatch("DCC needs at least two series".into()));
        }
        let t = columns[0].len();
        if columns.iter().any(|c| c.len() != t) {
            return Err(Error::DimensionMismatch("residual series differ in length".into()));
        }
        if t < 2 {
            return Err(Error::TooFewObservations { needed: 2, got: t });
        }
        let mut z = Vec::with_capacity(n * t);
        for s in 0..t {
            for c in columns {
                if !c[s].is_finite() {
                    return Err(Error::NonFiniteValue(s));
                }
                z.push(c[s]);
            }
        }
        Ok(Self { n, t, z })
    }

    fn row(&self, s: usize) -> &[f64] {
        &self.z[s * self.n..(s + 1) * self.n]
    }

    fn q_bar(&self) -> Vec<f64> {
        let n = self.n;
        let mut q = vec![0.0; n * n];
        for s in 0..self.t {
            let z = self.row(s);
            for i in 0..n {
                for j in 0..=i {
                    q[i * n + j] += z[i] * z[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..=i {
                let v = q[i * n + j] / self.t as f64;
                q[i * n + j] = v;
                q[j * n + i] = v;
            }
        }
        q
    }
}

fn check_pair(alpha: f64, beta: f64) -> Result<()> {
    if alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "DCC parameters need alpha, beta >= 0 and alpha + beta < 1 (got {alpha}, {beta})"
        )))
    }
}

/// Writes the correlation normalization of `q` into `r`: exact unit
/// diagonal, off-diagonals clamped to `[-1, 1]` and mirrored.
fn normalize(q: &[f64], n: usize, r: &mut [f64]) {
    for i in 0..n {
        r[i * n + i] = 1.0;
        for j in 0..i {
            let v = (q[i * n + j] / (q[i * n + i] * q[j * n + j]).sqrt()).clamp(-1.0, 1.0);
            r[i * n + j] = v;
            r[j * n + i] = v;
        }
    }
}

/// In-place lower Cholesky of a row-major `n x n` matrix; `false` when not
/// positive definite.
fn cholesky(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / d;
        }
    }
    true
}

/// `(ln|R|, z' R^{-1} z)` from the Cholesky factor held in `l`.
fn log_det_and_quad(l: &[f64], n: usize, z: &[f64], work: &mut [f64]) -> (f64, f64) {
    let mut log_det = 0.0;
    let mut quad = 0.0;
    for i in 0..n {
        let mut v = z[i];
        for k in 0..i {
            v -= l[i * n + k] * work[k];
        }
        let d = l[i * n + i];
        work[i] = v / d;
        log_det += 2.0 * d.ln();
        quad += work[i] * work[i];
    }
    (log_det, quad)
}

/// Runs the recursion, calling `visit(t, R_t)` for each step.
fn run<F: FnMut(usize, &[f64])>(res: &Residuals, q_bar: &[f64], alpha: f64, beta: f64, mut visit: F) {
    let n = res.n;
    let mut q = q_bar.to_vec();
    let mut r = vec![0.0; n * n];
    let w = 1.0 - alpha - beta;
    for s in 0..res.t {
        if s > 0 {
            let z = res.row(s - 1);
            for i in 0..n {
                for j in 0..n {
                    let k = i * n + j;
                    q[k] = w * q_bar[k] + alpha * z[i] * z[j] + beta * q[k];
                }
            }
        }
        normalize(&q, n, &mut r);
        visit(s, &r);
    }
}

/// Negative correlation-part log-likelihood, or the first singular step.
fn correlation_nll(res: &Residuals, q_bar: &[f64], alpha: f64, beta: f64) -> std::result::Result<f64, usize> {
    let n = res.n;
    let mut l = vec![0.0; n * n];
    let mut work = vec![0.0; n];
    let mut total = 0.0;
    let mut failed = None;
    run(res, q_bar, alpha, beta, |s, r| {
        if failed.is_some() {
            return;
        }
        l.copy_from_slice(r);
        if !cholesky(&mut l, n) {
            failed = Some(s);
            return;
        }
        let z = res.row(s);
        let (log_det, quad) = log_det_and_quad(&l, n, z, &mut work);
        let zz: f64 = z.iter().map(|v| v * v).sum();
        total += 0.5 * (log_det + quad - zz);
    });
    match failed {
        Some(s) => Err(s),
        None => Ok(total),
    }
}

fn unflatten(m: &[f64], n: usize) -> Vec<Vec<f64>> {
    m.chunks(n).map(<[f64]>::to_vec).collect()
}

/// Correlation path for given parameters; `z_columns` holds one
/// standardized-residual series per asset.
pub fn dcc_recursion(z_columns: &[&[f64]], alpha: f64, beta: f64) -> Result<Vec<Vec<Vec<f64>>>> {
    check_pair(alpha, beta)?;
    let res = Residuals::from_columns(z_columns)?;
    let q_bar = res.q_bar();
    let mut path = Vec::with_capacity(res.t);
    run(&res, &q_bar, alpha, beta, |_, r| path.push(unflatten(r, res.n)));
    Ok(path)
}

/// Second-stage estimate of `(alpha, beta)` from `(0.05, 0.90)`.
pub fn fit_dcc(fits: &[EgarchFit], names: &[String]) -> Result<DccFit> {
    if fits.len() < 2 {
        return Err(Error::DimensionMismatch("DCC needs at least two fitted margins".into()));
    }
    if names.len() != fits.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} names for {} margins",
            names.len(),
            fits.len()
        )));
    }
    let columns: Vec<&[f64]> = fits.iter().map(|f| f.z_path.as_slice()).collect();
    let res = Residuals::from_columns(&columns)?;
    let q_bar = res.q_bar();
    let objective = |x: &[f64]| correlation_nll(&res, &q_bar, x[0], x[1]).unwrap_or(f64::INFINITY);
    let opt = constrained_minimize(objective, &[0.05, 0.90], &SimplexPair, &NelderMeadOptions::default())
        .map_err(|e| Error::OptimizationFailed(e.to_string()))?;
    if !opt.converged {
        return Err(Error::OptimizationFailed(format!(
            "DCC likelihood did not converge in {} iterations",
            opt.iterations
        )));
    }
    let (alpha, beta) = (opt.x_opt[0], opt.x_opt[1]);
    let nll = correlation_nll(&res, &q_bar, alpha, beta).map_err(Error::SingularCorrelation)?;
    let mut r_path = Vec::with_capacity(res.t);
    run(&res, &q_bar, alpha, beta, |_, r| r_path.push(unflatten(r, res.n)));
    Ok(DccFit {
        names: names.to_vec(),
        alpha,
        beta,
        q_bar: unflatten(&q_bar, res.n),
        r_path,
        loglik_correlation_part: -nll,
        converged: opt.converged,
        iterations: opt.iterations,
    })
}

/// Time average of `R_t[i, j]`.
pub fn mean_dynamic_correlation(fit: &DccFit, i: &str, j: &str) -> Result<f64> {
    let find = |name: &str| {
        fit.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownSeries(name.to_string()))
    };
    let (a, b) = (find(i)?, find(j)?);
    if a == b {
        return Err(Error::InvalidConfig(format!("mean correlation of {i} with itself")));
    }
    Ok(fit.r_path.iter().map(|r| r[a][b]).sum::<f64>() / fit.r_path.len() as f64)
}

/// Joint Gaussian log-likelihood
/// `-sum_t (N ln 2pi + ln|D_t R_t D_t| + z_t' R_t^{-1} z_t) / 2` of margins
/// and correlations together. Evaluation only.
pub fn joint_loglik(fits: &[EgarchFit], dcc: &DccFit) -> Result<f64> {
    let n = fits.len();
    if n != dcc.names.len() || fits.iter().any(|f| f.z_path.len() != dcc.r_path.len()) {
        return Err(Error::DimensionMismatch("margins and DCC fit disagree".into()));
    }
    let mut l = vec![0.0; n * n];
    let mut work = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut total = 0.0;
    for (s, r) in dcc.r_path.iter().enumerate() {
        for (i, row) in r.iter().enumerate() {
            l[i * n..(i + 1) * n].copy_from_slice(row);
            z[i] = fits[i].z_path[s];
        }
        if !cholesky(&mut l, n) {
            return Err(Error::SingularCorrelation(s));
        }
        let (log_det_r, quad) = log_det_and_quad(&l, n, &z, &mut work);
        let log_det_d: f64 = fits.iter().map(|f| 2.0 * f.sigma_path[s].ln()).sum();
        total += -0.5 * (n as f64 * LN_2PI + log_det_d + log_det_r + quad);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::egarch::{fit_egarch, EgarchParams, InnovationChoice};
    use crate::simulate::{simulate, Process, SimSpec};
    use nalgebra::DMatrix;

    fn z_pair() -> (Vec<f64>, Vec<f64>) {
        let a: Vec<f64> = (0..60).map(|t| ((t * 37 % 17) as f64 - 8.0) / 5.0).collect();
        let b: Vec<f64> = (0..60).map(|t| ((t * 11 % 13) as f64 - 6.0) / 4.0 + 0.3 * a[t]).collect();
        (a, b)
    }

    #[test]
    fn zero_parameters_give_constant_correlation() {
        let (a, b) = z_pair();
        let path = dcc_recursion(&[&a, &b], 0.0, 0.0).unwrap();
        let n = a.len() as f64;
        let q12 = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / n;
        let q11 = a.iter().map(|x| x * x).sum::<f64>() / n;
        let q22 = b.iter().map(|x| x * x).sum::<f64>() / n;
        let rho = q12 / (q11 * q22).sqrt();
        for r in &path {
            assert_eq!(r[0][0], 1.0);
            assert!((r[0][1] - rho).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_series_are_perfectly_correlated() {
        let (a, _) = z_pair();
        let path = dcc_recursion(&[&a, &a], 0.1, 0.8).unwrap();
        assert!(path.iter().all(|r| r[0][1] == 1.0 && r[1][0] == 1.0));
    }

    #[test]
    fn three_step_hand_calculation() {
        let a = [1.0, -0.5, 2.0];
        let b = [0.5, 1.0, -1.0];
        // Qbar = (1/3) sum z z'
        let (q11, q12, q22) = (5.25 / 3.0, -2.0 / 3.0, 2.25 / 3.0);
        let (al, be) = (0.1, 0.8);
        let w = 1.0 - al - be;
        let step = |q: (f64, f64, f64), z: (f64, f64)| {
            (
                w * q11 + al * z.0 * z.0 + be * q.0,
                w * q12 + al * z.0 * z.1 + be * q.1,
                w * q22 + al * z.1 * z.1 + be * q.2,
            )
        };
        let q0 = (q11, q12, q22);
        let q1 = step(q0, (1.0, 0.5));
        let q2 = step(q1, (-0.5, 1.0));
        let rho = |q: (f64, f64, f64)| q.1 / (q.0 * q.2).sqrt();
        let path = dcc_recursion(&[&a, &b], al, be).unwrap();
        for (r, q) in path.iter().zip([q0, q1, q2]) {
            assert!((r[0][1] - rho(q)).abs() < 1e-15);
        }
        // q1 worked by hand: 0.1*1.75 + 0.1*1 + 0.8*1.75
        assert!((q1.0 - 1.675).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (a, b) = z_pair();
        assert!(matches!(dcc_recursion(&[&a, &b], 0.5, 0.5), Err(Error::InvalidConfig(_))));
        assert!(matches!(dcc_recursion(&[&a, &b[..10]], 0.1, 0.8), Err(Error::DimensionMismatch(_))));
    }

    fn dcc_panel(alpha: f64, beta: f64, n: usize, seed: u64) -> crate::Panel {
        let margin = EgarchParams {
            mu: 0.0,
            omega: -0.4,
            alpha: 0.15,
            gamma: -0.08,
            beta: 0.95,
        };
        simulate(&SimSpec {
            process: Process::DccEgarch {
                margins: vec![margin, margin],
                alpha,
                beta,
                qbar: vec![vec![1.0, 0.5], vec![0.5, 1.0]],
            },
            n,
            seed,
        })
        .unwrap()
    }

    fn fit_panel(panel: &crate::Panel) -> (Vec<EgarchFit>, DccFit) {
        let fits: Vec<EgarchFit> = (0..panel.cols())
            .map(|j| fit_egarch(panel.column(j), InnovationChoice::Normal).unwrap())
            .collect();
        let dcc = fit_dcc(&fits, panel.names()).unwrap();
        (fits, dcc)
    }

    #[test]
    fn recovers_simulated_dynamics_with_valid_path() {
        let panel = dcc_panel(0.05, 0.90, 3000, 21);
        let (fits, dcc) = fit_panel(&panel);
        assert!((dcc.alpha - 0.05).abs() < 0.05 && (dcc.beta - 0.90).abs() < 0.10, "{} {}", dcc.alpha, dcc.beta);
        for r in &dcc.r_path {
            let m = DMatrix::from_fn(2, 2, |i, j| r[i][j]);
            assert_eq!(r[0][0], 1.0);
            assert_eq!(r[0][1], r[1][0]);
            assert!(m.symmetric_eigenvalues().min() >= -1e-10);
        }
        let manual = dcc.r_path.iter().map(|r| r[1][0]).sum::<f64>() / dcc.r_path.len() as f64;
        let mean = mean_dynamic_correlation(&dcc, &panel.names()[0], &panel.names()[1]).unwrap();
        assert!((mean - manual).abs() < 1e-12);
        assert!(mean > 0.3 && mean < 0.7);
        let joint = joint_loglik(&fits, &dcc).unwrap();
        let margins: f64 = fits.iter().map(|f| f.loglik).sum();
        assert!((joint - (margins + dcc.loglik_correlation_part)).abs() < 1e-6 * joint.abs());
        assert!(matches!(
            mean_dynamic_correlation(&dcc, "nope", &panel.names()[0]),
            Err(Error::UnknownSeries(_))
        ));
    }

    #[test]
    fn rescaling_one_asset_leaves_correlations_unchanged() {
        let panel = dcc_panel(0.05, 0.90, 1200, 4);
        let (_, base) = fit_panel(&panel);
        let scaled_col: Vec<f64> = panel.column(1).iter().map(|v| v * 7.5).collect();
        let fits = vec![
            fit_egarch(panel.column(0), InnovationChoice::Normal).unwrap(),
            fit_egarch(&scaled_col, InnovationChoice::Normal).unwrap(),
        ];
        let scaled = fit_dcc(&fits, panel.names()).unwrap();
        assert!((base.alpha - scaled.alpha).abs() < 1e-6);
        assert!((base.beta - scaled.beta).abs() < 1e-6);
        for (a, b) in base.r_path.iter().zip(&scaled.r_path) {
            assert!((a[0][1] - b[0][1]).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_correlation_data_gives_small_alpha() {
        let panel = dcc_panel(0.0, 0.0, 2000, 8);
        let (_, dcc) = fit_panel(&panel);
        assert!(dcc.alpha < 0.03, "{}", dcc.alpha);
    }
}
