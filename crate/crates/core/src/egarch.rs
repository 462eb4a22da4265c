//! EGARCH(1,1) conditional volatility by maximum likelihood.
//!
//! Observations are indexed `t = 1..=n`; the pre-sample state is
//! `ln sigma_0^2 = ln(sample variance)` and `z_0 = 0`, so
//! `ln sigma_t^2 = omega + alpha (|z_{t-1}| - sqrt(2/pi)) + gamma z_{t-1} + beta ln sigma_{t-1}^2`
//! is defined for every observation.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::optim::{constrained_minimize, Bound, BoxTransform, NelderMeadOptions};
use crate::stats::check_finite;

/// Log-variance guard applied while the optimizer explores.
pub const LOG_VAR_GUARD: f64 = 50.0;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const MEAN_ABS_NORMAL: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgarchParams {
    pub mu: f64,
    pub omega: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl EgarchParams {
    fn to_vec(self) -> Vec<f64> {
        vec![self.mu, self.omega, self.alpha, self.gamma, self.beta]
    }

    fn from_slice(x: &[f64]) -> Self {
        Self {
            mu: x[0],
            omega: x[1],
            alpha: x[2],
            gamma: x[3],
            beta: x[4],
        }
    }

    /// Next log-variance after standardized shock `z`.
    pub fn next_log_var(&self, log_var: f64, z: f64) -> f64 {
        self.omega + self.alpha * (z.abs() - MEAN_ABS_NORMAL) + self.gamma * z + self.beta * log_var
    }
}

/// Distribution of the standardized residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Innovation {
    Normal,
    /// Unit-variance Student-t, `nu > 2`.
    StudentT { nu: f64 },
}

impl Innovation {
    /// Negative log-density of `z` excluding the `ln sigma` term.
    fn neg_log_density(self, z: f64) -> f64 {
        match self {
            Innovation::Normal => 0.5 * (LN_2PI + z * z),
            Innovation::StudentT { nu } => {
                -ln_gamma(0.5 * (nu + 1.0)) + ln_gamma(0.5 * nu) + 0.5 * (std::f64::consts::PI * (nu - 2.0)).ln()
                    + 0.5 * (nu + 1.0) * (z * z / (nu - 2.0)).ln_1p()
            }
        }
    }
}

/// Innovation family requested from [`fit_egarch`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationChoice {
    #[default]
    Normal,
    /// Degrees of freedom profiled over `4..=30`.
    StudentT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgarchFit {
    pub params: EgarchParams,
    pub sigma_path: Vec<f64>,
    /// `(r_t - mu) / sigma_t`.
    pub z_path: Vec<f64>,
    pub loglik: f64,
    pub innovation_dist: Innovation,
    /// Log-likelihood at the documented starting point.
    pub init_loglik: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Clone, Copy)]
enum Guard {
    Clamp,
    Strict,
}

/// Core recursion. Returns the negative log-likelihood, or the offending
/// index under `Guard::Strict`. `path` receives `(log_var, z)` per step.
fn recursion(
    p: &EgarchParams,
    returns: &[f64],
    seed_log_var: f64,
    dist: Innovation,
    guard: Guard,
    mut path: Option<&mut Vec<(f64, f64)>>,
) -> std::result::Result<f64, usize> {
    let mut log_var = seed_log_var;
    let mut z_prev = 0.0;
    let mut nll = 0.0;
    for (t, &r) in returns.iter().enumerate() {
        log_var = p.next_log_var(log_var, z_prev);
        match guard {
            Guard::Clamp => {
                if log_var.is_nan() {
                    return Err(t);
                }
                log_var = log_var.clamp(-LOG_VAR_GUARD, LOG_VAR_GUARD);
            }
            Guard::Strict => {
                if !(log_var.abs() <= LOG_VAR_GUARD) {
                    return Err(t);
                }
            }
        }
        let z = (r - p.mu) / (0.5 * log_var).exp();
        nll += 0.5 * log_var + dist.neg_log_density(z);
        if let Some(buf) = path.as_deref_mut() {
            buf.push((log_var, z));
        }
        z_prev = z;
    }
    Ok(nll)
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

fn check_params(p: &EgarchParams) -> Result<()> {
    if p.to_vec().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidConfig("EGARCH parameters must be finite".into()))
    }
}

fn check_returns(returns: &[f64], needed: usize) -> Result<()> {
    if returns.len() < needed {
        return Err(Error::TooFewObservations {
            needed,
            got: returns.len(),
        });
    }
    check_finite(returns)?;
    if sample_variance(returns) <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok(())
}

/// Negative Gaussian log-likelihood `sum_t (ln 2pi + ln sigma_t^2 + z_t^2) / 2`.
pub fn egarch_neg_loglik(params: &EgarchParams, returns: &[f64]) -> Result<f64> {
    egarch_neg_loglik_with(params, returns, Innovation::Normal)
}

/// Negative log-likelihood under the given innovation distribution.
pub fn egarch_neg_loglik_with(params: &EgarchParams, returns: &[f64], dist: Innovation) -> Result<f64> {
    check_returns(returns, 50)?;
    check_params(params)?;
    recursion(params, returns, sample_variance(returns).ln(), dist, Guard::Strict, None)
        .map_err(Error::NonFiniteRecursion)
}

/// Conditional standard deviations and standardized residuals for fixed
/// parameters.
pub fn egarch_filter(params: &EgarchParams, returns: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_returns(returns, 2)?;
    check_params(params)?;
    let mut path = Vec::with_capacity(returns.len());
    recursion(
        params,
        returns,
        sample_variance(returns).ln(),
        Innovation::Normal,
        Guard::Strict,
        Some(&mut path),
    )
    .map_err(Error::NonFiniteRecursion)?;
    Ok(path.into_iter().map(|(h, z)| ((0.5 * h).exp(), z)).unzip())
}

fn optimizer_options() -> NelderMeadOptions {
    NelderMeadOptions {
        max_iter: 6000,
        initial_step: 0.1,
        ..NelderMeadOptions::default()
    }
}

/// Fits on `(r - m) / s` where the recursion is well scaled; the seed is
/// then exactly 0 and `omega' = omega - (1 - beta) ln s^2`.
fn fit_standardized(
    standardized: &[f64],
    start: &[f64],
    dist: Innovation,
) -> Result<(Vec<f64>, f64, bool, usize)> {
    let transform = BoxTransform::new(vec![
        Bound::Free,
        Bound::Free,
        Bound::Free,
        Bound::Free,
        Bound::Interval(-1.0, 1.0),
    ]);
    let objective = |x: &[f64]| {
        recursion(&EgarchParams::from_slice(x), standardized, 0.0, dist, Guard::Clamp, None)
            .unwrap_or(f64::INFINITY)
    };
    let res = constrained_minimize(objective, start, &transform, &optimizer_options())
        .map_err(|e| Error::OptimizationFailed(e.to_string()))?;
    Ok((res.x_opt, res.f_opt, res.converged, res.iterations))
}

fn to_original(x: &[f64], m: f64, s: f64) -> EgarchParams {
    let beta = x[4];
    EgarchParams {
        mu: m + s * x[0],
        omega: x[1] + (1.0 - beta) * (s * s).ln(),
        alpha: x[2],
        gamma: x[3],
        beta,
    }
}

/// Maximum-likelihood EGARCH(1,1) from `mu = mean`, `beta = 0.9`,
/// `alpha = 0.1`, `gamma = 0`, `omega = (1 - beta) ln(sample variance)`.
pub fn fit_egarch(returns: &[f64], choice: InnovationChoice) -> Result<EgarchFit> {
    check_returns(returns, 100)?;
    let n = returns.len();
    let m = returns.iter().sum::<f64>() / n as f64;
    let var = sample_variance(returns);
    let s = var.sqrt();
    let standardized: Vec<f64> = returns.iter().map(|r| (r - m) / s).collect();
    let start = [0.0, 0.0, 0.1, 0.0, 0.9];
    let init = EgarchParams {
        mu: m,
        omega: (1.0 - 0.9) * var.ln(),
        alpha: 0.1,
        gamma: 0.0,
        beta: 0.9,
    };

    let (x, _, converged, iterations) = fit_standardized(&standardized, &start, Innovation::Normal)?;
    let (mut x, mut dist, mut converged, mut iterations) = (x, Innovation::Normal, converged, iterations);
    if choice == InnovationChoice::StudentT {
        let mut best = f64::INFINITY;
        let warm = x.clone();
        for nu in 4..=30 {
            let d = Innovation::StudentT { nu: nu as f64 };
            let (xn, f, c, it) = fit_standardized(&standardized, &warm, d)?;
            if f < best {
                best = f;
                (x, dist, converged, iterations) = (xn, d, c, it);
            }
        }
    }
    if !converged {
        return Err(Error::OptimizationFailed(format!(
            "EGARCH likelihood did not converge in {iterations} iterations"
        )));
    }

    let init_loglik = -egarch_neg_loglik_with(&init, returns, dist)?;
    let mut params = to_original(&x, m, s);
    let mut loglik = match egarch_neg_loglik_with(&params, returns, dist) {
        Ok(v) => -v,
        Err(_) => f64::NEG_INFINITY,
    };
    if !(loglik >= init_loglik) {
        params = init;
        loglik = init_loglik;
    }
    let (sigma_path, z_path) = egarch_filter(&params, returns)?;
    Ok(EgarchFit {
        params,
        sigma_path,
        z_path,
        loglik,
        innovation_dist: dist,
        init_loglik,
        converged,
        iterations,
    })
}
