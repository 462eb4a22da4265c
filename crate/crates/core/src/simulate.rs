//! Seeded synthetic processes with known parameters.
//!
//! Every draw comes from `ChaCha8Rng::seed_from_u64(seed)`, which is
//! platform independent. Recursive processes discard [`BURN_IN`] steps.

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::egarch::EgarchParams;
use crate::error::{Error, Result};
use crate::panel::{Panel, PanelKind};

pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha 0.9) seed_from_u64";
pub const BURN_IN: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Process {
    /// Independent `N(0, sd^2)` columns.
    WhiteNoise { columns: usize, sd: f64 },
    /// Independent Gaussian random walks started at 0.
    RandomWalk { columns: usize, sd: f64 },
    /// `y_t = phi y_{t-1} + e_t`, unit innovations.
    Ar1 { phi: f64 },
    /// `x` a unit random walk, `y = beta x + noise_sd u`.
    CointegratedPair { beta: f64, noise_sd: f64 },
    /// `y_t = B y_{t-1} + e_t`, `e_t ~ N(0, Sigma)`.
    Var1 { b: Vec<Vec<f64>>, sigma: Vec<Vec<f64>> },
    /// One EGARCH(1,1) return series with Gaussian innovations.
    Egarch { params: EgarchParams },
    /// EGARCH margins with DCC(1,1)-correlated innovations.
    DccEgarch {
        margins: Vec<EgarchParams>,
        alpha: f64,
        beta: f64,
        qbar: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub process: Process,
    pub n: usize,
    pub seed: u64,
}

/// Sidecar describing how a simulated panel was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetadata {
    pub spec: SimSpec,
    pub generator: String,
    pub burn_in: usize,
}

pub fn metadata(spec: &SimSpec) -> SimMetadata {
    SimMetadata {
        spec: spec.clone(),
        generator: GENERATOR.to_string(),
        burn_in: if is_recursive(&spec.process) { BURN_IN } else { 0 },
    }
}

fn is_recursive(p: &Process) -> bool {
    !matches!(
        p,
        Process::WhiteNoise { .. } | Process::RandomWalk { .. } | Process::CointegratedPair { .. }
    )
}

/// `n` weekdays starting at 2021-01-04.
pub fn business_days(n: usize) -> Vec<NaiveDate> {
    let mut d = NaiveDate::from_ymd_opt(2021, 1, 4).expect("valid date");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

fn infeasible(msg: impl Into<String>) -> Error {
    Error::InfeasibleSpec(msg.into())
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn square(m: &[Vec<f64>], n: usize) -> Option<DMatrix<f64>> {
    (m.len() == n && m.iter().all(|r| r.len() == n && r.iter().all(|v| v.is_finite())))
        .then(|| DMatrix::from_fn(n, n, |i, j| m[i][j]))
}

fn check_margin(p: &EgarchParams) -> Result<()> {
    let finite = [p.mu, p.omega, p.alpha, p.gamma, p.beta].iter().all(|v| v.is_finite());
    if finite && p.beta.abs() < 1.0 {
        Ok(())
    } else {
        Err(infeasible("EGARCH margin needs finite parameters and |beta| < 1"))
    }
}

fn names(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

/// Draws the panel described by `spec`.
pub fn simulate(spec: &SimSpec) -> Result<Panel> {
    if spec.n == 0 {
        return Err(infeasible("n must be >= 1"));
    }
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (names, columns, kind) = match &spec.process {
        Process::WhiteNoise { columns, sd } | Process::RandomWalk { columns, sd } => {
            if *columns == 0 || !(*sd > 0.0 && sd.is_finite()) {
                return Err(infeasible("need >= 1 column and a positive finite sd"));
            }
            let walk = matches!(spec.process, Process::RandomWalk { .. });
            let mut cols = vec![Vec::with_capacity(n); *columns];
            let mut level = vec![0.0; *columns];
            for _ in 0..n {
                for (c, l) in cols.iter_mut().zip(level.iter_mut()) {
                    let e = sd * normal(&mut rng);
                    if walk {
                        *l += e;
                        c.push(*l);
                    } else {
                        c.push(e);
                    }
                }
            }
            if walk {
                (names("w", *columns), cols, PanelKind::Level)
            } else {
                (names("e", *columns), cols, PanelKind::LogReturn)
            }
        }
        Process::Ar1 { phi } => {
            if !(phi.abs() < 1.0) {
                return Err(infeasible("AR(1) needs |phi| < 1"));
            }
            let mut y = 0.0;
            let mut col = Vec::with_capacity(n);
            for t in 0..BURN_IN + n {
                y = phi * y + normal(&mut rng);
                if t >= BURN_IN {
                    col.push(y);
                }
            }
            (vec!["y".to_string()], vec![col], PanelKind::Level)
        }
        Process::CointegratedPair { beta, noise_sd } => {
            if !beta.is_finite() || !(*noise_sd > 0.0 && noise_sd.is_finite()) {
                return Err(infeasible("cointegrated pair needs finite beta and positive noise_sd"));
            }
            let mut x = 0.0;
            let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for _ in 0..n {
                x += normal(&mut rng);
                xs.push(x);
                ys.push(beta * x + noise_sd * normal(&mut rng));
            }
            (vec!["y".to_string(), "x".to_string()], vec![ys, xs], PanelKind::Level)
        }
        Process::Var1 { b, sigma } => simulate_var1(b, sigma, n, &mut rng)?,
        Process::Egarch { params } => {
            check_margin(params)?;
            let mut log_var = params.omega / (1.0 - params.beta);
            let mut z = 0.0;
            let mut col = Vec::with_capacity(n);
            for t in 0..BURN_IN + n {
                log_var = params.next_log_var(log_var, z);
                z = normal(&mut rng);
                if t >= BURN_IN {
                    col.push(params.mu + (0.5 * log_var).exp() * z);
                }
            }
            (vec!["r".to_string()], vec![col], PanelKind::LogReturn)
        }
        Process::DccEgarch {
            margins,
            alpha,
            beta,
            qbar,
        } => simulate_dcc(margins, *alpha, *beta, qbar, n, &mut rng)?,
    };
    Panel::new(business_days(n), names, columns, kind)
}

type Drawn = (Vec<String>, Vec<Vec<f64>>, PanelKind);

fn simulate_var1(b: &[Vec<f64>], sigma: &[Vec<f64>], n: usize, rng: &mut ChaCha8Rng) -> Result<Drawn> {
    let k = b.len();
    let bm = square(b, k).filter(|_| k > 0).ok_or_else(|| infeasible("B must be square and finite"))?;
    let sm = square(sigma, k).ok_or_else(|| infeasible("Sigma must match B"))?;
    if bm.complex_eigenvalues().iter().any(|z| z.norm() >= 1.0) {
        return Err(infeasible("VAR(1) coefficient matrix is not stable"));
    }
    let chol = sm.cholesky().ok_or_else(|| infeasible("Sigma is not positive definite"))?.l();
    let mut y = vec![0.0; k];
    let mut cols = vec![Vec::with_capacity(n); k];
    let mut u = vec![0.0; k];
    for t in 0..BURN_IN + n {
        for v in u.iter_mut() {
            *v = normal(rng);
        }
        let next: Vec<f64> = (0..k)
            .map(|i| {
                let ar: f64 = (0..k).map(|j| bm[(i, j)] * y[j]).sum();
                let e: f64 = (0..=i).map(|j| chol[(i, j)] * u[j]).sum();
                ar + e
            })
            .collect();
        y = next;
        if t >= BURN_IN {
            for (c, v) in cols.iter_mut().zip(&y) {
                c.push(*v);
            }
        }
    }
    Ok((names("y", k), cols, PanelKind::Level))
}

fn simulate_dcc(
    margins: &[EgarchParams],
    alpha: f64,
    beta: f64,
    qbar: &[Vec<f64>],
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Drawn> {
    let k = margins.len();
    if k < 2 {
        return Err(infeasible("DCC simulation needs >= 2 margins"));
    }
    margins.iter().try_for_each(check_margin)?;
    if !(alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0) {
        return Err(infeasible("DCC needs alpha, beta >= 0 and alpha + beta < 1"));
    }
    let qb = square(qbar, k).ok_or_else(|| infeasible("Qbar must be N x N"))?;
    if qb.clone().cholesky().is_none() || (0..k).any(|i| (0..k).any(|j| qb[(i, j)] != qb[(j, i)])) {
        return Err(infeasible("Qbar must be symmetric positive definite"));
    }
    let mut q = qb.clone();
    let mut z = vec![0.0; k];
    let mut log_var: Vec<f64> = margins.iter().map(|m| m.omega / (1.0 - m.beta)).collect();
    let mut cols = vec![Vec::with_capacity(n); k];
    let mut u = vec![0.0; k];
    for t in 0..BURN_IN + n {
        if t > 0 {
            let zz = DMatrix::from_fn(k, k, |i, j| z[i] * z[j]);
            q = &qb * (1.0 - alpha - beta) + zz * alpha + &q * beta;
        }
        let r = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                1.0
            } else {
                q[(i, j)] / (q[(i, i)] * q[(j, j)]).sqrt()
            }
        });
        let l = r.cholesky().ok_or_else(|| infeasible("correlation matrix lost definiteness"))?.l();
        for (i, m) in margins.iter().enumerate() {
            log_var[i] = m.next_log_var(log_var[i], z[i]);
        }
        for v in u.iter_mut() {
            *v = normal(rng);
        }
        for i in 0..k {
            z[i] = (0..=i).map(|j| l[(i, j)] * u[j]).sum();
        }
        if t >= BURN_IN {
            for (i, m) in margins.iter().enumerate() {
                cols[i].push(m.mu + (0.5 * log_var[i]).exp() * z[i]);
            }
        }
    }
    Ok((names("r", k), cols, PanelKind::LogReturn))
}

/// Compounds a log-return panel into prices starting at `start`; the
/// output has one more row, dated one business day earlier.
pub fn prices_from_returns(returns: &Panel, start: &[f64]) -> Result<Panel> {
    if returns.kind() != PanelKind::LogReturn {
        return Err(Error::KindMismatch {
            expected: "log_return".into(),
            found: format!("{:?}", returns.kind()),
        });
    }
    if start.len() != returns.cols() || start.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::InvalidConfig("one positive start price per column".into()));
    }
    let mut first = returns.dates()[0] - Duration::days(1);
    while matches!(first.weekday(), Weekday::Sat | Weekday::Sun) {
        first -= Duration::days(1);
    }
    let mut dates = vec![first];
    dates.extend_from_slice(returns.dates());
    let columns = returns
        .columns()
        .iter()
        .zip(start)
        .map(|(r, &p0)| {
            let mut log_p = p0.ln();
            let mut col = vec![p0];
            for v in r {
                log_p += v;
                col.push(log_p.exp());
            }
            col
        })
        .collect();
    Panel::new(dates, returns.names().to_vec(), columns, PanelKind::Price)
}
