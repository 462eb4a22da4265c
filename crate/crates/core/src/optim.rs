//! Derivative-free minimization (Nelder-Mead with deterministic restarts),
//! central finite differences and bound-respecting reparametrizations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nelder-Mead settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    /// Iteration budget per run (restarts get their own budget).
    pub max_iter: usize,
    /// Stop when every vertex is within this distance (max norm) of the best.
    pub x_tol: f64,
    /// Stop when `f(worst) - f(best)` falls below this.
    pub f_tol: f64,
    /// Edge length of the initial axis-aligned simplex.
    pub initial_step: f64,
    /// Extra runs restarted from the incumbent optimum.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            x_tol: 1e-8,
            f_tol: 1e-12,
            initial_step: 0.1,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    SimplexSize,
    FunctionSpread,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub x_opt: Vec<f64>,
    /// `objective(x_opt)`, re-evaluated on return.
    pub f_opt: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination_reason: Termination,
    /// Best vertex value after each iteration, across all restarts.
    pub best_history: Vec<f64>,
}

fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

struct RunOutcome {
    best: Vec<f64>,
    best_f: f64,
    iterations: usize,
    reason: Termination,
}

fn run_simplex<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: &[f64],
    f_start: f64,
    opts: &NelderMeadOptions,
    history: &mut Vec<f64>,
) -> RunOutcome {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut values: Vec<f64> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    values.push(f_start);
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += opts.initial_step;
        values.push(eval(f, &v));
        simplex.push(v);
    }

    let mut order: Vec<usize> = (0..=n).collect();
    let mut iterations = 0;
    let reason = loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let (b, w, sw) = (order[0], order[n], order[n.saturating_sub(1)]);
        let diameter = simplex
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[b]).map(|(p, q)| (p - q).abs()))
            .fold(0.0, f64::max);
        let spread = values[w] - values[b];
        if diameter < opts.x_tol {
            break Termination::SimplexSize;
        }
        if spread.is_finite() && spread < opts.f_tol {
            break Termination::FunctionSpread;
        }
        if iterations >= opts.max_iter {
            break Termination::MaxIterations;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for &idx in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[idx]) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[w])
                .map(|(c, x)| c + t * (c - x))
                .collect()
        };
        let xr = along(1.0);
        let fr = eval(f, &xr);
        if fr < values[b] {
            let xe = along(2.0);
            let fe = eval(f, &xe);
            if fe < fr {
                simplex[w] = xe;
                values[w] = fe;
            } else {
                simplex[w] = xr;
                values[w] = fr;
            }
        } else if fr < values[sw] {
            simplex[w] = xr;
            values[w] = fr;
        } else {
            let (xc, fc, accept) = if fr < values[w] {
                let xc = along(0.5);
                let fc = eval(f, &xc);
                (xc, fc, fc <= fr)
            } else {
                let xc = along(-0.5);
                let fc = eval(f, &xc);
                (xc, fc, fc < values[w])
            };
            if accept {
                simplex[w] = xc;
                values[w] = fc;
            } else {
                let best = simplex[b].clone();
                for &idx in &order[1..] {
                    for (x, bx) in simplex[idx].iter_mut().zip(&best) {
                        *x = bx + 0.5 * (*x - bx);
                    }
                    values[idx] = eval(f, &simplex[idx]);
                }
            }
        }
        let best_now = values.iter().copied().fold(f64::INFINITY, f64::min);
        history.push(best_now);
    };
    let b = order[0];
    RunOutcome {
        best: simplex[b].clone(),
        best_f: values[b],
        iterations,
        reason,
    }
}

/// Minimizes `objective` from `x0` with the standard reflection, expansion,
/// contraction and shrink moves, then restarts from the incumbent.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    objective: F,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> Result<OptimResult> {
    let f0 = objective(x0);
    if !f0.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut history = Vec::new();
    let mut run = run_simplex(&objective, x0, f0, opts, &mut history);
    let mut iterations = run.iterations;
    for _ in 0..opts.restarts {
        let previous = run.best_f;
        let next = run_simplex(&objective, &run.best.clone(), run.best_f, opts, &mut history);
        iterations += next.iterations;
        let improved = next.best_f < previous;
        if next.best_f <= run.best_f {
            run = RunOutcome { iterations: 0, ..next };
        }
        if !improved || previous - run.best_f < opts.f_tol {
            break;
        }
    }
    let f_opt = objective(&run.best);
    Ok(OptimResult {
        x_opt: run.best,
        f_opt,
        iterations,
        converged: run.reason != Termination::MaxIterations,
        termination_reason: run.reason,
        best_history: history,
    })
}

/// Central-difference gradient `(f(x + eps e_i) - f(x - eps e_i)) / (2 eps)`.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(objective: F, x: &[f64], eps: f64) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + eps;
        let up = objective(&probe);
        probe[i] = orig - eps;
        let down = objective(&probe);
        probe[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        grad.push((up - down) / (2.0 * eps));
    }
    Ok(grad)
}

/// Default finite-difference step.
pub const FD_EPS: f64 = 1e-5;

/// Map between an unconstrained search space and a feasible parameter set.
pub trait ParamTransform {
    fn dim(&self) -> usize;
    fn to_constrained(&self, u: &[f64]) -> Vec<f64>;
    fn to_unconstrained(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn is_feasible(&self, x: &[f64]) -> bool;
}

/// Bounds on a single parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bound {
    /// Identity map.
    Free,
    /// `(lower, inf)` via `lower + exp(u)`.
    Lower(f64),
    /// `(-inf, upper)` via `upper - exp(u)`.
    Upper(f64),
    /// `(lower, upper)` via a logistic map.
    Interval(f64, f64),
}

// Keeps exp/logistic away from saturating onto the bound in f64.
const U_MIN: f64 = -30.0;
const U_MAX: f64 = 30.0;

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u.clamp(U_MIN, U_MAX)).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

impl Bound {
    fn forward(self, u: f64) -> f64 {
        match self {
            Bound::Free => u,
            Bound::Lower(a) => {
                let x = a + u.clamp(U_MIN, 700.0).exp();
                if x > a {
                    x
                } else {
                    a.next_up()
                }
            }
            Bound::Upper(b) => {
                let x = b - u.clamp(U_MIN, 700.0).exp();
                if x < b {
                    x
                } else {
                    b.next_down()
                }
            }
            Bound::Interval(a, b) => {
                let x = a + (b - a) * logistic(u);
                x.clamp(a.next_up(), b.next_down())
            }
        }
    }

    fn inverse(self, x: f64) -> f64 {
        match self {
            Bound::Free => x,
            Bound::Lower(a) => (x - a).ln(),
            Bound::Upper(b) => (b - x).ln(),
            Bound::Interval(a, b) => logit((x - a) / (b - a)),
        }
    }

    fn contains(self, x: f64) -> bool {
        x.is_finite()
            && match self {
                Bound::Free => true,
                Bound::Lower(a) => x > a,
                Bound::Upper(b) => x < b,
                Bound::Interval(a, b) => x > a && x < b,
            }
    }
}

/// Independent per-parameter bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxTransform {
    pub bounds: Vec<Bound>,
}

impl BoxTransform {
    pub fn new(bounds: Vec<Bound>) -> Self {
        Self { bounds }
    }

    /// Identity over `n` parameters.
    pub fn free(n: usize) -> Self {
        Self {
            bounds: vec![Bound::Free; n],
        }
    }
}

impl ParamTransform for BoxTransform {
    fn dim(&self) -> usize {
        self.bounds.len()
    }

    fn to_constrained(&self, u: &[f64]) -> Vec<f64> {
        self.bounds.iter().zip(u).map(|(b, &v)| b.forward(v)).collect()
    }

    fn to_unconstrained(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.is_feasible(x) {
            return Err(Error::InfeasibleStart);
        }
        Ok(self.bounds.iter().zip(x).map(|(b, &v)| b.inverse(v)).collect())
    }

    fn is_feasible(&self, x: &[f64]) -> bool {
        x.len() == self.bounds.len() && self.bounds.iter().zip(x).all(|(b, &v)| b.contains(v))
    }
}

/// `(alpha, beta)` with `alpha, beta > 0` and `alpha + beta < 1`, through
/// `alpha = s w`, `beta = s (1 - w)` with logistic `s` and `w`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimplexPair;

impl ParamTransform for SimplexPair {
    fn dim(&self) -> usize {
        2
    }

    fn to_constrained(&self, u: &[f64]) -> Vec<f64> {
        let s = logistic(u[0]);
        let w = logistic(u[1]);
        vec![s * w, s * (1.0 - w)]
    }

    fn to_unconstrained(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.is_feasible(x) {
            return Err(Error::InfeasibleStart);
        }
        let s = x[0] + x[1];
        Ok(vec![logit(s), logit(x[0] / s)])
    }

    fn is_feasible(&self, x: &[f64]) -> bool {
        x.len() == 2 && x[0] > 0.0 && x[1] > 0.0 && x[0] + x[1] < 1.0
    }
}

/// Nelder-Mead in the unconstrained space of `transform`; the result is
/// reported in the original parameters.
pub fn constrained_minimize<F, T>(
    objective: F,
    x0: &[f64],
    transform: &T,
    opts: &NelderMeadOptions,
) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64,
    T: ParamTransform + ?Sized,
{
    let u0 = transform.to_unconstrained(x0)?;
    let res = nelder_mead(|u| objective(&transform.to_constrained(u)), &u0, opts)?;
    let x_opt = transform.to_constrained(&res.x_opt);
    let f_opt = objective(&x_opt);
    Ok(OptimResult {
        x_opt,
        f_opt,
        ..res
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::cell::RefCell;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn quadratic_minimum() {
        let r = nelder_mead(|x| (x[0] - 3.0).powi(2), &[0.0], &NelderMeadOptions::default()).unwrap();
        assert!((r.x_opt[0] - 3.0).abs() < 1e-5);
        assert!(r.converged);
    }

    #[test]
    fn rosenbrock_benchmark() {
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &NelderMeadOptions::default()).unwrap();
        assert!(r.f_opt < 1e-6, "{r:?}");
        assert!(r.iterations <= 5000);
    }

    #[test]
    fn constant_objective_stops_immediately() {
        let r = nelder_mead(|_| 7.5, &[1.0, 2.0], &NelderMeadOptions::default()).unwrap();
        assert_eq!(r.f_opt, 7.5);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.termination_reason, Termination::FunctionSpread);
    }

    #[test]
    fn non_finite_start_is_rejected() {
        let r = nelder_mead(|_| f64::NAN, &[0.0], &NelderMeadOptions::default());
        assert_eq!(r.unwrap_err(), Error::NonFiniteObjective);
    }

    #[test]
    fn deterministic_and_monotone() {
        let opts = NelderMeadOptions::default();
        let a = nelder_mead(rosenbrock, &[-1.2, 1.0], &opts).unwrap();
        let b = nelder_mead(rosenbrock, &[-1.2, 1.0], &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.best_history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(a.f_opt, rosenbrock(&a.x_opt));
    }

    #[test]
    fn gradient_examples() {
        let g = fd_gradient(|x| x.iter().map(|v| v * v).sum(), &[1.0, 2.0], FD_EPS).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-9 && (g[1] - 4.0).abs() < 1e-9);
        let a = [0.5, -2.0, 3.0];
        let lin = |x: &[f64]| x.iter().zip(&a).map(|(p, q)| p * q).sum::<f64>();
        let g = fd_gradient(lin, &[0.1, 0.2, 0.3], FD_EPS).unwrap();
        for (gi, ai) in g.iter().zip(&a) {
            assert!((gi - ai).abs() < 1e-10);
        }
        let g = fd_gradient(|x| x[0].sin(), &[0.0], FD_EPS).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-8);
        assert_eq!(
            fd_gradient(|x| x[0].ln(), &[0.0], FD_EPS).unwrap_err(),
            Error::NonFiniteObjective
        );
    }

    #[test]
    fn interior_constrained_optimum() {
        let f = |x: &[f64]| (x[0] - 0.5).powi(2) + (x[1] - 0.3).powi(2);
        let r = constrained_minimize(f, &[0.1, 0.1], &SimplexPair, &NelderMeadOptions::default()).unwrap();
        assert!((r.x_opt[0] - 0.5).abs() < 1e-5 && (r.x_opt[1] - 0.3).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn boundary_seeking_objective_stays_feasible() {
        let seen = RefCell::new(Vec::new());
        let f = |x: &[f64]| {
            seen.borrow_mut().push((x[0], x[1]));
            (x[0] - 1.0).powi(2) + (x[1] - 0.5).powi(2)
        };
        let r = constrained_minimize(f, &[0.2, 0.2], &SimplexPair, &NelderMeadOptions::default()).unwrap();
        assert!(r.x_opt[0] + r.x_opt[1] < 1.0);
        assert!(seen.borrow().iter().all(|&(a, b)| a > 0.0 && b > 0.0 && a + b < 1.0));
        assert_eq!(
            constrained_minimize(f, &[0.7, 0.5], &SimplexPair, &NelderMeadOptions::default()).unwrap_err(),
            Error::InfeasibleStart
        );
    }

    #[test]
    fn identity_transform_matches_plain_simplex() {
        let opts = NelderMeadOptions::default();
        let plain = nelder_mead(rosenbrock, &[-1.2, 1.0], &opts).unwrap();
        let boxed = constrained_minimize(rosenbrock, &[-1.2, 1.0], &BoxTransform::free(2), &opts).unwrap();
        assert_eq!(plain, boxed);
    }

    #[test]
    fn box_bounds_are_respected() {
        let t = BoxTransform::new(vec![Bound::Lower(1.0), Bound::Upper(-1.0), Bound::Interval(-1.0, 1.0)]);
        let seen = RefCell::new(true);
        let f = |x: &[f64]| {
            if !t.is_feasible(x) {
                *seen.borrow_mut() = false;
            }
            x[0] + (-x[1]) + (x[2] - 5.0).powi(2)
        };
        let r = constrained_minimize(f, &[2.0, -2.0, 0.0], &t, &NelderMeadOptions::default()).unwrap();
        assert!(*seen.borrow());
        assert!(t.is_feasible(&r.x_opt));
        assert!(r.x_opt[2] > 0.99);
    }

    proptest! {
        #[test]
        fn transform_round_trip(a in 1e-6f64..0.98, frac in 0.001f64..0.999, x in -50.0f64..50.0) {
            let b = (1.0 - a) * frac;
            let back = SimplexPair.to_constrained(&SimplexPair.to_unconstrained(&[a, b]).unwrap());
            prop_assert!((back[0] - a).abs() < 1e-10 && (back[1] - b).abs() < 1e-10);

            let t = BoxTransform::new(vec![Bound::Free, Bound::Lower(-3.0), Bound::Interval(-1.0, 1.0)]);
            let p = [x, x.abs() - 2.9, (x / 51.0).clamp(-0.999, 0.999)];
            let q = t.to_constrained(&t.to_unconstrained(&p).unwrap());
            for (u, v) in p.iter().zip(&q) {
                prop_assert!((u - v).abs() < 1e-10 * (1.0 + u.abs()));
            }
        }

        #[test]
        fn transformed_values_strictly_inside(u in -1e3f64..1e3, v in -1e3f64..1e3) {
            let x = SimplexPair.to_constrained(&[u, v]);
            prop_assert!(SimplexPair.is_feasible(&x));
            let t = BoxTransform::new(vec![Bound::Interval(-1.0, 1.0), Bound::Lower(0.0)]);
            prop_assert!(t.is_feasible(&t.to_constrained(&[u, v])));
        }
    }
}
