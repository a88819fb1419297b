//! Quasi-Newton minimization and finite-difference gradient checking.
//!
//! [`minimize`] runs dense BFGS for small problems and L-BFGS otherwise, both
//! with a strong-Wolfe line search. Objectives report `+∞` (or any
//! non-finite value) at infeasible points; the line search treats those as a
//! failed sufficient-decrease test and shrinks the step.

mod gradcheck;
mod line_search;

pub use gradcheck::{check_gradient, GradCheckReport};

use serde::{Deserialize, Serialize};

/// A differentiable function `ℝⁿ → ℝ`.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    /// Value and gradient at `x`.
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>);

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x).0
    }
}

/// Wraps a closure returning `(value, gradient)`.
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>) + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnObjective { dim, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.f)(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iter: usize,
    /// Stop when `‖g‖ ≤ g_tol · max(1, |f|)`.
    pub g_tol: f64,
    /// Also stop when an iteration lowers `f` by less than
    /// `f_tol · max(1, |f|)`; `0` disables the test.
    pub f_tol: f64,
    /// L-BFGS history length.
    pub memory: usize,
    /// Dense BFGS is used below this dimension.
    pub dense_below: usize,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iter: 500,
            g_tol: 1e-6,
            f_tol: 0.0,
            memory: 20,
            dense_below: 200,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub value: f64,
    pub step: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    FunctionTolerance,
    MaxIterations,
    LineSearchFailed,
    NonFiniteStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub gradient_norm: f64,
    /// One entry per accepted iterate, starting with the initial point.
    pub trace: Vec<TraceEntry>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

enum Hessian {
    Dense(Vec<f64>, usize),
    Limited {
        memory: usize,
        s: std::collections::VecDeque<Vec<f64>>,
        y: std::collections::VecDeque<Vec<f64>>,
    },
}

impl Hessian {
    fn new(n: usize, cfg: &OptimizerConfig) -> Self {
        if n < cfg.dense_below {
            Hessian::Dense(identity(n), n)
        } else {
            Hessian::Limited {
                memory: cfg.memory.max(1),
                s: Default::default(),
                y: Default::default(),
            }
        }
    }

    fn reset(&mut self) {
        match self {
            Hessian::Dense(h, n) => *h = identity(*n),
            Hessian::Limited { s, y, .. } => {
                s.clear();
                y.clear();
            }
        }
    }

    /// `−H g`.
    fn direction(&self, g: &[f64]) -> Vec<f64> {
        match self {
            Hessian::Dense(h, n) => (0..*n).map(|i| -dot(&h[i * n..(i + 1) * n], g)).collect(),
            Hessian::Limited { s, y, .. } => {
                let mut q = g.to_vec();
                let k = s.len();
                let mut alpha = vec![0.0; k];
                let rho: Vec<f64> = (0..k).map(|i| 1.0 / dot(&s[i], &y[i])).collect();
                for i in (0..k).rev() {
                    alpha[i] = rho[i] * dot(&s[i], &q);
                    for (qj, yj) in q.iter_mut().zip(&y[i]) {
                        *qj -= alpha[i] * yj;
                    }
                }
                if k > 0 {
                    let gamma = dot(&s[k - 1], &y[k - 1]) / dot(&y[k - 1], &y[k - 1]);
                    q.iter_mut().for_each(|v| *v *= gamma);
                }
                for i in 0..k {
                    let beta = rho[i] * dot(&y[i], &q);
                    for (qj, sj) in q.iter_mut().zip(&s[i]) {
                        *qj += (alpha[i] - beta) * sj;
                    }
                }
                q.iter().map(|v| -v).collect()
            }
        }
    }

    fn update(&mut self, s_new: Vec<f64>, y_new: Vec<f64>, first: bool) {
        let sy = dot(&s_new, &y_new);
        if !(sy > 1e-12 * norm(&s_new) * norm(&y_new)) {
            return;
        }
        match self {
            Hessian::Dense(h, n) => {
                let n = *n;
                if first {
                    // scale the initial identity as L-BFGS does
                    let gamma = sy / dot(&y_new, &y_new);
                    h.iter_mut().for_each(|v| *v *= gamma);
                }
                let rho = 1.0 / sy;
                let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y_new)).collect();
                let yhy = dot(&y_new, &hy);
                let coef = (1.0 + rho * yhy) * rho;
                for i in 0..n {
                    for j in 0..n {
                        h[i * n + j] += coef * s_new[i] * s_new[j] - rho * (hy[i] * s_new[j] + s_new[i] * hy[j]);
                    }
                }
            }
            Hessian::Limited { memory, s, y } => {
                if s.len() == *memory {
                    s.pop_front();
                    y.pop_front();
                }
                s.push_back(s_new);
                y.push_back(y_new);
            }
        }
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

/// Minimizes `obj` from `x0`.
pub fn minimize(obj: &dyn Objective, x0: &[f64], cfg: &OptimizerConfig) -> OptimizeReport {
    let n = obj.dim();
    assert_eq!(x0.len(), n, "starting point has the wrong dimension");
    let mut x = x0.to_vec();
    let (mut f, mut g) = obj.eval(&x);
    let mut evaluations = 1;
    let mut gn = norm(&g);
    let mut trace = vec![TraceEntry {
        iteration: 0,
        value: f,
        step: 0.0,
        gradient_norm: gn,
    }];
    let finish = |x: Vec<f64>, f: f64, gn: f64, it: usize, ev: usize, term: Termination, trace: Vec<TraceEntry>| {
        OptimizeReport {
            x,
            f,
            iterations: it,
            evaluations: ev,
            converged: matches!(term, Termination::GradientTolerance | Termination::FunctionTolerance),
            termination: term,
            gradient_norm: gn,
            trace,
        }
    };
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return finish(x, f, gn, 0, evaluations, Termination::NonFiniteStart, trace);
    }
    if n == 0 || gn <= cfg.g_tol * f.abs().max(1.0) {
        return finish(x, f, gn, 0, evaluations, Termination::GradientTolerance, trace);
    }
    let mut hess = Hessian::new(n, cfg);
    let mut first_update = true;
    for it in 1..=cfg.max_iter {
        let mut d = hess.direction(&g);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hess.reset();
            first_update = true;
            d = g.iter().map(|v| -v).collect();
            slope = -gn * gn;
        }
        let alpha0 = if trace.len() == 1 || first_update {
            (1.0 / norm(&d)).min(1.0)
        } else {
            1.0
        };
        let ls = line_search::strong_wolfe(obj, &x, f, slope, &d, alpha0, cfg);
        evaluations += ls.evaluations;
        let Some(acc) = ls.accepted else {
            if !first_update {
                // one retry along steepest descent with a fresh model
                hess.reset();
                first_update = true;
                continue;
            }
            return finish(x, f, gn, it - 1, evaluations, Termination::LineSearchFailed, trace);
        };
        let s: Vec<f64> = d.iter().map(|v| acc.alpha * v).collect();
        let y: Vec<f64> = acc.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let f_old = f;
        x = acc.x;
        f = acc.f;
        g = acc.g;
        gn = norm(&g);
        trace.push(TraceEntry {
            iteration: it,
            value: f,
            step: acc.alpha,
            gradient_norm: gn,
        });
        hess.update(s, y, first_update);
        first_update = false;
        if gn <= cfg.g_tol * f.abs().max(1.0) {
            return finish(x, f, gn, it, evaluations, Termination::GradientTolerance, trace);
        }
        if cfg.f_tol > 0.0 && f_old - f <= cfg.f_tol * f.abs().max(1.0) {
            return finish(x, f, gn, it, evaluations, Termination::FunctionTolerance, trace);
        }
    }
    let it = cfg.max_iter;
    finish(x, f, gn, it, evaluations, Termination::MaxIterations, trace)
}
