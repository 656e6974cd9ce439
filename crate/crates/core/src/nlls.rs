//! Dense Levenberg-Marquardt for small unconstrained least-squares problems.
//!
//! Minimizes `½‖r(x)‖²` with steps `(JᵀJ + µ·D)δ = −Jᵀr`, where `D` is the
//! diagonal of `JᵀJ` (Marquardt scaling). `µ` shrinks by `damping_decrease`
//! on every accepted step and grows by `damping_increase` on every rejected
//! one. After a step whose actual cost reduction closely matches the
//! quadratic model (gain ratio above 0.75) the next iteration first tries
//! the undamped Gauss-Newton step, and falls back to the damped step if that
//! does not reduce the cost.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::abs;

const DAMPING_CEILING: f64 = 1e16;
const DAMPING_FLOOR: f64 = 1e-15;
const GAIN_RATIO_UNDAMPED: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LmError {
    #[error("residual is not finite at the starting point")]
    NonFiniteInitialResidual,
    #[error("residual is not finite at a finite-difference probe")]
    NonFiniteProbe,
    #[error("problem has no parameters")]
    EmptyProblem,
    #[error("invalid solver options: {0}")]
    InvalidOptions(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when `‖Jᵀr‖∞` falls below this.
    pub gradient_tolerance: f64,
    /// Stop when an accepted step satisfies `‖δ‖ ≤ tol·(‖x‖ + tol)`.
    pub step_tolerance: f64,
    pub initial_damping: f64,
    pub damping_increase: f64,
    pub damping_decrease: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-10,
            step_tolerance: 1e-12,
            initial_damping: 1e-3,
            damping_increase: 10.0,
            damping_decrease: 0.1,
        }
    }
}

impl LmOptions {
    pub fn validate(&self) -> Result<(), LmError> {
        if !(self.gradient_tolerance > 0.0 && self.step_tolerance > 0.0 && self.initial_damping > 0.0) {
            return Err(LmError::InvalidOptions("tolerances and initial damping must be positive"));
        }
        if !(self.damping_increase > 1.0) {
            return Err(LmError::InvalidOptions("damping increase must exceed 1"));
        }
        if !(self.damping_decrease > 0.0 && self.damping_decrease < 1.0) {
            return Err(LmError::InvalidOptions("damping decrease must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmStatus {
    Converged,
    MaxIterations,
    /// Damping escalated past its ceiling without finding a descent step.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmResult {
    pub solution: Vec<f64>,
    /// Final `½‖r‖²`.
    pub cost: f64,
    pub iterations: usize,
    pub status: LmStatus,
    /// Cost at the start and after every accepted step.
    pub cost_history: Vec<f64>,
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A residual vector `r: ℝⁿ → ℝᵐ`, optionally with an analytic Jacobian.
pub trait Residuals {
    fn num_residuals(&self) -> usize;

    fn residuals(&self, x: &[f64], out: &mut [f64]);

    /// Fill `jac` (m × n) and return `true`, or return `false` to fall back
    /// to central finite differences.
    fn jacobian(&self, _x: &[f64], _jac: &mut Matrix) -> bool {
        false
    }
}

/// Adapter for a plain closure without an analytic Jacobian.
pub struct FnResiduals<F> {
    m: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnResiduals<F> {
    pub fn new(num_residuals: usize, f: F) -> Self {
        Self { m: num_residuals, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> Residuals for FnResiduals<F> {
    fn num_residuals(&self) -> usize {
        self.m
    }

    fn residuals(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
}

/// Central-difference Jacobian with per-column step `1e-6·max(1, |x_i|)`.
pub fn finite_difference_jacobian<P: Residuals + ?Sized>(problem: &P, x: &[f64]) -> Result<Matrix, LmError> {
    let m = problem.num_residuals();
    let n = x.len();
    let mut jac = Matrix::zeros(m, n);
    let mut probe = x.to_vec();
    let mut plus = vec![0.0; m];
    let mut minus = vec![0.0; m];
    for j in 0..n {
        let h = 1e-6 * x[j].abs().max(1.0);
        probe[j] = x[j] + h;
        problem.residuals(&probe, &mut plus);
        probe[j] = x[j] - h;
        problem.residuals(&probe, &mut minus);
        probe[j] = x[j];
        // The realized step differs from h by rounding; divide by it.
        let span = (x[j] + h) - (x[j] - h);
        for i in 0..m {
            if !plus[i].is_finite() || !minus[i].is_finite() {
                return Err(LmError::NonFiniteProbe);
            }
            jac.set(i, j, (plus[i] - minus[i]) / span);
        }
    }
    Ok(jac)
}

fn half_norm_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

fn norm(v: &[f64]) -> f64 {
    crate::math::sqrt(v.iter().map(|a| a * a).sum())
}

/// Solves `a·x = b` for square `a` by Gaussian elimination with partial
/// pivoting. Returns `None` if a pivot is negligible relative to the matrix.
fn solve_dense(mut a: Matrix, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.rows;
    let scale = a.data.iter().fold(0.0f64, |m, v| m.max(abs(*v)));
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    let eps = scale * 1e-14;
    for col in 0..n {
        let (pivot, pmag) = (col..n)
            .map(|r| (r, abs(a.get(r, col))))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmag <= eps {
            return None;
        }
        if pivot != col {
            for c in 0..n {
                a.data.swap(pivot * n + c, col * n + c);
            }
            b.swap(pivot, col);
        }
        let d = a.get(col, col);
        for r in (col + 1)..n {
            let f = a.get(r, col) / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                let v = a.get(r, c) - f * a.get(col, c);
                a.set(r, c, v);
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in (row + 1)..n {
            s -= a.get(row, c) * x[c];
        }
        x[row] = s / a.get(row, row);
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn evaluate_jacobian<P: Residuals + ?Sized>(problem: &P, x: &[f64], jac: &mut Matrix) -> Result<(), LmError> {
    if problem.jacobian(x, jac) && jac.is_finite() {
        return Ok(());
    }
    *jac = finite_difference_jacobian(problem, x)?;
    Ok(())
}

/// Runs Levenberg-Marquardt from `x0`.
pub fn lm_solve<P: Residuals + ?Sized>(problem: &P, x0: &[f64], opts: &LmOptions) -> Result<LmResult, LmError> {
    opts.validate()?;
    let n = x0.len();
    if n == 0 {
        return Err(LmError::EmptyProblem);
    }
    let m = problem.num_residuals();

    let mut x = x0.to_vec();
    let mut r = vec![0.0; m];
    problem.residuals(&x, &mut r);
    if !r.iter().all(|v| v.is_finite()) {
        return Err(LmError::NonFiniteInitialResidual);
    }
    let mut cost = half_norm_sq(&r);
    let mut history = vec![cost];

    let mut mu = opts.initial_damping;
    let mut try_undamped = false;
    let mut iterations = 0;
    let mut jac = Matrix::zeros(m, n);
    let mut r_new = vec![0.0; m];
    let mut x_new = vec![0.0; n];

    let status = 'outer: loop {
        if cost == 0.0 {
            break LmStatus::Converged;
        }
        if iterations >= opts.max_iterations {
            break LmStatus::MaxIterations;
        }
        evaluate_jacobian(problem, &x, &mut jac)?;

        // Normal equations.
        let mut jtj = Matrix::zeros(n, n);
        let mut grad = vec![0.0; n];
        for i in 0..m {
            let row = &jac.data[i * n..(i + 1) * n];
            for a in 0..n {
                grad[a] += row[a] * r[i];
                for b in a..n {
                    jtj.data[a * n + b] += row[a] * row[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                jtj.data[a * n + b] = jtj.data[b * n + a];
            }
        }
        if grad.iter().all(|g| abs(*g) <= opts.gradient_tolerance) {
            break LmStatus::Converged;
        }
        let max_diag = (0..n).map(|i| jtj.get(i, i)).fold(0.0f64, f64::max);
        let scaling: Vec<f64> = (0..n)
            .map(|i| jtj.get(i, i).max(max_diag * 1e-12).max(f64::MIN_POSITIVE))
            .collect();
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();

        iterations += 1;
        loop {
            let damping = if try_undamped { 0.0 } else { mu };
            let mut lhs = jtj.clone();
            for i in 0..n {
                lhs.data[i * n + i] += damping * scaling[i];
            }
            let Some(step) = solve_dense(lhs, rhs.clone()) else {
                if try_undamped {
                    try_undamped = false;
                } else {
                    mu *= opts.damping_increase;
                    if mu > DAMPING_CEILING {
                        break 'outer LmStatus::Stalled;
                    }
                }
                continue;
            };
            for i in 0..n {
                x_new[i] = x[i] + step[i];
            }
            problem.residuals(&x_new, &mut r_new);
            let new_cost = half_norm_sq(&r_new);
            if new_cost.is_finite() && new_cost < cost {
                // Predicted reduction of the quadratic model: −gᵀδ − ½δᵀJᵀJδ.
                let mut quad = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        quad += step[a] * jtj.get(a, b) * step[b];
                    }
                }
                let predicted = -grad.iter().zip(&step).map(|(g, s)| g * s).sum::<f64>() - 0.5 * quad;
                let gain = if predicted > 0.0 { (cost - new_cost) / predicted } else { 0.0 };
                if !try_undamped {
                    mu = (mu * opts.damping_decrease).max(DAMPING_FLOOR);
                }
                try_undamped = gain > GAIN_RATIO_UNDAMPED;
                core::mem::swap(&mut x, &mut x_new);
                core::mem::swap(&mut r, &mut r_new);
                cost = new_cost;
                history.push(cost);
                if norm(&step) <= opts.step_tolerance * (norm(&x) + opts.step_tolerance) {
                    break 'outer LmStatus::Converged;
                }
                break;
            }
            if try_undamped {
                try_undamped = false;
                continue;
            }
            mu *= opts.damping_increase;
            if mu > DAMPING_CEILING {
                break 'outer LmStatus::Stalled;
            }
        }
    };

    Ok(LmResult { solution: x, cost, iterations, status, cost_history: history })
}
