//! Fixed-λ solves: damped Newton, minimal-branch sweeps and pull-in bracketing.

mod shooting;

pub use shooting::{oracle_table, shooting_oracle, terminal_value, ShootingParams, ShootingResult};

use serde::{Deserialize, Serialize};

use crate::error::{Error, NoConvergence, Result};
use crate::mesh::{self, RadialMesh, TridiagonalOperator};
use crate::problem::ProblemSpec;

pub const DEFAULT_TOL_NEWTON: f64 = 1e-8;
pub const DEFAULT_DELTA_REG: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 50;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonParams {
    /// Bound on the volume-weighted RMS residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterates are clamped to `1 - u >= delta_reg`.
    pub delta_reg: f64,
}

impl Default for NewtonParams {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL_NEWTON, max_iter: DEFAULT_MAX_ITER, delta_reg: DEFAULT_DELTA_REG }
    }
}

impl NewtonParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::domain("tol_newton must be positive"));
        }
        if !(self.delta_reg > 0.0 && self.delta_reg < 0.5) {
            return Err(Error::domain("delta_reg must lie in (0, 0.5)"));
        }
        if self.max_iter == 0 {
            return Err(Error::domain("max_iter must be positive"));
        }
        Ok(())
    }
}

/// Converged nodal solution; `u` has one value per mesh node with `u[M] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub u: Vec<f64>,
    pub lambda: f64,
    /// `u(0)`, which is also `max u` for these radial profiles.
    pub amplitude: f64,
    pub residual_norm: f64,
    pub newton_iters: usize,
    /// Max-norm of each accepted Newton increment.
    pub step_norms: Vec<f64>,
}

impl Solution {
    pub(crate) fn new(u: Vec<f64>, lambda: f64, residual_norm: f64, newton_iters: usize, step_norms: Vec<f64>) -> Self {
        let amplitude = u[0];
        debug_assert!(u.iter().all(|&v| v <= amplitude + 1e-9), "radial solution should peak at the axis");
        Self { u, lambda, amplitude, residual_norm, newton_iters, step_norms }
    }

    pub fn max_value(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn clamp_state(u: &mut [f64], delta_reg: f64) {
    let cap = 1.0 - delta_reg;
    let last = u.len() - 1;
    for v in u[..last].iter_mut() {
        if *v > cap {
            *v = cap;
        }
    }
    u[last] = 0.0;
}

/// Plain Thomas solve of a tridiagonal operator.
pub fn solve_tridiagonal(op: &TridiagonalOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    op.solve(rhs)
}

/// Damped Newton for `R(u) = 0` at fixed `λ`.
///
/// Iterates are clamped to `1 - u_i >= δ`, which is the capped nonlinearity
/// `(1-u)^{-2} ↦ δ^{-2}` read as a projection. Steps are halved while the
/// residual grows.
pub fn newton_solve(
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    lambda: f64,
    u_init: &[f64],
    params: &NewtonParams,
) -> Result<Solution> {
    params.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let m = mesh.intervals();
    if u_init.len() != m + 1 {
        return Err(Error::domain("initial guess must have one value per node"));
    }
    if u_init[..m].iter().any(|&v| !(v < 1.0)) {
        return Err(Error::domain("initial guess must stay below 1"));
    }
    let lap = mesh::assemble_laplacian(mesh);
    let mut u = u_init.to_vec();
    clamp_state(&mut u, params.delta_reg);
    let mut r = mesh::residual_with(&lap, mesh, spec, &u, lambda)?;
    let mut norm = mesh.rms(&r);
    let mut tol = params.tol.max(mesh::residual_floor(&lap, mesh, spec, &u, lambda));
    let mut steps = Vec::new();

    let fail = |u: Vec<f64>, it: usize, norm: f64| {
        Error::NoConvergence(Box::new(NoConvergence { lambda, iterations: it, residual_norm: norm, last_iterate: u }))
    };

    for it in 0..params.max_iter {
        if norm <= tol {
            return Ok(Solution::new(u, lambda, norm, it, steps));
        }
        let jac = mesh::jacobian_with(lap.clone(), mesh, spec, &u, lambda)?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = match jac.solve(&neg) {
            Ok(d) => d,
            Err(_) => return Err(fail(u, it, norm)),
        };
        let step_max = delta.iter().fold(0.0f64, |a, d| a.max(d.abs()));

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut trial = u.clone();
            for (ti, di) in trial.iter_mut().zip(&delta) {
                *ti += t * di;
            }
            clamp_state(&mut trial, params.delta_reg);
            let rt = mesh::residual_with(&lap, mesh, spec, &trial, lambda)?;
            let nt = mesh.rms(&rt);
            if nt.is_finite() && (nt <= norm || nt <= tol) {
                accepted = Some((trial, rt, nt));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, rt, nt)) => {
                u = trial;
                r = rt;
                norm = nt;
                tol = params.tol.max(mesh::residual_floor(&lap, mesh, spec, &u, lambda));
                steps.push(t * step_max);
            }
            None => return Err(fail(u, it + 1, norm)),
        }
    }
    if norm <= tol {
        let iters = params.max_iter;
        return Ok(Solution::new(u, lambda, norm, iters, steps));
    }
    Err(fail(u, params.max_iter, norm))
}

/// Result of a warm-started λ sweep along the minimal branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalSweep {
    pub solutions: Vec<Solution>,
    /// First grid value at which Newton failed, if any.
    pub failed_lambda: Option<f64>,
}

impl MinimalSweep {
    pub fn truncated(&self) -> bool {
        self.failed_lambda.is_some()
    }

    pub fn last_good_lambda(&self) -> Option<f64> {
        self.solutions.last().map(|s| s.lambda)
    }
}

/// Sweeps an increasing λ grid from `u ≡ 0`, warm-starting each solve from
/// the previous one. Newton from below tracks the minimal solution; the
/// sweep stops at the first failure.
pub fn minimal_branch(
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    lambda_grid: &[f64],
    params: &NewtonParams,
) -> Result<MinimalSweep> {
    if lambda_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("lambda grid must be strictly increasing"));
    }
    if lambda_grid.first().is_some_and(|&l| l < 0.0) {
        return Err(Error::domain("lambda grid must be nonnegative"));
    }
    let mut guess = vec![0.0; mesh.intervals() + 1];
    let mut solutions = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        match newton_solve(mesh, spec, lambda, &guess, params) {
            Ok(sol) => {
                guess.clone_from(&sol.u);
                solutions.push(sol);
            }
            Err(Error::NoConvergence(_)) => {
                return Ok(MinimalSweep { solutions, failed_lambda: Some(lambda) });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(MinimalSweep { solutions, failed_lambda: None })
}

/// Number of warm-start steps used to reach `lambda_lo` from zero.
const RAMP_STEPS: usize = 32;

/// Bisects on Newton success to locate the fold `λ*` of the minimal branch.
///
/// `lambda_lo` must be reachable by a warm-started ramp from `λ = 0` and a
/// solve at `lambda_hi` (warm-started from the low side) must fail.
pub fn pull_in_bisection(
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    lambda_lo: f64,
    lambda_hi: f64,
    tol_lambda: f64,
    params: &NewtonParams,
) -> Result<f64> {
    if !(lambda_lo >= 0.0 && lambda_hi > lambda_lo) {
        return Err(Error::Bracket(format!("need 0 <= lambda_lo < lambda_hi, got [{lambda_lo}, {lambda_hi}]")));
    }
    if !(tol_lambda > 0.0) {
        return Err(Error::domain("tol_lambda must be positive"));
    }
    let ramp: Vec<f64> = (1..=RAMP_STEPS).map(|k| lambda_lo * k as f64 / RAMP_STEPS as f64).collect();
    let sweep = if lambda_lo > 0.0 {
        minimal_branch(mesh, spec, &ramp, params)?
    } else {
        minimal_branch(mesh, spec, &[0.0], params)?
    };
    if sweep.truncated() {
        return Err(Error::Bracket(format!("no solution reached at lambda_lo = {lambda_lo}")));
    }
    let mut good = sweep.solutions.last().cloned().expect("ramp is nonempty");
    if newton_solve(mesh, spec, lambda_hi, &good.u, params).is_ok() {
        return Err(Error::Bracket(format!("Newton converged at lambda_hi = {lambda_hi}")));
    }
    let (mut lo, mut hi) = (lambda_lo, lambda_hi);
    while hi - lo > tol_lambda {
        let mid = 0.5 * (lo + hi);
        match newton_solve(mesh, spec, mid, &good.u, params) {
            Ok(sol) => {
                lo = mid;
                good = sol;
            }
            Err(Error::NoConvergence(_)) => hi = mid,
            Err(e) => return Err(e),
        }
    }
    Ok(0.5 * (lo + hi))
}
