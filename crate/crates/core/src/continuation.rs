//! Pseudo-arclength continuation of the solution branch through its folds.
//!
//! The unknowns are the nodal values `u` and `λ`. Each step predicts along
//! the unit tangent and corrects with Newton on the bordered system
//!
//! ```text
//!   [ J    F_λ ] [δu]   [ -F ]
//!   [ Gτ_u Gτ_λ] [δλ] = [ -c ]
//! ```
//!
//! which stays regular at folds where `J` alone is singular. The inner
//! product `G` combines `λ / λ_s`, `u(0) / (1 - u(0))` and a volume-weighted
//! `L²` term, so one unit of arclength near quenching is one unit of
//! `-ln(1 - u(0))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_bordered;
use crate::mesh::{self, RadialMesh};
use crate::problem::ProblemSpec;
use crate::solver::{self, NewtonParams, Solution};
use crate::spectrum::{self, StabilitySummary};

const MAX_CORRECTOR: usize = 12;
const EASY_ITERS: usize = 3;
const GROWTH: f64 = 1.3;
const MIN_DS_DIVISOR: f64 = 1024.0;
const MAX_DS_FACTOR: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationParams {
    pub ds0: f64,
    pub amplitude_max: f64,
    pub max_steps: usize,
    /// Keep full nodal vectors every `thin_every` points (and at folds).
    pub thin_every: usize,
    /// Minimum λ excursion on both sides of a fold.
    pub fold_hysteresis: f64,
    pub newton: NewtonParams,
}

impl Default for ContinuationParams {
    fn default() -> Self {
        Self {
            ds0: 0.01,
            amplitude_max: 0.999,
            max_steps: 20_000,
            thin_every: 10,
            fold_hysteresis: 1e-10,
            newton: NewtonParams::default(),
        }
    }
}

impl ContinuationParams {
    fn validate(&self) -> Result<()> {
        self.newton.validate()?;
        if !(self.ds0 > 0.0 && self.ds0.is_finite()) {
            return Err(Error::domain(format!("ds0 must be positive, got {}", self.ds0)));
        }
        if !(self.amplitude_max > 0.0 && self.amplitude_max < 1.0 - self.newton.delta_reg) {
            return Err(Error::domain(format!(
                "amplitude_max must lie in (0, 1 - delta_reg), got {}",
                self.amplitude_max
            )));
        }
        if self.max_steps == 0 || self.thin_every == 0 {
            return Err(Error::domain("max_steps and thin_every must be positive"));
        }
        if !(self.fold_hysteresis >= 0.0) {
            return Err(Error::domain("fold hysteresis must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    /// Arclength in the `G` metric.
    pub t: f64,
    pub lambda: f64,
    pub amplitude: f64,
    pub mu1: f64,
    /// The eigenvalue of smallest magnitude; this is the one that crosses
    /// zero at a fold.
    pub mu_near_zero: f64,
    pub morse_index_radial: usize,
    pub is_fold: bool,
    pub solution: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    /// Index of the stored point nearest the turning point.
    pub index: usize,
    /// Vertex of the local quadratic fit of `λ(t)`.
    pub lambda: f64,
    pub t: f64,
    /// Disagreement between two neighbouring quadratic fits.
    pub refinement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    AmplitudeReached,
    StepsExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchMetadata {
    pub spec: ProblemSpec,
    pub intervals: usize,
    pub gamma: f64,
    pub params: ContinuationParams,
    pub steps_taken: usize,
    pub rejected_steps: usize,
    pub final_ds: f64,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub folds: Vec<Fold>,
    pub metadata: BranchMetadata,
}

impl Branch {
    pub fn lambdas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn final_point(&self) -> &BranchPoint {
        self.points.last().expect("branch is never empty")
    }
}

/// Diagonal inner product on `(u_0..u_{M-1}, λ)`, frozen at one point.
struct Metric {
    u: Vec<f64>,
    lambda: f64,
}

impl Metric {
    fn at(mesh: &RadialMesh, lambda_ref: f64, amplitude: f64) -> Self {
        let m = mesh.intervals();
        let vol = mesh.volume();
        let gap = 1.0 - amplitude;
        let scale = 1.0 / (gap * gap);
        let mut u: Vec<f64> = mesh.weights()[..m].iter().map(|w| w / vol * scale).collect();
        u[0] += scale;
        Self { u, lambda: 1.0 / (lambda_ref * lambda_ref) }
    }

    fn dot(&self, a: &[f64], al: f64, b: &[f64], bl: f64) -> f64 {
        self.u.iter().zip(a).zip(b).map(|((g, x), y)| g * x * y).sum::<f64>() + self.lambda * al * bl
    }
}

struct State {
    u: Vec<f64>,
    lambda: f64,
}

struct Tangent {
    u: Vec<f64>,
    lambda: f64,
}

fn tangent(mesh: &RadialMesh, spec: &ProblemSpec, state: &State, metric: &Metric, prev: &Tangent) -> Result<Tangent> {
    let m = mesh.intervals();
    let jac = mesh::assemble_jacobian(mesh, spec, &state.u, state.lambda)?;
    let f_lambda = mesh::lambda_derivative(mesh, spec, &state.u)?;
    let row: Vec<f64> = (0..m).map(|i| metric.u[i] * prev.u[i]).collect();
    let (du, dl) = solve_bordered(
        &jac.sub,
        &jac.diag,
        &jac.sup,
        &f_lambda,
        &row,
        metric.lambda * prev.lambda,
        &vec![0.0; m],
        1.0,
    )?;
    let norm = metric.dot(&du, dl, &du, dl).sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Pivot { row: m, pivot: norm });
    }
    let mut t = Tangent { u: du.iter().map(|v| v / norm).collect(), lambda: dl / norm };
    if metric.dot(&t.u, t.lambda, &prev.u, prev.lambda) < 0.0 {
        t.u.iter_mut().for_each(|v| *v = -*v);
        t.lambda = -t.lambda;
    }
    Ok(t)
}

/// Newton on the bordered system with a hyperplane constraint through the
/// predicted point. Returns the corrected state and the iteration count.
fn correct(
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    pred: State,
    tan: &Tangent,
    metric: &Metric,
    newton: &NewtonParams,
) -> Option<(State, usize, f64)> {
    let m = mesh.intervals();
    let lap = mesh::assemble_laplacian(mesh);
    let row: Vec<f64> = (0..m).map(|i| metric.u[i] * tan.u[i]).collect();
    let corner = metric.lambda * tan.lambda;
    let cap = 1.0 - newton.delta_reg;
    let mut u = pred.u.clone();
    let mut lambda = pred.lambda;
    let mut r = mesh::residual_with(&lap, mesh, spec, &u, lambda).ok()?;
    let mut norm = mesh.rms(&r);
    let start = norm;
    for it in 0..MAX_CORRECTOR {
        let jac = mesh::jacobian_with(lap.clone(), mesh, spec, &u, lambda).ok()?;
        let f_lambda = mesh::lambda_derivative(mesh, spec, &u).ok()?;
        let c: f64 = (0..m).map(|i| row[i] * (u[i] - pred.u[i])).sum::<f64>() + corner * (lambda - pred.lambda);
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let (du, dl) = solve_bordered(&jac.sub, &jac.diag, &jac.sup, &f_lambda, &row, corner, &neg, -c).ok()?;
        for (ui, di) in u.iter_mut().zip(&du) {
            *ui += di;
        }
        lambda += dl;
        if u[..m].iter().any(|&v| !(v < cap)) || !lambda.is_finite() {
            return None;
        }
        r = mesh::residual_with(&lap, mesh, spec, &u, lambda).ok()?;
        norm = mesh.rms(&r);
        if !norm.is_finite() || norm > 1e3 * start.max(newton.tol) {
            return None;
        }
        let step = du.iter().fold(dl.abs(), |a, d| a.max(d.abs()));
        let tol = newton.tol.max(mesh::residual_floor(&lap, mesh, spec, &u, lambda));
        if norm <= tol && step <= 1e-6 {
            return Some((State { u, lambda }, it + 1, norm));
        }
    }
    None
}

fn make_point(mesh: &RadialMesh, spec: &ProblemSpec, t: f64, state: &State) -> Result<BranchPoint> {
    let StabilitySummary { mu1, mu_near_zero, morse_index_radial } =
        spectrum::stability_summary(mesh, spec, &state.u, state.lambda)?;
    Ok(BranchPoint {
        t,
        lambda: state.lambda,
        amplitude: state.u[0],
        mu1,
        mu_near_zero,
        morse_index_radial,
        is_fold: false,
        solution: Some(state.u.clone()),
    })
}

/// Traces the branch from `(λ, u) = (0, 0)` until `u(0)` reaches
/// `amplitude_max` or the step budget runs out.
///
/// The last point is re-solved at exactly `amplitude_max` with
/// [`amplitude_solve_from`]. A step size underflow returns
/// [`Error::Stall`] carrying the partial branch.
pub fn trace_branch(mesh: &RadialMesh, spec: &ProblemSpec, params: &ContinuationParams) -> Result<Branch> {
    params.validate()?;
    if mesh.dimension() != spec.dimension() {
        return Err(Error::domain("mesh and problem dimensions differ"));
    }
    let m = mesh.intervals();
    let lambda_ref = spec.extremal().lambda_star.max(1e-3);
    let ds_min = params.ds0 / MIN_DS_DIVISOR;
    let ds_max = params.ds0 * MAX_DS_FACTOR;

    let mut state = State { u: vec![0.0; m + 1], lambda: 0.0 };
    let mut tan = Tangent { u: vec![0.0; m], lambda: 1.0 };
    let mut metric = Metric::at(mesh, lambda_ref, 0.0);
    tan = tangent(mesh, spec, &state, &metric, &tan)?;

    let mut points = vec![make_point(mesh, spec, 0.0, &state)?];
    let mut t = 0.0;
    let mut ds = params.ds0;
    let mut rejected = 0;
    let mut steps = 0;
    let mut termination = Termination::StepsExhausted;

    let finish = |points: Vec<BranchPoint>, steps, rejected, ds, termination| {
        let mut branch = Branch {
            points,
            folds: Vec::new(),
            metadata: BranchMetadata {
                spec: spec.clone(),
                intervals: m,
                gamma: mesh.gamma(),
                params: *params,
                steps_taken: steps,
                rejected_steps: rejected,
                final_ds: ds,
                termination,
            },
        };
        annotate_folds(&mut branch, params.fold_hysteresis);
        thin(&mut branch, params.thin_every);
        branch
    };

    while steps < params.max_steps {
        let mut pred_u = state.u.clone();
        for (x, t) in pred_u[..m].iter_mut().zip(&tan.u) {
            *x += ds * t;
        }
        let pred = State { u: pred_u, lambda: state.lambda + ds * tan.lambda };
        let outcome = if pred.u[..m].iter().all(|&v| v < 1.0 - params.newton.delta_reg) {
            correct(mesh, spec, pred, &tan, &metric, &params.newton)
        } else {
            None
        };
        let Some((next, iters, _)) = outcome else {
            rejected += 1;
            ds *= 0.5;
            if ds < ds_min {
                let branch = finish(points, steps, rejected, ds, Termination::StepsExhausted);
                return Err(Error::Stall(Box::new(branch)));
            }
            continue;
        };
        steps += 1;
        let dt = {
            let du: Vec<f64> = (0..m).map(|i| next.u[i] - state.u[i]).collect();
            let dl = next.lambda - state.lambda;
            metric.dot(&du, dl, &du, dl).sqrt()
        };
        t += dt;
        let reached = next.u[0] >= params.amplitude_max;
        if reached {
            let prev = points.last().expect("nonempty");
            let (a0, l0) = (prev.amplitude, prev.lambda);
            let (a1, l1) = (next.u[0], next.lambda);
            let w = (params.amplitude_max - a0) / (a1 - a0);
            let guess_u: Vec<f64> = state.u.iter().zip(&next.u).map(|(x, y)| x + w * (y - x)).collect();
            let guess_l = l0 + w * (l1 - l0);
            let end = match amplitude_solve_from(mesh, spec, params.amplitude_max, &guess_u, guess_l, &params.newton) {
                Ok(sol) => State { lambda: sol.lambda, u: sol.u },
                Err(_) => next,
            };
            let t_end = t - dt + w * dt;
            points.push(make_point(mesh, spec, t_end, &end)?);
            termination = Termination::AmplitudeReached;
            break;
        }
        metric = Metric::at(mesh, lambda_ref, next.u[0]);
        tan = tangent(mesh, spec, &next, &metric, &tan)?;
        points.push(make_point(mesh, spec, t, &next)?);
        state = next;
        if iters <= EASY_ITERS {
            ds = (ds * GROWTH).min(ds_max);
        }
    }
    Ok(finish(points, steps, rejected, ds, termination))
}

/// Indices of turning points in a λ sequence.
///
/// A zigzag filter: the running extremum becomes a fold once the sequence
/// has moved back from it by more than `hysteresis`. The sequence is
/// assumed to start out increasing.
pub fn fold_indices(lambdas: &[f64], hysteresis: f64) -> Vec<usize> {
    let mut folds = Vec::new();
    if lambdas.len() < 3 {
        return folds;
    }
    let mut rising = true;
    let mut ext = 0;
    let mut base = lambdas[0];
    for (i, &l) in lambdas.iter().enumerate().skip(1) {
        let better = if rising { l > lambdas[ext] } else { l < lambdas[ext] };
        if better {
            ext = i;
            continue;
        }
        let back = (l - lambdas[ext]).abs();
        let there = (lambdas[ext] - base).abs();
        if back > hysteresis && there > hysteresis && ext > 0 {
            folds.push(ext);
            base = lambdas[ext];
            rising = !rising;
            ext = i;
        }
    }
    folds
}

fn vertex(p: [(f64, f64); 3]) -> Option<(f64, f64)> {
    let [(t0, l0), (t1, l1), (t2, l2)] = p;
    let d01 = (l1 - l0) / (t1 - t0);
    let d12 = (l2 - l1) / (t2 - t1);
    let a = (d12 - d01) / (t2 - t0);
    if a == 0.0 || !a.is_finite() {
        return None;
    }
    let b = d01 - a * (t0 + t1);
    let tv = -b / (2.0 * a);
    let lv = l0 + d01 * (tv - t0) + a * (tv - t0) * (tv - t1);
    Some((tv, lv))
}

fn refine_fold(points: &[BranchPoint], i: usize) -> Fold {
    let at = |k: usize| (points[k].t, points[k].lambda);
    let fallback = Fold { index: i, lambda: points[i].lambda, t: points[i].t, refinement: 0.0 };
    if i == 0 || i + 1 >= points.len() {
        return fallback;
    }
    let Some((tv, lv)) = vertex([at(i - 1), at(i), at(i + 1)]) else {
        return fallback;
    };
    let alt = if i + 2 < points.len() {
        vertex([at(i), at(i + 1), at(i + 2)])
    } else if i >= 2 {
        vertex([at(i - 2), at(i - 1), at(i)])
    } else {
        None
    };
    let refinement = alt.map_or((lv - points[i].lambda).abs(), |(_, la)| (la - lv).abs());
    Fold { index: i, lambda: lv, t: tv, refinement }
}

/// Turning points of a traced branch, with quadratic vertex refinement.
pub fn detect_folds(branch: &Branch, hysteresis: f64) -> Vec<Fold> {
    fold_indices(&branch.lambdas(), hysteresis).into_iter().map(|i| refine_fold(&branch.points, i)).collect()
}

fn annotate_folds(branch: &mut Branch, hysteresis: f64) {
    branch.folds = detect_folds(branch, hysteresis);
    for p in branch.points.iter_mut() {
        p.is_fold = false;
    }
    for f in &branch.folds {
        branch.points[f.index].is_fold = true;
    }
}

fn thin(branch: &mut Branch, every: usize) {
    let n = branch.points.len();
    let mut keep = vec![false; n];
    for (k, flag) in keep.iter_mut().enumerate() {
        *flag = k % every == 0 || k + 1 == n;
    }
    for f in &branch.folds {
        keep[f.index.saturating_sub(1)..=(f.index + 1).min(n - 1)].fill(true);
    }
    for (p, k) in branch.points.iter_mut().zip(keep) {
        if !k {
            p.solution = None;
        }
    }
}

/// Solves for `(u, λ)` with the amplitude pinned, `u(0) = a`, starting from
/// a given guess.
pub fn amplitude_solve_from(
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    a: f64,
    guess_u: &[f64],
    guess_lambda: f64,
    params: &NewtonParams,
) -> Result<Solution> {
    params.validate()?;
    if !(a > 0.0 && a < 1.0 - params.delta_reg) {
        return Err(Error::domain(format!("amplitude must lie in (0, 1 - delta_reg), got {a}")));
    }
    let m = mesh.intervals();
    if guess_u.len() != m + 1 {
        return Err(Error::domain("initial guess must have one value per node"));
    }
    let lap = mesh::assemble_laplacian(mesh);
    let mut u = guess_u.to_vec();
    u[0] = a;
    solver::clamp_state(&mut u, params.delta_reg);
    let mut lambda = guess_lambda;
    let mut row = vec![0.0; m];
    row[0] = 1.0;
    let mut r = mesh::residual_with(&lap, mesh, spec, &u, lambda)?;
    let mut norm = mesh.rms(&r);
    let mut tol = params.tol.max(mesh::residual_floor(&lap, mesh, spec, &u, lambda));
    let mut steps = Vec::new();
    let fail = |u: Vec<f64>, lambda: f64, it: usize, norm: f64| {
        Error::NoConvergence(Box::new(crate::error::NoConvergence {
            lambda,
            iterations: it,
            residual_norm: norm,
            last_iterate: u,
        }))
    };
    for it in 0..params.max_iter {
        if norm <= tol {
            return Ok(Solution::new(u, lambda, norm, it, steps));
        }
        let jac = mesh::jacobian_with(lap.clone(), mesh, spec, &u, lambda)?;
        let f_lambda = mesh::lambda_derivative(mesh, spec, &u)?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let Ok((du, dl)) = solve_bordered(&jac.sub, &jac.diag, &jac.sup, &f_lambda, &row, 0.0, &neg, a - u[0]) else {
            return Err(fail(u, lambda, it, norm));
        };
        let mut s = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let mut trial = u.clone();
            for (x, d) in trial.iter_mut().zip(&du) {
                *x += s * d;
            }
            trial[0] = a;
            solver::clamp_state(&mut trial, params.delta_reg);
            let lt = lambda + s * dl;
            if let Ok(rt) = mesh::residual_with(&lap, mesh, spec, &trial, lt) {
                let nt = mesh.rms(&rt);
                if nt.is_finite() && (nt <= norm || nt <= tol) {
                    accepted = Some((trial, lt, rt, nt));
                    break;
                }
            }
            s *= 0.5;
        }
        let Some((trial, lt, rt, nt)) = accepted else {
            return Err(fail(u, lambda, it + 1, norm));
        };
        steps.push(s * du.iter().fold(dl.abs(), |acc, d| acc.max(d.abs())));
        u = trial;
        lambda = lt;
        r = rt;
        norm = nt;
        tol = params.tol.max(mesh::residual_floor(&lap, mesh, spec, &u, lambda));
    }
    if norm <= tol {
        return Ok(Solution::new(u, lambda, norm, params.max_iter, steps));
    }
    Err(fail(u, lambda, params.max_iter, norm))
}

const AMPLITUDE_RAMP: usize = 24;

/// Solves for `(u, λ)` with `u(0) = a`, ramping the amplitude up from zero
/// in equal steps of `-ln(1 - a)`.
pub fn amplitude_solve(mesh: &RadialMesh, spec: &ProblemSpec, a: f64, params: &NewtonParams) -> Result<Solution> {
    params.validate()?;
    if !(a > 0.0 && a < 1.0 - params.delta_reg) {
        return Err(Error::domain(format!("amplitude must lie in (0, 1 - delta_reg), got {a}")));
    }
    let nodes = mesh.nodes();
    let n = spec.dimension() as f64;
    let tau_end = -(1.0 - a).ln();
    let mut prev: Option<Solution> = None;
    let mut prev2: Option<Solution> = None;
    for k in 1..=AMPLITUDE_RAMP {
        let ak = 1.0 - (-tau_end * k as f64 / AMPLITUDE_RAMP as f64).exp();
        let ak = if k == AMPLITUDE_RAMP { a } else { ak };
        let (gu, gl) = match (&prev, &prev2) {
            (Some(p1), Some(p0)) => {
                // linear extrapolation in amplitude
                let w = (ak - p1.amplitude) / (p1.amplitude - p0.amplitude);
                let gu: Vec<f64> = p1.u.iter().zip(&p0.u).map(|(x, y)| x + w * (x - y)).collect();
                (gu, p1.lambda + w * (p1.lambda - p0.lambda))
            }
            (Some(p1), None) => {
                let s = ak / p1.amplitude;
                (p1.u.iter().map(|v| v * s).collect(), p1.lambda * s)
            }
            _ => {
                // small-amplitude linearisation: u ≈ a (1 - r²), λ ≈ 2N a / f(0)
                let f0 = spec.profile(0.0).max(spec.profile(0.5));
                let gu: Vec<f64> = nodes.iter().map(|r| ak * (1.0 - r * r)).collect();
                (gu, 2.0 * n * ak / f0)
            }
        };
        let gu: Vec<f64> = gu.iter().map(|v| v.min(ak)).collect();
        let sol = amplitude_solve_from(mesh, spec, ak, &gu, gl, params)?;
        prev2 = prev.take();
        prev = Some(sol);
    }
    Ok(prev.expect("ramp is nonempty"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSolution {
    pub solution: Solution,
    pub stability: StabilitySummary,
}

/// The solution on the upper sub-branch (between the first and second fold)
/// at `λ = lambda_target`, polished by Newton at fixed `λ`.
pub fn second_solution(
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    branch: &Branch,
    lambda_target: f64,
    params: &NewtonParams,
) -> Result<BranchSolution> {
    let Some(first) = branch.folds.first() else {
        return Err(Error::NotFound("branch has no fold, so no second solution".into()));
    };
    if lambda_target >= first.lambda {
        return Err(Error::NotFound(format!("lambda {lambda_target} is not below the first fold {}", first.lambda)));
    }
    let end = branch.folds.get(1).map_or(branch.points.len() - 1, |f| f.index);
    let pts = &branch.points[first.index..=end];
    let Some(k) = pts.windows(2).position(|w| (w[0].lambda - lambda_target) * (w[1].lambda - lambda_target) <= 0.0)
    else {
        return Err(Error::NotFound(format!("upper branch does not reach lambda {lambda_target}")));
    };
    let (p0, p1) = (&pts[k], &pts[k + 1]);
    let w = (lambda_target - p0.lambda) / (p1.lambda - p0.lambda);
    let mut a_lo = p0.amplitude;
    let mut a_hi = p1.amplitude;
    let a_guess = a_lo + w * (a_hi - a_lo);

    let mut sol = amplitude_solve(mesh, spec, a_guess, params)?;
    // secant on λ(a) = lambda_target inside [a_lo, a_hi]
    let mut other: Option<Solution> = None;
    for _ in 0..30 {
        if (sol.lambda - lambda_target).abs() <= 1e-12 * lambda_target.max(1.0) {
            break;
        }
        let a_next = match &other {
            Some(o) if o.lambda != sol.lambda => {
                sol.amplitude + (lambda_target - sol.lambda) * (sol.amplitude - o.amplitude) / (sol.lambda - o.lambda)
            }
            _ => {
                // λ decreases with amplitude on this sub-branch
                if sol.lambda > lambda_target {
                    0.5 * (sol.amplitude + a_hi)
                } else {
                    0.5 * (sol.amplitude + a_lo)
                }
            }
        };
        if sol.lambda > lambda_target {
            a_lo = a_lo.max(sol.amplitude.min(a_hi));
        } else {
            a_hi = a_hi.min(sol.amplitude.max(a_lo));
        }
        let a_next = if a_next > a_lo.min(a_hi) && a_next < a_lo.max(a_hi) { a_next } else { 0.5 * (a_lo + a_hi) };
        let next = amplitude_solve_from(mesh, spec, a_next, &sol.u, sol.lambda, params)?;
        other = Some(std::mem::replace(&mut sol, next));
    }
    let polished = solver::newton_solve(mesh, spec, lambda_target, &sol.u, params)?;
    let stability = spectrum::stability_summary(mesh, spec, &polished.u, lambda_target)?;
    Ok(BranchSolution { solution: polished, stability })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;

    #[test]
    fn fold_index_examples() {
        assert!(fold_indices(&[0.1, 0.2, 0.3, 0.4], 0.01).is_empty());
        assert_eq!(fold_indices(&[0.1, 0.3, 0.4, 0.35, 0.3], 0.01), vec![2]);
        // jitter below the hysteresis is ignored
        assert!(fold_indices(&[0.1, 0.3, 0.4, 0.3999, 0.41], 0.01).is_empty());
        assert_eq!(fold_indices(&[0.0, 1.0, 0.5, 0.8, 0.6, 0.7], 0.05), vec![1, 2, 3, 4]);
    }

    #[test]
    fn quadratic_vertex_is_exact_on_parabolas() {
        let pts: Vec<BranchPoint> = (0..7)
            .map(|k| {
                let t = 0.3 * k as f64;
                BranchPoint {
                    t,
                    lambda: 2.0 - (t - 1.0).powi(2),
                    amplitude: t,
                    mu1: 0.0,
                    mu_near_zero: 0.0,
                    morse_index_radial: 0,
                    is_fold: false,
                    solution: None,
                }
            })
            .collect();
        let f = refine_fold(&pts, 3);
        assert!((f.lambda - 2.0).abs() < 1e-12);
        assert!((f.t - 1.0).abs() < 1e-12);
        assert!(f.refinement < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mesh = build_mesh(32, 1.0, 2).unwrap();
        let spec = ProblemSpec::power_law(2, 0.0).unwrap();
        let p = ContinuationParams { ds0: 0.0, ..Default::default() };
        assert!(matches!(trace_branch(&mesh, &spec, &p), Err(Error::Domain(_))));
        let p = ContinuationParams { amplitude_max: 1.0, ..Default::default() };
        assert!(trace_branch(&mesh, &spec, &p).is_err());
        let np = NewtonParams::default();
        assert!(matches!(amplitude_solve(&mesh, &spec, 0.0, &np), Err(Error::Domain(_))));
    }

    #[test]
    fn amplitude_solve_small_amplitude() {
        let mesh = build_mesh(512, 2.0, 2).unwrap();
        let spec = ProblemSpec::power_law(2, 0.0).unwrap();
        let sol = amplitude_solve(&mesh, &spec, 1e-4, &NewtonParams::default()).unwrap();
        assert!((sol.lambda / 4e-4 - 1.0).abs() < 1e-2);
        assert_eq!(sol.amplitude, 1e-4);
    }

    #[test]
    fn low_dimension_branch_folds() {
        let mesh = build_mesh(256, 2.0, 2).unwrap();
        let spec = ProblemSpec::power_law(2, 0.0).unwrap();
        let p = ContinuationParams { amplitude_max: 0.99, ..Default::default() };
        let b = trace_branch(&mesh, &spec, &p).unwrap();
        assert_eq!(b.metadata.termination, Termination::AmplitudeReached);
        assert!((b.final_point().amplitude - 0.99).abs() < 1e-9);
        assert!(b.folds.len() >= 2, "{:?}", b.folds);
        assert!(b.points.windows(2).all(|w| w[1].amplitude > w[0].amplitude));
        assert!(b.points.windows(2).all(|w| w[1].t > w[0].t));
        // index 0, then 1, then 2
        let first = b.folds[0].index;
        assert!(b.points[..first].iter().all(|p| p.morse_index_radial == 0));
        assert_eq!(b.points[first + 1].morse_index_radial, 1);
        let lam_s = 4.0 / 9.0;
        assert!(b.folds[0].lambda > lam_s && b.folds[1].lambda < lam_s);

        let lt = 0.95 * b.folds[0].lambda;
        let s = second_solution(&mesh, &spec, &b, lt, &NewtonParams::default()).unwrap();
        assert_eq!(s.stability.morse_index_radial, 1);
        let minimal = solver::newton_solve(&mesh, &spec, lt, &vec![0.0; 257], &NewtonParams::default()).unwrap();
        assert!(s.solution.amplitude > minimal.amplitude);
        assert!(matches!(
            second_solution(&mesh, &spec, &b, 1.01 * b.folds[0].lambda, &NewtonParams::default()),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn high_dimension_branch_is_monotone() {
        let mesh = build_mesh(256, 2.0, 8).unwrap();
        let spec = ProblemSpec::power_law(8, 0.0).unwrap();
        let p = ContinuationParams { amplitude_max: 0.99, ..Default::default() };
        let b = trace_branch(&mesh, &spec, &p).unwrap();
        assert!(b.folds.is_empty());
        assert!(b.points.windows(2).all(|w| w[1].lambda > w[0].lambda));
        assert!(b.points.iter().all(|p| p.morse_index_radial == 0));
        assert!(matches!(second_solution(&mesh, &spec, &b, 1.0, &NewtonParams::default()), Err(Error::NotFound(_))));
    }
}
