//! Shooting on the radial ODE, used as an oracle independent of the mesh.
//!
//! For a fixed amplitude `a = u(0)` the initial value problem
//!
//! ```text
//!   u'' + (N-1)/r u' + λ f(r) / (1-u)² = 0,   u(0) = a, u'(0) = 0
//! ```
//!
//! is integrated with classical RK4 at a fixed step in `ξ = r^{1/4}`, which
//! keeps the `(N-1)/r` term well inside the stability region next to the
//! axis. `λ` is then bisected so that `u(1) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::problem::ProblemSpec;

const STRETCH: i32 = 4;
const BISECTION_RTOL: f64 = 1e-14;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingParams {
    /// Number of RK4 steps; at least 1000.
    pub steps: usize,
    /// Radius where the series start hands over to the integrator.
    pub r0: f64,
}

impl Default for ShootingParams {
    fn default() -> Self {
        Self { steps: 20_000, r0: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    pub lambda: f64,
    pub amplitude: f64,
    /// `u(1)` at the returned `λ`.
    pub terminal: f64,
    pub radii: Vec<f64>,
    pub profile: Vec<f64>,
}

struct Trajectory {
    radii: Vec<f64>,
    profile: Vec<f64>,
}

fn integrate(
    spec: &ProblemSpec,
    a: f64,
    lambda: f64,
    params: &ShootingParams,
    keep: bool,
) -> (f64, Option<Trajectory>) {
    let n1 = spec.dimension() as f64 - 1.0;
    let q = STRETCH as f64;
    let r0 = params.r0;
    let gap0 = 1.0 - a;
    // series start
    let (mut u, mut p) = if spec.alpha() == 0.0 {
        let c = lambda * spec.profile(0.0) / (gap0 * gap0);
        let nd = spec.dimension() as f64;
        (a - c * r0 * r0 / (2.0 * nd), -c * r0 / nd)
    } else {
        (a, 0.0)
    };
    let xi0 = r0.powf(1.0 / q);
    let h = (1.0 - xi0) / params.steps as f64;

    // d/dξ (u, p) with r = ξ^q
    let rhs = |xi: f64, u: f64, p: f64| -> (f64, f64) {
        let r = xi.powi(STRETCH);
        let drdxi = q * xi.powi(STRETCH - 1);
        let gap = 1.0 - u;
        let force = lambda * spec.profile(r) / (gap * gap);
        (drdxi * p, -q * n1 / xi * p - drdxi * force)
    };

    let mut traj = keep.then(|| Trajectory {
        radii: Vec::with_capacity(params.steps + 1),
        profile: Vec::with_capacity(params.steps + 1),
    });
    if let Some(t) = traj.as_mut() {
        t.radii.push(r0);
        t.profile.push(u);
    }
    for k in 0..params.steps {
        let xi = xi0 + k as f64 * h;
        let (k1u, k1p) = rhs(xi, u, p);
        let (k2u, k2p) = rhs(xi + 0.5 * h, u + 0.5 * h * k1u, p + 0.5 * h * k1p);
        let (k3u, k3p) = rhs(xi + 0.5 * h, u + 0.5 * h * k2u, p + 0.5 * h * k2p);
        let (k4u, k4p) = rhs(xi + h, u + h * k3u, p + h * k3p);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        if let Some(t) = traj.as_mut() {
            let x = if k + 1 == params.steps { 1.0 } else { xi + h };
            t.radii.push(x.powi(STRETCH));
            t.profile.push(u);
        }
    }
    (u, traj)
}

fn validate(spec: &ProblemSpec, a: f64, params: &ShootingParams) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::domain(format!("amplitude must lie in (0, 1), got {a}")));
    }
    if params.steps < 1000 {
        return Err(Error::domain(format!("need at least 1000 integrator steps, got {}", params.steps)));
    }
    if !(params.r0 > 0.0 && params.r0 < 1e-2) {
        return Err(Error::domain("series start radius must lie in (0, 0.01)"));
    }
    if spec.profile(0.0) < 0.0 {
        return Err(Error::domain("profile must be nonnegative"));
    }
    Ok(())
}

/// `u(1)` of the initial value problem with amplitude `a` at parameter `λ`.
pub fn terminal_value(spec: &ProblemSpec, a: f64, lambda: f64, params: &ShootingParams) -> Result<f64> {
    validate(spec, a, params)?;
    Ok(integrate(spec, a, lambda, params, false).0)
}

/// Finds the `λ` for which the solution with `u(0) = a` vanishes at `r = 1`.
///
/// The search interval is `(0, 4 λ_s]` with `λ_s` the closed-form singular
/// value. The terminal value is checked to decrease with `λ` at every
/// bisection step.
pub fn shooting_oracle(spec: &ProblemSpec, a: f64, params: &ShootingParams) -> Result<ShootingResult> {
    validate(spec, a, params)?;
    let lambda_s = spec.extremal().lambda_star;
    if !(lambda_s > 0.0) {
        return Err(Error::Bracket(format!("closed-form lambda {lambda_s} gives an empty search interval")));
    }
    let (mut lo, mut hi) = (0.0, 4.0 * lambda_s);
    let mut f_lo = a;
    let mut f_hi = integrate(spec, a, hi, params, false).0;
    if !(f_hi < 0.0) {
        return Err(Error::Bracket(format!("u(1) = {f_hi} does not change sign on (0, {hi}]")));
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= BISECTION_RTOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = integrate(spec, a, mid, params, false).0;
        if !(f_mid <= f_lo && f_mid >= f_hi) {
            return Err(Error::Bracket(format!(
                "terminal value not monotone in lambda near {mid} ({f_hi} <= {f_mid} <= {f_lo} violated)"
            )));
        }
        if f_mid > 0.0 {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    // secant step inside the final bracket
    let lambda = if f_lo > f_hi { lo + (hi - lo) * f_lo / (f_lo - f_hi) } else { 0.5 * (lo + hi) };
    let (terminal, traj) = integrate(spec, a, lambda, params, true);
    let traj = traj.expect("trajectory requested");
    Ok(ShootingResult { lambda, amplitude: a, terminal, radii: traj.radii, profile: traj.profile })
}

/// `λ(a)` for a batch of amplitudes.
pub fn oracle_table(
    spec: &ProblemSpec,
    amplitudes: &[f64],
    params: &ShootingParams,
    exec: Execution,
) -> Vec<Result<ShootingResult>> {
    exec.map(amplitudes, |&a| shooting_oracle(spec, a, params))
}
