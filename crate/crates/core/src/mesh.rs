//! Finite-volume discretisation of the radial Laplacian on the unit ball.
//!
//! Nodes are `r_i = (i/M)^γ`, `i = 0..=M`. Node `i` owns the dual cell
//! between the face midpoints `b_i = (r_{i-1}+r_i)/2` and `b_{i+1}` (with
//! `b_0 = 0`, `b_{M+1} = 1`), whose exact `N`-dimensional volume is the
//! quadrature weight. The operator
//!
//! ```text
//!   (-Δ_h u)_i = [κ_{i+½}(u_i - u_{i+1}) + κ_{i-½}(u_i - u_{i-1})] / W_i,
//!   κ_{i+½} = σ_N b_{i+1}^{N-1} / (r_{i+1} - r_i)
//! ```
//!
//! reproduces `-Δ` exactly on quadratics in `r` on any node sequence, and at
//! the axis reduces to the ghost-node closure `-2N (u_1 - u_0) / r_1²`.
//! Since `W · (-Δ_h)` is symmetric, conjugation by `W^{1/2}` symmetrises it.
//!
//! Unknowns are `u_0..u_{M-1}`; the Dirichlet value `u_M = 0` is eliminated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::ProblemSpec;

pub const MIN_INTERVALS: usize = 16;

/// Area of the unit sphere `S^{N-1}` via `σ_{N+2} = 2π σ_N / N`.
pub fn sphere_area(dimension: usize) -> f64 {
    assert!(dimension >= 1);
    let two_pi = 2.0 * std::f64::consts::PI;
    let (mut sigma, mut k) = if dimension % 2 == 1 { (2.0, 1) } else { (two_pi, 2) };
    while k < dimension {
        sigma *= two_pi / k as f64;
        k += 2;
    }
    sigma
}

/// Volume of the unit ball in `R^N`.
pub fn ball_volume(dimension: usize) -> f64 {
    sphere_area(dimension) / dimension as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialMesh {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    interp_weights: Vec<f64>,
    faces: Vec<f64>,
    gamma: f64,
    dimension: usize,
}

impl RadialMesh {
    pub fn new(intervals: usize, gamma: f64, dimension: usize) -> Result<Self> {
        build_mesh(intervals, gamma, dimension)
    }

    /// Number of intervals `M`.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of unknowns (`M`, the Dirichlet node excluded).
    pub fn unknowns(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Dual-cell volumes, one per node, summing to the ball volume.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.dimension)
    }

    /// Same node count doubled, same grading.
    pub fn refined(&self) -> Result<Self> {
        build_mesh(2 * self.intervals(), self.gamma, self.dimension)
    }

    /// `Σ w_i v_i` with the dual-cell weights.
    pub fn quadrature(&self, values: &[f64]) -> f64 {
        quadrature(self, values)
    }

    /// Interpolatory rule: piecewise-quadratic interpolation of the nodal
    /// values integrated exactly against `σ_N r^{N-1}`.
    ///
    /// Exact for quadratic integrands; used where second-order dual-cell
    /// quadrature would dominate a consistency residual.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.nodes.len());
        self.interp_weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Weighted mean-square norm `sqrt(Σ w_i v_i² / |B|)` over the first
    /// `v.len()` nodes.
    pub fn rms(&self, v: &[f64]) -> f64 {
        let s: f64 = v.iter().zip(&self.weights).map(|(x, w)| w * x * x).sum();
        (s / self.volume()).sqrt()
    }
}

pub fn build_mesh(intervals: usize, gamma: f64, dimension: usize) -> Result<RadialMesh> {
    if intervals < MIN_INTERVALS {
        return Err(Error::Size(intervals));
    }
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::domain(format!("grading exponent must be >= 1, got {gamma}")));
    }
    if dimension < 1 {
        return Err(Error::domain("dimension must be >= 1"));
    }
    let m = intervals as f64;
    let mut nodes: Vec<f64> = (0..=intervals).map(|i| (i as f64 / m).powf(gamma)).collect();
    nodes[intervals] = 1.0;

    let sigma = sphere_area(dimension);
    let nd = dimension as i32;
    let mut faces = Vec::with_capacity(intervals + 2);
    faces.push(0.0);
    for i in 1..=intervals {
        faces.push(0.5 * (nodes[i - 1] + nodes[i]));
    }
    faces.push(1.0);
    let weights =
        (0..=intervals).map(|i| sigma * (faces[i + 1].powi(nd) - faces[i].powi(nd)) / dimension as f64).collect();
    let interp_weights = interpolatory_weights(&nodes, dimension, sigma);

    Ok(RadialMesh { nodes, weights, interp_weights, faces, gamma, dimension })
}

// Gauss–Legendre nodes/weights on [-1, 1], 8 points: exact to degree 15,
// enough for a quadratic basis times r^{N-1} with N <= 14. Higher N keeps
// full accuracy on the fine meshes used in practice.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_69),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_34),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_05),
    (-0.183_434_642_495_649_78, 0.362_683_783_378_361_77),
    (0.183_434_642_495_649_78, 0.362_683_783_378_361_77),
    (0.525_532_409_916_329, 0.313_706_645_877_887_05),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_34),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_69),
];

fn interpolatory_weights(nodes: &[f64], dimension: usize, sigma: f64) -> Vec<f64> {
    let m = nodes.len() - 1;
    let mut w = vec![0.0; m + 1];
    let pow = dimension as i32 - 1;
    let mut start = 0;
    while start < m {
        // Quadratic panels over node triples; a trailing single interval
        // borrows the previous node.
        let (i0, lo, hi) = if start + 2 <= m {
            (start, nodes[start], nodes[start + 2])
        } else {
            (start - 1, nodes[start], nodes[start + 1])
        };
        let (x0, x1, x2) = (nodes[i0], nodes[i0 + 1], nodes[i0 + 2]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for &(g, gw) in GL8.iter() {
            let r = mid + half * g;
            let rho = sigma * r.powi(pow) * gw * half;
            w[i0] += rho * (r - x1) * (r - x2) / ((x0 - x1) * (x0 - x2));
            w[i0 + 1] += rho * (r - x0) * (r - x2) / ((x1 - x0) * (x1 - x2));
            w[i0 + 2] += rho * (r - x0) * (r - x1) / ((x2 - x0) * (x2 - x1));
        }
        start += 2;
    }
    w
}

/// `Σ w_i v_i`.
pub fn quadrature(mesh: &RadialMesh, values: &[f64]) -> f64 {
    assert_eq!(values.len(), mesh.nodes.len(), "one value per node");
    mesh.weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

/// Boundary closure at the axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisClosure {
    /// `u'(0) = 0` via the ghost value `u_{-1} = u_1`.
    Symmetric,
}

/// Boundary closure at `r = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OuterClosure {
    /// `u_M = 0`, eliminated from the unknowns.
    Dirichlet,
}

/// Tridiagonal operator on the `M` unknowns `u_0..u_{M-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalOperator {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    /// Coefficient of the eliminated `u_M` in the last row.
    pub boundary_coupling: f64,
    pub axis: AxisClosure,
    pub outer: OuterClosure,
}

impl TridiagonalOperator {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `T x` for `x` of length `M`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// `T x` with the boundary value `x[M]` folded back in; `x` has `M + 1`
    /// entries.
    pub fn apply_full(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(x.len(), n + 1);
        let mut y = self.apply(&x[..n]);
        y[n - 1] += self.boundary_coupling * x[n];
        y
    }

    /// Thomas solve; a pivot error means the operator is (numerically) singular.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        linalg::thomas(&self.sub, &self.diag, &self.sup, rhs)
    }

    pub fn min_relative_pivot(&self) -> f64 {
        linalg::min_relative_pivot(&self.sub, &self.diag, &self.sup)
    }

    /// Row-major dense copy, for small oracle computations.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.len();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = self.diag[i];
            if i > 0 {
                a[i * n + i - 1] = self.sub[i];
            }
            if i + 1 < n {
                a[i * n + i + 1] = self.sup[i];
            }
        }
        a
    }
}

/// Discrete `-Δ_h` with the axis closure and the Dirichlet row eliminated.
pub fn assemble_laplacian(mesh: &RadialMesh) -> TridiagonalOperator {
    let m = mesh.intervals();
    let sigma = sphere_area(mesh.dimension);
    let p = mesh.dimension as i32 - 1;
    let r = &mesh.nodes;
    // kappa[j] is the flux coefficient on the face between nodes j and j+1.
    let kappa: Vec<f64> = (0..m).map(|j| sigma * mesh.faces[j + 1].powi(p) / (r[j + 1] - r[j])).collect();
    let mut sub = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m];
    for i in 0..m {
        let w = mesh.weights[i];
        let right = kappa[i] / w;
        let left = if i > 0 { kappa[i - 1] / w } else { 0.0 };
        diag[i] = left + right;
        if i > 0 {
            sub[i] = -left;
        }
        if i + 1 < m {
            sup[i] = -right;
        }
    }
    let boundary_coupling = -kappa[m - 1] / mesh.weights[m - 1];
    TridiagonalOperator {
        sub,
        diag,
        sup,
        boundary_coupling,
        axis: AxisClosure::Symmetric,
        outer: OuterClosure::Dirichlet,
    }
}

fn check_state(mesh: &RadialMesh, u: &[f64]) -> Result<()> {
    if u.len() != mesh.nodes.len() {
        return Err(Error::domain(format!("state has {} values, mesh has {} nodes", u.len(), mesh.nodes.len())));
    }
    for (index, &ui) in u[..u.len() - 1].iter().enumerate() {
        let gap = 1.0 - ui;
        if !(gap > 0.0) {
            return Err(Error::Singularity { index, gap });
        }
    }
    Ok(())
}

/// `R_i = (-Δ_h u)_i - λ f(r_i) / (1 - u_i)²` at the `M` unknown nodes.
pub fn residual(mesh: &RadialMesh, spec: &ProblemSpec, u: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let lap = assemble_laplacian(mesh);
    residual_with(&lap, mesh, spec, u, lambda)
}

pub(crate) fn residual_with(
    lap: &TridiagonalOperator,
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    u: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    check_state(mesh, u)?;
    let mut r = lap.apply_full(u);
    for (i, ri) in r.iter_mut().enumerate() {
        let gap = 1.0 - u[i];
        *ri -= lambda * spec.profile(mesh.nodes[i]) / (gap * gap);
    }
    Ok(r)
}

/// Rounding level of the residual: `32 ε` times the RMS of the row-wise
/// sums of absolute terms. On fine graded meshes the `1/h²` entries put this
/// above a fixed tolerance, and no iterate can do better.
pub(crate) fn residual_floor(
    lap: &TridiagonalOperator,
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    u: &[f64],
    lambda: f64,
) -> f64 {
    let n = lap.len();
    let rows: Vec<f64> = (0..n)
        .map(|i| {
            let mut s = (lap.diag[i] * u[i]).abs();
            if i > 0 {
                s += (lap.sub[i] * u[i - 1]).abs();
            }
            if i + 1 < n {
                s += (lap.sup[i] * u[i + 1]).abs();
            }
            let gap = 1.0 - u[i];
            s + (lambda * spec.profile(mesh.nodes[i]) / (gap * gap)).abs()
        })
        .collect();
    32.0 * f64::EPSILON * mesh.rms(&rows)
}

/// Residual at one interior node, touching only `u_{i-1}, u_i, u_{i+1}`.
///
/// Lets singular profiles (which reach `u = 1` at the axis) be checked away
/// from the origin.
pub fn local_residual(mesh: &RadialMesh, spec: &ProblemSpec, u: &[f64], lambda: f64, i: usize) -> Result<f64> {
    let m = mesh.intervals();
    if u.len() != m + 1 || i >= m {
        return Err(Error::domain("node index outside the unknowns"));
    }
    let gap = 1.0 - u[i];
    if !(gap > 0.0) {
        return Err(Error::Singularity { index: i, gap });
    }
    let sigma = sphere_area(mesh.dimension);
    let p = mesh.dimension as i32 - 1;
    let r = &mesh.nodes;
    let w = mesh.weights[i];
    let mut lap = sigma * mesh.faces[i + 1].powi(p) * (u[i] - u[i + 1]) / (r[i + 1] - r[i]);
    if i > 0 {
        lap += sigma * mesh.faces[i].powi(p) * (u[i] - u[i - 1]) / (r[i] - r[i - 1]);
    }
    Ok(lap / w - lambda * spec.profile(r[i]) / (gap * gap))
}

/// `∂R/∂λ = -f(r_i) / (1 - u_i)²`.
pub fn lambda_derivative(mesh: &RadialMesh, spec: &ProblemSpec, u: &[f64]) -> Result<Vec<f64>> {
    check_state(mesh, u)?;
    Ok((0..mesh.intervals())
        .map(|i| {
            let gap = 1.0 - u[i];
            -spec.profile(mesh.nodes[i]) / (gap * gap)
        })
        .collect())
}

/// Discrete linearisation `-Δ_h - diag(2λ f(r_i) / (1 - u_i)³)`.
pub fn assemble_jacobian(mesh: &RadialMesh, spec: &ProblemSpec, u: &[f64], lambda: f64) -> Result<TridiagonalOperator> {
    let lap = assemble_laplacian(mesh);
    jacobian_with(lap, mesh, spec, u, lambda)
}

pub(crate) fn jacobian_with(
    mut op: TridiagonalOperator,
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    u: &[f64],
    lambda: f64,
) -> Result<TridiagonalOperator> {
    check_state(mesh, u)?;
    for (i, d) in op.diag.iter_mut().enumerate() {
        let gap = 1.0 - u[i];
        *d -= 2.0 * lambda * spec.profile(mesh.nodes[i]) / (gap * gap * gap);
    }
    Ok(op)
}

/// Nodal `u'(r)`: three-point formula exact on quadratics at interior nodes,
/// one-sided three-point at `r = 1`, and `0` at the axis.
pub fn radial_gradient(mesh: &RadialMesh, u: &[f64]) -> Vec<f64> {
    let r = &mesh.nodes;
    let m = mesh.intervals();
    assert_eq!(u.len(), m + 1);
    let mut g = vec![0.0; m + 1];
    for i in 1..m {
        let hm = r[i] - r[i - 1];
        let hp = r[i + 1] - r[i];
        g[i] = -hp / (hm * (hm + hp)) * u[i - 1] + (hp - hm) / (hm * hp) * u[i] + hm / (hp * (hm + hp)) * u[i + 1];
    }
    let h1 = r[m] - r[m - 1];
    let h2 = r[m - 1] - r[m - 2];
    g[m] =
        u[m] * (2.0 * h1 + h2) / (h1 * (h1 + h2)) - u[m - 1] * (h1 + h2) / (h1 * h2) + u[m - 2] * h1 / (h2 * (h1 + h2));
    g
}
