//! The Pucci–Serrin form of the Pohozaev identity on the unit ball
//!
//! ```text
//!   ∫ [div(h) F(x,v) - a v f(x,v) + ⟨∇_x F(x,v), h⟩]
//!     = ∫ [(div(h)/2 - a)|∇v|² - ⟨Dh ∇v, ∇v⟩] + ½ ∫_{∂B} |∇v|² ⟨h, ν⟩,
//! ```
//!
//! evaluated for radial solutions, plus the auxiliary functions of the
//! reduced problem `v = u - u_λ` and star-shape certificates for affine
//! fields `h(x) = Ax + b`.
//!
//! For radial `v` only the isotropic part of an affine field contributes:
//! averaging over spheres turns `⟨Ax + b, x⟩` into `r² tr(A)/N` and
//! `⟨A x̂, x̂⟩` into `tr(A)/N`, so everything reduces to `h = c x` with
//! `c = tr(A)/N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mesh::{self, sphere_area, RadialMesh};
use crate::problem::ProblemSpec;

fn check_gap(u: f64, s: f64) -> Result<(f64, f64)> {
    let g0 = 1.0 - u;
    let g1 = 1.0 - u - s;
    if !(g0 > 0.0) {
        return Err(Error::Singularity { index: 0, gap: g0 });
    }
    if !(g1 > 0.0) {
        return Err(Error::Singularity { index: 0, gap: g1 });
    }
    Ok((g0, g1))
}

/// `g_λ(s) = (1 - u - s)^{-2} - (1 - u)^{-2}` at a point where `u_λ = u`.
pub fn g_lambda(u: f64, s: f64) -> Result<f64> {
    let (g0, g1) = check_gap(u, s)?;
    Ok(1.0 / (g1 * g1) - 1.0 / (g0 * g0))
}

/// `G_λ(s) = ∫_0^s g_λ = (1 - u - s)^{-1} - (1 - u)^{-1} - s (1 - u)^{-2}`.
pub fn big_g_lambda(u: f64, s: f64) -> Result<f64> {
    let (g0, g1) = check_gap(u, s)?;
    Ok(1.0 / g1 - 1.0 / g0 - s / (g0 * g0))
}

/// `∂G_λ/∂u_λ`; multiplied by `u_λ'(r)` this is the radial part of `∇_x G_λ`.
fn big_g_du(u: f64, s: f64) -> Result<f64> {
    let (g0, g1) = check_gap(u, s)?;
    Ok(1.0 / (g1 * g1) - 1.0 / (g0 * g0) - 2.0 * s / (g0 * g0 * g0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientScan {
    /// `max |G_λ / g_λ| / (1 - u_λ - s)`.
    pub value_quotient: f64,
    /// `max |∇G_λ / g_λ - ∇u_λ| / ((1 - u_λ - s)² |∇u_λ|)`.
    pub gradient_quotient: f64,
    pub samples: usize,
}

/// Empirical constants in the bounds
/// `|G_λ/g_λ| <= C₀ |1 - u_λ - s|` and
/// `|∇G_λ/g_λ - ∇u_λ| <= C₀ |1 - u_λ - s|² |∇u_λ|`.
///
/// The gradient quotient does not depend on `∇u_λ`: it equals
/// `2s / ((1 - u)³ g_λ (1 - u - s)²)`.
pub fn quotient_bound_scan(u_min: &[f64], s_grid: &[f64], gap_guard: f64) -> Result<QuotientScan> {
    if !(gap_guard > 0.0) {
        return Err(Error::domain("gap guard must be positive"));
    }
    if let Some(&s) = s_grid.iter().find(|&&s| !(s > 0.0)) {
        return Err(Error::domain(format!("s-grid must exclude s <= 0, found {s}")));
    }
    let mut value_quotient = 0.0f64;
    let mut gradient_quotient = 0.0f64;
    let mut samples = 0;
    for (index, &u) in u_min.iter().enumerate() {
        for &s in s_grid {
            let gap = 1.0 - u - s;
            if gap < gap_guard {
                return Err(Error::Singularity { index, gap });
            }
            let g = g_lambda(u, s)?;
            let big = big_g_lambda(u, s)?;
            let g0 = 1.0 - u;
            value_quotient = value_quotient.max((big / g).abs() / gap);
            gradient_quotient = gradient_quotient.max(2.0 * s / (g0 * g0 * g0 * g * gap * gap));
            samples += 1;
        }
    }
    Ok(QuotientScan { value_quotient, gradient_quotient, samples })
}

/// Vector field `h` in the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Field {
    /// `h(x) = x / N`.
    RadialOverN,
    /// `h(x) = A x + b`, `A` given row by row.
    Affine { a: Vec<Vec<f64>>, b: Vec<f64> },
}

impl Field {
    /// `c` with `h ≃ c x` on radial functions.
    fn radial_coefficient(&self, n: usize) -> Result<f64> {
        match self {
            Field::RadialOverN => Ok(1.0 / n as f64),
            Field::Affine { a, b } => {
                check_square(a, n)?;
                if b.len() != n {
                    return Err(Error::domain(format!("offset has {} entries, expected {n}", b.len())));
                }
                Ok(trace(a) / n as f64)
            }
        }
    }
}

fn check_square(a: &[Vec<f64>], n: usize) -> Result<()> {
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::domain(format!("field matrix must be {n}×{n}")));
    }
    Ok(())
}

fn trace(a: &[Vec<f64>]) -> f64 {
    a.iter().enumerate().map(|(i, row)| row[i]).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PohozaevReport {
    pub lhs_volume: f64,
    pub rhs_volume: f64,
    pub boundary_term: f64,
    /// `lhs_volume - rhs_volume - boundary_term`.
    pub residual: f64,
    pub relative_residual: f64,
    /// `∫ |∇v|²`.
    pub dirichlet_energy: f64,
    /// Set when the relative residual exceeds 0.2, which means the mesh is
    /// far too coarse for the identity to say anything.
    pub coarse_mesh_warning: bool,
}

/// Pointwise data of a nonlinearity `f(r, s)` in the identity.
pub struct Nonlinearity<'a> {
    /// `f(r_i, s)`, given the node index and `s`.
    pub f: &'a dyn Fn(usize, f64) -> Result<f64>,
    /// `F(r_i, s) = ∫_0^s f(r_i, t) dt`.
    pub big_f: &'a dyn Fn(usize, f64) -> Result<f64>,
    /// `r ∂_r F(r, s)` at `r = r_i`.
    pub r_dr_big_f: &'a dyn Fn(usize, f64) -> Result<f64>,
}

/// Evaluates the identity for radial `v` and the field `h = c x` with a
/// caller-supplied nonlinearity.
pub fn pohozaev_general(mesh: &RadialMesh, v: &[f64], a: f64, c: f64, nl: &Nonlinearity<'_>) -> Result<PohozaevReport> {
    let n = mesh.dimension() as f64;
    if v.len() != mesh.nodes().len() {
        return Err(Error::domain("v must have one value per node"));
    }
    let dv = mesh::radial_gradient(mesh, v);
    let mut lhs = Vec::with_capacity(v.len());
    for (i, &vi) in v.iter().enumerate() {
        let big = (nl.big_f)(i, vi)?;
        let f = (nl.f)(i, vi)?;
        let radial = (nl.r_dr_big_f)(i, vi)?;
        lhs.push(n * c * big - a * vi * f + c * radial);
    }
    let grad2: Vec<f64> = dv.iter().map(|d| d * d).collect();
    let energy = mesh.integrate(&grad2);
    let lhs_volume = mesh.integrate(&lhs);
    let rhs_volume = (n * c / 2.0 - a - c) * energy;
    let slope = dv[dv.len() - 1];
    let boundary_term = 0.5 * c * sphere_area(mesh.dimension()) * slope * slope;
    let residual = lhs_volume - rhs_volume - boundary_term;
    let scale = lhs_volume.abs().max(rhs_volume.abs() + boundary_term.abs());
    let relative_residual = if scale > 0.0 { residual.abs() / scale } else { 0.0 };
    Ok(PohozaevReport {
        lhs_volume,
        rhs_volume,
        boundary_term,
        residual,
        relative_residual,
        dirichlet_energy: energy,
        coarse_mesh_warning: relative_residual > 0.2,
    })
}

/// The identity for a computed solution.
///
/// With `u_min ≡ 0`, `v` is a solution of the full problem and
/// `F = λ f [1/(1-s) - 1]`. Otherwise `v = u - u_λ` solves the reduced
/// problem and `F = λ f G_λ`.
pub fn pohozaev_residual(
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    lambda: f64,
    v: &[f64],
    u_min: &[f64],
    a: f64,
    field: &Field,
) -> Result<PohozaevReport> {
    let nodes = mesh.nodes();
    if v.len() != nodes.len() || u_min.len() != nodes.len() {
        return Err(Error::domain("v and u_min must have one value per node"));
    }
    if mesh.dimension() != spec.dimension() {
        return Err(Error::domain("mesh and problem dimensions differ"));
    }
    for (index, (x, y)) in v.iter().zip(u_min).enumerate() {
        let gap = 1.0 - x - y;
        if !(gap > 0.0) {
            return Err(Error::Singularity { index, gap });
        }
    }
    let c = field.radial_coefficient(spec.dimension())?;
    let du_min = mesh::radial_gradient(mesh, u_min);
    let prof = |i: usize| lambda * spec.profile(nodes[i]);
    let f = |i: usize, s: f64| Ok(prof(i) * g_lambda(u_min[i], s)?);
    let big_f = |i: usize, s: f64| Ok(prof(i) * big_g_lambda(u_min[i], s)?);
    let r_dr = |i: usize, s: f64| {
        let slope = spec.profile_log_slope(nodes[i]);
        Ok(slope * prof(i) * big_g_lambda(u_min[i], s)? + prof(i) * nodes[i] * du_min[i] * big_g_du(u_min[i], s)?)
    };
    if u_min.iter().all(|&x| x == 0.0) {
        // full problem: f = λ p / (1-s)², F = λ p [1/(1-s) - 1]
        let f_full = |i: usize, s: f64| {
            let gap = 1.0 - s;
            Ok(prof(i) / (gap * gap))
        };
        let big_full = |i: usize, s: f64| Ok(prof(i) * (1.0 / (1.0 - s) - 1.0));
        let r_dr_full = |i: usize, s: f64| Ok(spec.profile_log_slope(nodes[i]) * prof(i) * (1.0 / (1.0 - s) - 1.0));
        let nl = Nonlinearity { f: &f_full, big_f: &big_full, r_dr_big_f: &r_dr_full };
        return pohozaev_general(mesh, v, a, c, &nl);
    }
    let nl = Nonlinearity { f: &f, big_f: &big_f, r_dr_big_f: &r_dr };
    pohozaev_general(mesh, v, a, c, &nl)
}

/// `μ̄ = ½ sup_{|ξ|=1} ⟨(A + Aᵀ) ξ, ξ⟩`, the top eigenvalue of the
/// symmetric part of `A`.
pub fn mu_bar_affine(a: &[Vec<f64>]) -> Result<f64> {
    let n = a.len();
    check_square(a, n)?;
    if n == 0 {
        return Err(Error::Size(0));
    }
    let mut sym = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            sym[i * n + j] = 0.5 * (a[i][j] + a[j][i]);
        }
    }
    Ok(*linalg::jacobi_eigenvalues(&sym, n).last().expect("n > 0"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    UniquenessForSmallLambda,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarShapeCertificate {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    /// `div h = tr(A)`; must be 1.
    pub div_check: f64,
    pub mu_bar_sup: f64,
    pub boundary_min_flux: f64,
    pub m_bound: f64,
    pub verdict: Verdict,
    /// Why the verdict is inconclusive, one entry per failed condition.
    pub notes: Vec<String>,
}

pub const DIV_TOL: f64 = 1e-12;
pub const NORMAL_TOL: f64 = 1e-6;

/// Certificate for uniqueness of the minimal solution at small `λ`, using
/// the affine field `h(x) = Ax + b` on the sampled boundary.
pub fn star_certificate(
    samples: &[BoundarySample],
    dimension: usize,
    alpha: f64,
    a: &[Vec<f64>],
    b: &[f64],
) -> Result<StarShapeCertificate> {
    check_square(a, dimension)?;
    if b.len() != dimension {
        return Err(Error::domain(format!("offset has {} entries, expected {dimension}", b.len())));
    }
    if samples.is_empty() {
        return Err(Error::domain("no boundary samples"));
    }
    let mut flux = f64::INFINITY;
    for (index, s) in samples.iter().enumerate() {
        if s.point.len() != dimension || s.normal.len() != dimension {
            return Err(Error::domain(format!("boundary sample {index} has the wrong dimension")));
        }
        let norm = s.normal.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORMAL_TOL {
            return Err(Error::Normalization { index, norm });
        }
        let h: f64 = (0..dimension)
            .map(|i| {
                let hi = b[i] + (0..dimension).map(|j| a[i][j] * s.point[j]).sum::<f64>();
                hi * s.normal[i]
            })
            .sum();
        flux = flux.min(h);
    }
    let div_check = trace(a);
    let mu_bar_sup = mu_bar_affine(a)?;
    let m_bound = mu_bar_sup;

    let mut notes = Vec::new();
    if (div_check - 1.0).abs() > DIV_TOL {
        notes.push(format!("div h = {div_check}, not 1"));
    }
    if !(flux >= 0.0) {
        notes.push(format!("negative boundary flux {flux}"));
    }
    if !(m_bound < 0.5) {
        notes.push(format!("M bound {m_bound} is not below 1/2"));
    }
    if !(dimension >= 3 || alpha > 0.0) {
        notes.push("needs N >= 3 or alpha > 0".to_string());
    }
    let verdict = if notes.is_empty() { Verdict::UniquenessForSmallLambda } else { Verdict::Inconclusive };
    Ok(StarShapeCertificate {
        a: a.to_vec(),
        b: b.to_vec(),
        div_check,
        mu_bar_sup,
        boundary_min_flux: flux,
        m_bound,
        verdict,
        notes,
    })
}

/// `A = I / N`.
pub fn identity_over_n(dimension: usize) -> Vec<Vec<f64>> {
    (0..dimension)
        .map(|i| (0..dimension).map(|j| if i == j { 1.0 / dimension as f64 } else { 0.0 }).collect())
        .collect()
}

/// Deterministic samples of the unit sphere in `R^N` (points equal normals):
/// the `2N` axis points plus quasi-random directions.
pub fn unit_sphere_samples(dimension: usize, count: usize) -> Vec<BoundarySample> {
    let mut out = Vec::with_capacity(2 * dimension + count);
    for i in 0..dimension {
        for sign in [1.0, -1.0] {
            let mut p = vec![0.0; dimension];
            p[i] = sign;
            out.push(BoundarySample { point: p.clone(), normal: p });
        }
    }
    // Kronecker sequence mapped through a crude inverse of the normal cdf
    let alphas: Vec<f64> = (0..dimension).map(|j| ((j + 2) as f64).sqrt().fract()).collect();
    for k in 1..=count {
        let mut p: Vec<f64> = alphas
            .iter()
            .map(|a| {
                let x = (k as f64 * a).fract().clamp(1e-9, 1.0 - 1e-9);
                (x / (1.0 - x)).ln()
            })
            .collect();
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        p.iter_mut().for_each(|x| *x /= norm);
        out.push(BoundarySample { point: p.clone(), normal: p });
    }
    out
}

/// Parses a whitespace-separated table with `2N` columns per line (point,
/// then outward normal). `#` starts a comment.
pub fn parse_boundary_table(text: &str, dimension: usize) -> Result<Vec<BoundarySample>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse { line: k + 1, msg: e.to_string() })?;
        if vals.len() != 2 * dimension {
            return Err(Error::Parse {
                line: k + 1,
                msg: format!("expected {} columns, found {}", 2 * dimension, vals.len()),
            });
        }
        out.push(BoundarySample { point: vals[..dimension].to_vec(), normal: vals[dimension..].to_vec() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use proptest::prelude::*;

    #[test]
    fn auxiliary_examples() {
        assert_eq!(g_lambda(0.2, 0.0).unwrap(), 0.0);
        assert!((g_lambda(0.0, 0.5).unwrap() - 3.0).abs() < 1e-15);
        assert!(matches!(g_lambda(0.5, 0.5), Err(Error::Singularity { .. })));
        assert_eq!(big_g_lambda(0.3, 0.0).unwrap(), 0.0);
        assert!((big_g_lambda(0.0, 0.5).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn antiderivative_by_central_differences() {
        let eps = 1e-5;
        let fd = (big_g_lambda(0.2, 0.3 + eps).unwrap() - big_g_lambda(0.2, 0.3 - eps).unwrap()) / (2.0 * eps);
        assert!((fd - g_lambda(0.2, 0.3).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn quotient_scan_at_zero() {
        let grid: Vec<f64> = (0..=80).map(|k| 0.1 + 0.01 * k as f64).collect();
        let scan = quotient_bound_scan(&[0.0], &grid, 1e-4).unwrap();
        assert!(scan.value_quotient <= 1.0);
        assert!(scan.value_quotient.is_finite() && scan.gradient_quotient.is_finite());
        let fine: Vec<f64> = (0..=160).map(|k| 0.1 + 0.005 * k as f64).collect();
        let scan2 = quotient_bound_scan(&[0.0], &fine, 1e-4).unwrap();
        assert!((scan2.value_quotient / scan.value_quotient - 1.0).abs() < 1e-2);
        assert!((scan2.gradient_quotient / scan.gradient_quotient - 1.0).abs() < 1e-2);
        assert!(quotient_bound_scan(&[0.0], &[0.0, 0.5], 1e-4).is_err());
        assert!(quotient_bound_scan(&[0.5], &[0.49999], 1e-4).is_err());
    }

    #[test]
    fn trivial_solution_gives_zero_report() {
        let mesh = build_mesh(64, 2.0, 3).unwrap();
        let spec = ProblemSpec::power_law(3, 0.0).unwrap();
        let z = vec![0.0; 65];
        let r = pohozaev_residual(&mesh, &spec, 0.5, &z, &z, 0.0, &Field::RadialOverN).unwrap();
        assert_eq!(r.lhs_volume, 0.0);
        assert_eq!(r.rhs_volume, 0.0);
        assert_eq!(r.boundary_term, 0.0);
        assert_eq!(r.relative_residual, 0.0);
    }

    #[test]
    fn manufactured_quadratic_is_exact() {
        for n in [2usize, 3, 5] {
            let mesh = build_mesh(2048, 2.0, n).unwrap();
            let v: Vec<f64> = mesh.nodes().iter().map(|r| 1.0 - r * r).collect();
            let nf = 2.0 * n as f64;
            let f = |_: usize, _: f64| Ok(nf);
            let big = |_: usize, s: f64| Ok(nf * s);
            let zero = |_: usize, _: f64| Ok(0.0);
            let nl = Nonlinearity { f: &f, big_f: &big, r_dr_big_f: &zero };
            for a in [0.0, 0.25] {
                let rep = pohozaev_general(&mesh, &v, a, 1.0 / n as f64, &nl).unwrap();
                assert!(rep.relative_residual < 1e-8, "N={n} a={a}: {rep:?}");
            }
        }
    }

    #[test]
    fn reduced_and_full_forms_on_minimal_solution() {
        let mesh = build_mesh(512, 2.0, 3).unwrap();
        let spec = ProblemSpec::power_law(3, 0.0).unwrap();
        let lam = 0.5;
        let sol = crate::solver::newton_solve(&mesh, &spec, lam, &vec![0.0; 513], &Default::default()).unwrap();
        let z = vec![0.0; 513];
        let rep = pohozaev_residual(&mesh, &spec, lam, &z, &sol.u, 0.0, &Field::RadialOverN).unwrap();
        assert_eq!(rep.relative_residual, 0.0);
        let full = pohozaev_residual(&mesh, &spec, lam, &sol.u, &z, 0.0, &Field::RadialOverN).unwrap();
        assert!(full.relative_residual < 1e-3, "{full:?}");
    }

    #[test]
    fn affine_field_reduces_to_trace() {
        let mesh = build_mesh(256, 2.0, 3).unwrap();
        let spec = ProblemSpec::power_law(3, 1.0).unwrap();
        let sol = crate::solver::newton_solve(&mesh, &spec, 1.0, &vec![0.0; 257], &Default::default()).unwrap();
        let z = vec![0.0; 257];
        let a = vec![vec![0.5, 0.2, 0.0], vec![-0.1, 0.25, 0.0], vec![0.0, 0.3, 0.25]];
        let aff = Field::Affine { a, b: vec![0.1, -0.2, 0.0] };
        let r1 = pohozaev_residual(&mesh, &spec, 1.0, &sol.u, &z, 0.1, &aff).unwrap();
        let r2 = pohozaev_residual(&mesh, &spec, 1.0, &sol.u, &z, 0.1, &Field::RadialOverN).unwrap();
        assert!((r1.residual - r2.residual).abs() < 1e-14 * r2.lhs_volume.abs().max(1.0));
    }

    #[test]
    fn mu_bar_examples() {
        assert!((mu_bar_affine(&identity_over_n(4)).unwrap() - 0.25).abs() < 1e-14);
        assert!((mu_bar_affine(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap() - 1.0).abs() < 1e-14);
        let m = mu_bar_affine(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!((m - (1.0 + 2f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn certificate_examples() {
        let s3 = unit_sphere_samples(3, 200);
        let c = star_certificate(&s3, 3, 0.0, &identity_over_n(3), &[0.0; 3]).unwrap();
        assert_eq!(c.verdict, Verdict::UniquenessForSmallLambda);
        assert!((c.m_bound - 1.0 / 3.0).abs() < 1e-14);
        assert!((c.boundary_min_flux - 1.0 / 3.0).abs() < 1e-12);

        let s2 = unit_sphere_samples(2, 200);
        let c = star_certificate(&s2, 2, 0.0, &identity_over_n(2), &[0.0; 2]).unwrap();
        assert_eq!(c.verdict, Verdict::Inconclusive);
        // α > 0 lifts the dimension condition but μ̄ = 1/2 is not below 1/2
        let c = star_certificate(&s2, 2, 0.5, &identity_over_n(2), &[0.0; 2]).unwrap();
        assert_eq!(c.verdict, Verdict::Inconclusive);
        assert_eq!(c.notes.len(), 1);

        let a = vec![vec![0.3, 0.0, 0.0], vec![0.0, 0.3, 0.0], vec![0.0, 0.0, 0.3]];
        let c = star_certificate(&s3, 3, 0.0, &a, &[0.0; 3]).unwrap();
        assert_eq!(c.verdict, Verdict::Inconclusive);
        assert_eq!(c.notes.len(), 1);

        let bad = vec![BoundarySample { point: vec![1.0, 0.0], normal: vec![1.1, 0.0] }];
        assert!(matches!(
            star_certificate(&bad, 2, 0.0, &identity_over_n(2), &[0.0; 2]),
            Err(Error::Normalization { index: 0, .. })
        ));
    }

    #[test]
    fn boundary_table_parsing() {
        let text = "# x y nx ny\n1 0 1 0\n0 1 0 1 # top\n\n";
        let s = parse_boundary_table(text, 2).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].normal, vec![0.0, 1.0]);
        assert!(matches!(parse_boundary_table("1 0 1\n", 2), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_boundary_table("\n1 0 x 0\n", 2), Err(Error::Parse { line: 2, .. })));
    }

    proptest! {
        #[test]
        fn g_is_derivative_of_big_g(u in 0.0f64..0.8, frac in 0.05f64..0.9) {
            let s = frac * (1.0 - u) * 0.9;
            let eps = 1e-6 * (1.0 - u);
            let fd = (big_g_lambda(u, s + eps).unwrap() - big_g_lambda(u, s - eps).unwrap()) / (2.0 * eps);
            let g = g_lambda(u, s).unwrap();
            prop_assert!((fd - g).abs() <= 1e-5 * g.abs().max(1.0));
            prop_assert!(g >= 0.0);
        }

        #[test]
        fn certificate_is_sound(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let n = rng.random_range(2..=5usize);
            let a: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-0.5..0.5)).collect()).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
            let samples = unit_sphere_samples(n, 64);
            let c = star_certificate(&samples, n, 1.0, &a, &b).unwrap();
            if c.verdict == Verdict::UniquenessForSmallLambda {
                prop_assert!((trace(&a) - 1.0).abs() <= DIV_TOL);
                prop_assert!(c.boundary_min_flux >= 0.0);
            }
        }
    }
}
