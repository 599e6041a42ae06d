//! Eigenvalues of the linearised operator `L = -Δ - 2λ f / (1-u)³`.
//!
//! The discrete operator is symmetric in the quadrature inner product, so a
//! diagonal similarity by `W^{1/2}` turns it into a symmetric tridiagonal
//! matrix. Eigenvalues are then found by bisection on Sturm counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mesh::{self, RadialMesh, TridiagonalOperator};
use crate::problem::ProblemSpec;

/// Relative bisection width used when callers have no better idea.
pub const DEFAULT_TOL: f64 = 1e-13;
/// Bisection stops once the bracket is narrower than this, whatever `tol` says.
const ABS_FLOOR: f64 = 1e-14;
const MAX_BISECTIONS: usize = 400;
const MAX_K: usize = 10;
const INVERSE_ITERATIONS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymmetricTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Size(0));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::domain(format!("off-diagonal has {} entries, expected {}", off.len(), diag.len() - 1)));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.off[i - 1].abs();
                }
                if i < self.off.len() {
                    s += self.off[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.len() {
            let mut rad = 0.0;
            if i > 0 {
                rad += self.off[i - 1].abs();
            }
            if i < self.off.len() {
                rad += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - rad);
            hi = hi.max(self.diag[i] + rad);
        }
        (lo, hi)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.len();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = self.diag[i];
            if i + 1 < n {
                a[i * n + i + 1] = self.off[i];
                a[(i + 1) * n + i] = self.off[i];
            }
        }
        a
    }

    /// Symmetric form of `op` given weights `w` with `W op` symmetric.
    ///
    /// The off-diagonal is `sign · sqrt(op_{i,i+1} op_{i+1,i})`, which equals
    /// both `sqrt(w_i / w_{i+1}) op_{i,i+1}` and its mirror when `W op` is
    /// exactly symmetric.
    pub fn from_weighted(op: &TridiagonalOperator, weights: &[f64]) -> Result<Self> {
        let n = op.len();
        if weights.len() < n {
            return Err(Error::domain("fewer weights than unknowns"));
        }
        if let Some((index, &w)) = weights[..n].iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
            return Err(Error::Singularity { index, gap: w });
        }
        let off = (0..n - 1)
            .map(|i| {
                let prod = op.sup[i] * op.sub[i + 1];
                if prod < 0.0 {
                    // not sign-symmetric; fall back to the similarity formula
                    (weights[i] / weights[i + 1]).sqrt() * op.sup[i]
                } else {
                    prod.sqrt().copysign(op.sup[i])
                }
            })
            .collect();
        Self::new(op.diag.clone(), off)
    }
}

/// Largest relative mismatch `|w_i a_{i,i+1} - w_{i+1} a_{i+1,i}|` of `W op`.
pub fn weighted_asymmetry(op: &TridiagonalOperator, weights: &[f64]) -> f64 {
    (0..op.len().saturating_sub(1))
        .map(|i| {
            let a = weights[i] * op.sup[i];
            let b = weights[i + 1] * op.sub[i + 1];
            (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

/// Symmetric tridiagonal form of the discrete linearisation at `(u, λ)`.
pub fn symmetrize(mesh: &RadialMesh, spec: &ProblemSpec, u: &[f64], lambda: f64) -> Result<SymmetricTridiagonal> {
    let op = mesh::assemble_jacobian(mesh, spec, u, lambda)?;
    SymmetricTridiagonal::from_weighted(&op, mesh.weights())
}

/// Number of eigenvalues of `t` strictly below `mu`.
///
/// Counts negative pivots of the LDLᵀ factorisation of `t - mu I`. A pivot
/// smaller in magnitude than `pivmin` is replaced by `+pivmin`, so an
/// eigenvalue sitting exactly at `mu` is not counted.
pub fn sturm_count(t: &SymmetricTridiagonal, mu: f64) -> usize {
    let max_off2 = t.off.iter().fold(1.0f64, |m, &b| m.max(b * b));
    let pivmin = f64::MIN_POSITIVE * max_off2;
    let mut count = 0;
    let mut d = t.diag[0] - mu;
    if d.abs() < pivmin {
        d = pivmin;
    }
    if d < 0.0 {
        count += 1;
    }
    for i in 1..t.len() {
        let b = t.off[i - 1];
        d = (t.diag[i] - mu) - b * b / d;
        if d.abs() < pivmin {
            d = pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// `μ_1 <= μ_2 <= ... <= μ_k`.
    pub eigenvalues: Vec<f64>,
    pub morse_index_radial: usize,
    pub k: usize,
    /// `‖T φ - μ φ‖₂ / ‖φ‖₂` after the inverse-iteration polish.
    pub residuals: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
}

impl SpectrumResult {
    pub fn mu1(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// The `j`-th (zero-based) eigenvalue by bisection on Sturm counts.
pub fn bisect_eigenvalue(t: &SymmetricTridiagonal, j: usize, tol: f64) -> f64 {
    let (mut lo, mut hi) = t.gershgorin();
    let pad = f64::EPSILON * t.norm_inf().max(1.0) * 4.0;
    lo -= pad;
    hi += pad;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let width = hi - lo;
        if width <= ABS_FLOOR || width <= tol * lo.abs().max(hi.abs()) {
            break;
        }
        if sturm_count(t, mid) > j {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `(t - sigma I) x = b` with tiny pivots nudged away from zero.
fn shifted_solve(t: &SymmetricTridiagonal, sigma: f64, b: &[f64]) -> Vec<f64> {
    let n = t.len();
    let tiny = f64::EPSILON * t.norm_inf().max(f64::MIN_POSITIVE);
    let mut c = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut piv = t.diag[0] - sigma;
    if piv.abs() < tiny {
        piv = tiny;
    }
    y[0] = b[0] / piv;
    for i in 1..n {
        c[i - 1] = t.off[i - 1] / piv;
        piv = t.diag[i] - sigma - t.off[i - 1] * c[i - 1];
        if piv.abs() < tiny {
            piv = tiny;
        }
        y[i] = (b[i] - t.off[i - 1] * y[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        y[i] -= c[i] * y[i + 1];
    }
    y
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn polish(t: &SymmetricTridiagonal, mu: f64) -> (Vec<f64>, f64) {
    let n = t.len();
    // a start vector with no special alignment to any eigenvector
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i as f64) * 0.7548776662).fract()).collect();
    for _ in 0..INVERSE_ITERATIONS {
        x = shifted_solve(t, mu, &x);
        let s = norm2(&x);
        if !(s > 0.0 && s.is_finite()) {
            break;
        }
        x.iter_mut().for_each(|v| *v /= s);
    }
    let tx = t.apply(&x);
    let res = norm2(&tx.iter().zip(&x).map(|(a, b)| a - mu * b).collect::<Vec<_>>()) / norm2(&x);
    (x, res)
}

/// The `k` smallest eigenvalues, each bracketed to relative width `tol`.
pub fn smallest_eigenvalues(t: &SymmetricTridiagonal, k: usize, tol: f64, exec: Execution) -> Result<SpectrumResult> {
    if k == 0 || k > MAX_K {
        return Err(Error::domain(format!("k must lie in 1..={MAX_K}, got {k}")));
    }
    if k > t.len() {
        return Err(Error::domain(format!("k = {k} exceeds the dimension {}", t.len())));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("eigenvalue tolerance must be positive"));
    }
    let pairs = exec.map_range(k, |j| {
        let mu = bisect_eigenvalue(t, j, tol);
        let (v, r) = polish(t, mu);
        (mu, v, r)
    });
    let mut eigenvalues = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut eigenvectors = Vec::with_capacity(k);
    for (mu, v, r) in pairs {
        eigenvalues.push(mu);
        residuals.push(r);
        eigenvectors.push(v);
    }
    Ok(SpectrumResult { eigenvalues, morse_index_radial: sturm_count(t, 0.0), k, residuals, eigenvectors })
}

/// Radial Morse index: the number of negative eigenvalues of `L_{u,λ}`.
pub fn morse_index_radial(mesh: &RadialMesh, spec: &ProblemSpec, u: &[f64], lambda: f64) -> Result<usize> {
    Ok(sturm_count(&symmetrize(mesh, spec, u, lambda)?, 0.0))
}

/// Smallest eigenvalue together with the eigenvalue closest to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub mu1: f64,
    pub mu_near_zero: f64,
    pub morse_index_radial: usize,
}

pub fn stability_summary(mesh: &RadialMesh, spec: &ProblemSpec, u: &[f64], lambda: f64) -> Result<StabilitySummary> {
    let t = symmetrize(mesh, spec, u, lambda)?;
    let m = sturm_count(&t, 0.0);
    let mu1 = bisect_eigenvalue(&t, 0, DEFAULT_TOL);
    let above = if m == 0 { mu1 } else { bisect_eigenvalue(&t, m, DEFAULT_TOL) };
    let mu_near_zero = if m == 0 {
        mu1
    } else {
        let below = if m == 1 { mu1 } else { bisect_eigenvalue(&t, m - 1, DEFAULT_TOL) };
        if below.abs() < above.abs() {
            below
        } else {
            above
        }
    };
    Ok(StabilitySummary { mu1, mu_near_zero, morse_index_radial: m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use crate::problem::ProblemSpec;
    use proptest::prelude::*;

    const J01_SQ: f64 = 5.783185962946785;
    const J02_SQ: f64 = 30.47126234366209;

    fn diag_only(d: &[f64]) -> SymmetricTridiagonal {
        SymmetricTridiagonal::new(d.to_vec(), vec![0.0; d.len() - 1]).unwrap()
    }

    #[test]
    fn sturm_examples() {
        assert_eq!(sturm_count(&diag_only(&[1.0, 2.0, 3.0]), 0.0), 0);
        assert_eq!(sturm_count(&diag_only(&[-1.0, 2.0, 3.0]), 0.0), 1);
        // eigenvalue exactly at the shift is not counted
        assert_eq!(sturm_count(&diag_only(&[0.0, 2.0]), 0.0), 0);
    }

    #[test]
    fn disk_laplacian_counts() {
        let mesh = build_mesh(1024, 1.0, 2).unwrap();
        let spec = ProblemSpec::power_law(2, 0.0).unwrap();
        let t = symmetrize(&mesh, &spec, &vec![0.0; 1025], 0.0).unwrap();
        assert_eq!(sturm_count(&t, 6.0), 1);
        assert_eq!(sturm_count(&t, 5.5), 0);
        assert_eq!(sturm_count(&t, 31.0), 2);
    }

    #[test]
    fn disk_first_eigenvalues() {
        let mesh = build_mesh(4096, 1.0, 2).unwrap();
        let spec = ProblemSpec::power_law(2, 0.0).unwrap();
        let t = symmetrize(&mesh, &spec, &vec![0.0; 4097], 0.0).unwrap();
        let s = smallest_eigenvalues(&t, 2, DEFAULT_TOL, Execution::default()).unwrap();
        assert!((s.eigenvalues[0] / J01_SQ - 1.0).abs() < 1e-3, "{:?}", s.eigenvalues);
        assert!((s.eigenvalues[1] / J02_SQ - 1.0).abs() < 1e-3);
        assert_eq!(s.morse_index_radial, 0);
        for r in &s.residuals {
            assert!(*r < 1e-6 * t.norm_inf(), "{r}");
        }
    }

    #[test]
    fn symmetric_part_matches_similarity() {
        let mesh = build_mesh(64, 2.0, 5).unwrap();
        let spec = ProblemSpec::power_law(5, 1.0).unwrap();
        let u: Vec<f64> = mesh.nodes().iter().map(|r| 0.4 * (1.0 - r * r)).collect();
        let op = mesh::assemble_jacobian(&mesh, &spec, &u, 2.0).unwrap();
        assert!(weighted_asymmetry(&op, mesh.weights()) < 1e-12);
        let t = SymmetricTridiagonal::from_weighted(&op, mesh.weights()).unwrap();
        let w = mesh.weights();
        for i in 0..t.off.len() {
            let a = (w[i] / w[i + 1]).sqrt() * op.sup[i];
            let b = (w[i + 1] / w[i]).sqrt() * op.sub[i + 1];
            assert!((t.off[i] - a).abs() <= 1e-12 * a.abs());
            assert!((t.off[i] - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn small_lambda_minimal_solution_is_stable() {
        let mesh = build_mesh(256, 2.0, 2).unwrap();
        let spec = ProblemSpec::power_law(2, 0.0).unwrap();
        let sol = crate::solver::newton_solve(&mesh, &spec, 0.05, &vec![0.0; 257], &Default::default()).unwrap();
        let t = symmetrize(&mesh, &spec, &sol.u, 0.05).unwrap();
        let s = smallest_eigenvalues(&t, 3, DEFAULT_TOL, Execution::Sequential).unwrap();
        assert!(s.mu1() > 0.0);
        assert_eq!(s.morse_index_radial, 0);
        assert_eq!(morse_index_radial(&mesh, &spec, &sol.u, 0.05).unwrap(), 0);
        // the potential lowers every eigenvalue
        let t0 = symmetrize(&mesh, &spec, &vec![0.0; 257], 0.0).unwrap();
        let s0 = smallest_eigenvalues(&t0, 3, DEFAULT_TOL, Execution::Sequential).unwrap();
        for (a, b) in s.eigenvalues.iter().zip(&s0.eigenvalues) {
            assert!(a < b);
        }
    }

    #[test]
    fn rejects_bad_k() {
        let t = diag_only(&[1.0, 2.0]);
        assert!(smallest_eigenvalues(&t, 0, 1e-12, Execution::Sequential).is_err());
        assert!(smallest_eigenvalues(&t, 3, 1e-12, Execution::Sequential).is_err());
        assert!(smallest_eigenvalues(&t, 1, 0.0, Execution::Sequential).is_err());
    }

    #[test]
    fn modes_agree() {
        let mesh = build_mesh(128, 2.0, 3).unwrap();
        let spec = ProblemSpec::power_law(3, 0.0).unwrap();
        let t = symmetrize(&mesh, &spec, &vec![0.0; 129], 0.0).unwrap();
        let a = smallest_eigenvalues(&t, 5, DEFAULT_TOL, Execution::Sequential).unwrap();
        let b = smallest_eigenvalues(&t, 5, DEFAULT_TOL, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn bisection_agrees_with_counts(n in 3usize..30, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let diag: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let off: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-2.0..2.0)).collect();
            let t = SymmetricTridiagonal::new(diag, off).unwrap();
            let k = n.min(MAX_K);
            let s = smallest_eigenvalues(&t, k, 1e-14, Execution::Sequential).unwrap();
            prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            let negatives = s.eigenvalues.iter().filter(|&&m| m < 0.0).count();
            if k == n || s.eigenvalues[k - 1] >= 0.0 {
                prop_assert_eq!(negatives, s.morse_index_radial);
            }
            for (j, &mu) in s.eigenvalues.iter().enumerate() {
                let eps = 1e-9;
                prop_assert!(sturm_count(&t, mu - eps) <= j);
                prop_assert!(sturm_count(&t, mu + eps) > j);
                prop_assert!(s.residuals[j] < 1e-8, "residual {}", s.residuals[j]);
            }
        }
    }
}
