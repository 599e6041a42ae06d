//! Tridiagonal, bordered-tridiagonal and small dense symmetric kernels.
//!
//! Tridiagonal matrices are passed as three slices of equal length `n`:
//! `sub[i]` multiplies `x[i-1]` in row `i` (`sub[0]` is ignored) and
//! `sup[i]` multiplies `x[i+1]` (`sup[n-1]` is ignored).

use crate::error::{Error, Result};

/// Relative size below which a Thomas pivot is treated as zero.
const PIVOT_RTOL: f64 = 1e-14;

/// Thomas elimination without pivoting.
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::domain("tridiagonal operand lengths differ"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    check_pivot(0, piv, diag[0].abs() + sup[0].abs())?;
    c[0] = sup[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - sub[i] * c[i - 1];
        check_pivot(i, piv, diag[i].abs() + sub[i].abs() + sup[i].abs())?;
        c[i] = if i + 1 < n { sup[i] / piv } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

fn check_pivot(row: usize, pivot: f64, scale: f64) -> Result<()> {
    if !pivot.is_finite() || pivot.abs() <= PIVOT_RTOL * scale || scale == 0.0 {
        return Err(Error::Pivot { row, pivot: pivot.abs() });
    }
    Ok(())
}

/// Smallest Thomas pivot relative to its row scale.
///
/// Drops toward zero as the matrix approaches singularity, which is how
/// fold proximity shows up in a plain Newton solve.
pub fn min_relative_pivot(sub: &[f64], diag: &[f64], sup: &[f64]) -> f64 {
    let n = diag.len();
    let mut min = f64::INFINITY;
    let mut c_prev = 0.0;
    for i in 0..n {
        let s = if i > 0 { sub[i] } else { 0.0 };
        let piv = diag[i] - s * c_prev;
        let scale = diag[i].abs() + s.abs() + if i + 1 < n { sup[i].abs() } else { 0.0 };
        min = min.min(piv.abs() / scale);
        c_prev = if i + 1 < n { sup[i] / piv } else { 0.0 };
    }
    min
}

/// Solves the bordered system
///
/// ```text
/// [ T   col ] [x]   [rhs     ]
/// [ rowᵀ  d ] [y] = [rhs_last]
/// ```
///
/// with `T` tridiagonal. Banded partial pivoting (row `k` against row `k+1`)
/// keeps the first `n-1` pivots at least as large as the sub-diagonal, so a
/// singular `T` only surfaces in the final 2×2 block, which is pivoted in
/// full. The system stays solvable at folds where `T` alone is singular.
#[allow(clippy::too_many_arguments)]
pub fn solve_bordered(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    col: &[f64],
    row: &[f64],
    corner: f64,
    rhs: &[f64],
    rhs_last: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = diag.len();
    if n == 0 || sub.len() != n || sup.len() != n || col.len() != n || row.len() != n || rhs.len() != n {
        return Err(Error::domain("bordered operand lengths differ"));
    }
    let at = |v: &[f64], i: usize| if i < n { v[i] } else { 0.0 };

    // U rows: entries at columns k, k+1, k+2 plus the border column.
    let mut u = vec![[0.0f64; 3]; n];
    let mut ub = vec![0.0; n];
    let mut ur = vec![0.0; n];
    let mut z = row.to_vec();
    let mut zn = corner;
    let mut rn = rhs_last;

    let mut cur = [diag[0], at(sup, 0)];
    let mut cur_b = col[0];
    let mut cur_r = rhs[0];
    for k in 0..n - 1 {
        let nxt = [sub[k + 1], diag[k + 1], if k + 2 < n { sup[k + 1] } else { 0.0 }];
        let (p, pb, pr, o, ob, or) = if nxt[0].abs() > cur[0].abs() {
            (nxt, col[k + 1], rhs[k + 1], [cur[0], cur[1], 0.0], cur_b, cur_r)
        } else {
            ([cur[0], cur[1], 0.0], cur_b, cur_r, nxt, col[k + 1], rhs[k + 1])
        };
        if p[0] == 0.0 || !p[0].is_finite() {
            return Err(Error::Pivot { row: k, pivot: p[0].abs() });
        }
        let m = o[0] / p[0];
        cur = [o[1] - m * p[1], o[2] - m * p[2]];
        cur_b = ob - m * pb;
        cur_r = or - m * pr;

        let mz = z[k] / p[0];
        z[k + 1] -= mz * p[1];
        if k + 2 < n {
            z[k + 2] -= mz * p[2];
        }
        zn -= mz * pb;
        rn -= mz * pr;

        u[k] = p;
        ub[k] = pb;
        ur[k] = pr;
    }

    // Final 2×2: [cur[0] cur_b; z[n-1] zn] [x_{n-1}; y] = [cur_r; rn]
    let (a11, a12, a21, a22) = (cur[0], cur_b, z[n - 1], zn);
    let (xl, y) = solve_2x2(a11, a12, a21, a22, cur_r, rn)
        .ok_or(Error::Pivot { row: n, pivot: (a11 * a22 - a12 * a21).abs() })?;

    let mut x = vec![0.0; n];
    x[n - 1] = xl;
    for k in (0..n - 1).rev() {
        let x1 = x[k + 1];
        let x2 = if k + 2 < n { x[k + 2] } else { 0.0 };
        x[k] = (ur[k] - u[k][1] * x1 - u[k][2] * x2 - ub[k] * y) / u[k][0];
    }
    Ok((x, y))
}

fn solve_2x2(a11: f64, a12: f64, a21: f64, a22: f64, b1: f64, b2: f64) -> Option<(f64, f64)> {
    // Gaussian elimination with complete pivoting.
    let entries = [a11.abs(), a12.abs(), a21.abs(), a22.abs()];
    let (imax, &amax) = entries.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    if amax == 0.0 {
        return None;
    }
    // Permute so the pivot sits at (0,0): rows swap if imax >= 2, cols swap if odd.
    let swap_rows = imax >= 2;
    let swap_cols = imax % 2 == 1;
    let (mut m11, mut m12, mut m21, mut m22, mut r1, mut r2) = (a11, a12, a21, a22, b1, b2);
    if swap_rows {
        std::mem::swap(&mut m11, &mut m21);
        std::mem::swap(&mut m12, &mut m22);
        std::mem::swap(&mut r1, &mut r2);
    }
    if swap_cols {
        std::mem::swap(&mut m11, &mut m12);
        std::mem::swap(&mut m21, &mut m22);
    }
    let l = m21 / m11;
    let s = m22 - l * m12;
    if s == 0.0 || !s.is_finite() {
        return None;
    }
    let q2 = (r2 - l * r1) / s;
    let q1 = (r1 - m12 * q2) / m11;
    Some(if swap_cols { (q2, q1) } else { (q1, q2) })
}

/// Eigenvalues of a small dense symmetric matrix (row-major `n × n`) by
/// cyclic Jacobi rotations, sorted ascending.
pub fn jacobi_eigenvalues(matrix: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(matrix.len(), n * n, "matrix must be n×n");
    let mut a = matrix.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matvec(sub: &[f64], diag: &[f64], sup: &[f64], x: &[f64]) -> Vec<f64> {
        let n = diag.len();
        (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn thomas_identity() {
        let n = 5;
        let e2: Vec<f64> = (0..n).map(|i| if i == 2 { 1.0 } else { 0.0 }).collect();
        let x = thomas(&vec![0.0; n], &vec![1.0; n], &vec![0.0; n], &e2).unwrap();
        assert_eq!(x, e2);
    }

    #[test]
    fn thomas_zero_matrix_is_pivot_error() {
        let z = vec![0.0; 4];
        assert!(matches!(thomas(&z, &z, &z, &[1.0; 4]), Err(Error::Pivot { row: 0, .. })));
    }

    #[test]
    fn bordered_solves_with_singular_block() {
        // [[1,1,0],[1,2,1],[0,1,1]] is singular; the border restores rank.
        let diag_s = [1.0, 2.0, 1.0];
        let sub_s = [0.0, 1.0, 1.0];
        let sup_s = [1.0, 1.0, 0.0];
        let col = [1.0, 0.0, 0.0];
        let row = [1.0, 1.0, 1.0];
        let rhs = [1.0, 2.0, 3.0];
        let (x, y) = solve_bordered(&sub_s, &diag_s, &sup_s, &col, &row, 0.5, &rhs, 4.0).unwrap();
        let mut r = matvec(&sub_s, &diag_s, &sup_s, &x);
        for i in 0..3 {
            r[i] += col[i] * y - rhs[i];
        }
        let last = row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + 0.5 * y - 4.0;
        assert!(r.iter().all(|v| v.abs() < 1e-12), "{r:?}");
        assert!(last.abs() < 1e-12);
        assert!(thomas(&sub_s, &diag_s, &sup_s, &rhs).is_err());
    }

    proptest! {
        #[test]
        fn thomas_residual_small(n in 2usize..60, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let sub: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sup: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let diag: Vec<f64> = (0..n).map(|_| 3.0 + rng.random_range(0.0..1.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = thomas(&sub, &diag, &sup, &b).unwrap();
            let r = matvec(&sub, &diag, &sup, &x);
            let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            let rn = r.iter().zip(&b).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
            prop_assert!(rn <= 1e-10 * bn.max(1e-300));
        }

        #[test]
        fn bordered_residual_small(n in 2usize..40, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let mut g = || rng.random_range(-1.0..1.0);
            let sub: Vec<f64> = (0..n).map(|_| g()).collect();
            let sup: Vec<f64> = (0..n).map(|_| g()).collect();
            let diag: Vec<f64> = (0..n).map(|_| g()).collect();
            let col: Vec<f64> = (0..n).map(|_| g()).collect();
            let row: Vec<f64> = (0..n).map(|_| g()).collect();
            let rhs: Vec<f64> = (0..n).map(|_| g()).collect();
            let (corner, rl) = (g(), g());
            if let Ok((x, y)) = solve_bordered(&sub, &diag, &sup, &col, &row, corner, &rhs, rl) {
                // random systems can be ill-conditioned; only check finite,
                // well-scaled solutions
                let xn = x.iter().fold(y.abs(), |m, v| m.max(v.abs()));
                prop_assume!(xn < 1e6);
                let mut r = matvec(&sub, &diag, &sup, &x);
                for i in 0..n { r[i] += col[i] * y - rhs[i]; }
                let last = row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + corner * y - rl;
                let tol = 1e-9 * xn.max(1.0);
                prop_assert!(r.iter().all(|v| v.abs() < tol));
                prop_assert!(last.abs() < tol);
            }
        }
    }

    #[test]
    fn jacobi_two_by_two_closed_form() {
        // [[0, .5], [.5, 1]]: eigenvalues 1/2 ± √2/2
        let ev = jacobi_eigenvalues(&[0.0, 0.5, 0.5, 1.0], 2);
        assert!((ev[1] - (1.0 + 2f64.sqrt()) / 2.0).abs() < 1e-14);
        assert!((ev[0] - (1.0 - 2f64.sqrt()) / 2.0).abs() < 1e-14);
    }
}
