mod common;

use mems_bifurcate::continuation::amplitude_solve;
use mems_bifurcate::mesh::{assemble_jacobian, build_mesh};
use mems_bifurcate::spectrum::{smallest_eigenvalues, sturm_count, symmetrize, weighted_asymmetry, DEFAULT_TOL};
use mems_bifurcate::{Execution, NewtonParams, ProblemSpec};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn states() -> Vec<(usize, f64, Vec<f64>, f64)> {
    let mut out = Vec::new();
    for (n, gamma, amp) in [(2, 1.0, None), (2, 2.0, Some(0.5)), (2, 2.0, Some(0.95)), (5, 1.5, Some(0.9))] {
        let mesh = build_mesh(32, gamma, n).unwrap();
        let spec = ProblemSpec::power_law(n, 0.0).unwrap();
        match amp {
            None => out.push((n, gamma, vec![0.0; 33], 0.0)),
            Some(a) => {
                let s = amplitude_solve(&mesh, &spec, a, &NewtonParams::default()).unwrap();
                out.push((n, gamma, s.u, s.lambda));
            }
        }
    }
    out
}

#[test]
fn symmetrized_and_raw_spectra_agree() {
    for (n, gamma, u, lambda) in states() {
        let mesh = build_mesh(32, gamma, n).unwrap();
        let spec = ProblemSpec::power_law(n, 0.0).unwrap();
        let raw = assemble_jacobian(&mesh, &spec, &u, lambda).unwrap();
        let dense = DMatrix::from_row_slice(raw.len(), raw.len(), &raw.to_dense());
        let mut raw_ev: Vec<f64> = dense
            .complex_eigenvalues()
            .iter()
            .map(|z| {
                assert!(z.im.abs() < 1e-8 * z.re.abs().max(1.0), "complex eigenvalue {z}");
                z.re
            })
            .collect();
        raw_ev.sort_by(f64::total_cmp);

        let t = symmetrize(&mesh, &spec, &u, lambda).unwrap();
        let sym_ev = common::dense_jacobi(t.to_dense(), t.len());
        for (x, y) in raw_ev.iter().zip(&sym_ev) {
            assert!((x - y).abs() <= 1e-10 * y.abs().max(1.0), "{x} vs {y}");
        }
        let sr = smallest_eigenvalues(&t, 5, DEFAULT_TOL, Execution::Sequential).unwrap();
        for (x, y) in sr.eigenvalues.iter().zip(&sym_ev) {
            assert!((x - y).abs() <= 1e-10 * y.abs().max(1.0), "{x} vs {y}");
        }
        assert_eq!(sturm_count(&t, 0.0), sym_ev.iter().filter(|&&x| x < 0.0).count());
    }
}

#[test]
fn weights_symmetrize_the_laplacian() {
    let mesh = build_mesh(64, 2.0, 4).unwrap();
    let lap = mems_bifurcate::mesh::assemble_laplacian(&mesh);
    let m = mesh.intervals();
    assert!(weighted_asymmetry(&lap, &mesh.weights()[..m]) < 1e-12);
}

#[test]
fn disk_spectrum_converges() {
    let mesh = build_mesh(2048, 2.0, 2).unwrap();
    let spec = ProblemSpec::power_law(2, 0.0).unwrap();
    let t = symmetrize(&mesh, &spec, &vec![0.0; 2049], 0.0).unwrap();
    let sr = smallest_eigenvalues(&t, 2, DEFAULT_TOL, Execution::Parallel).unwrap();
    assert!((sr.eigenvalues[0] / common::J01_SQ - 1.0).abs() < 1e-4);
    assert!((sr.eigenvalues[1] / common::J02_SQ - 1.0).abs() < 1e-3);
    assert_eq!(sturm_count(&t, 6.0), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shifted_counts_match_dense(shift in -50.0f64..200.0, amp in 0.05f64..0.97) {
        let mesh = build_mesh(24, 1.0, 2).unwrap();
        let spec = ProblemSpec::power_law(2, 0.0).unwrap();
        let s = amplitude_solve(&mesh, &spec, amp, &NewtonParams::default()).unwrap();
        let t = symmetrize(&mesh, &spec, &s.u, s.lambda).unwrap();
        let ev = common::dense_jacobi(t.to_dense(), t.len());
        prop_assume!(ev.iter().all(|x| (x - shift).abs() > 1e-8));
        prop_assert_eq!(sturm_count(&t, shift), ev.iter().filter(|&&x| x < shift).count());
    }
}
