//! Numerical continuation and verification for the radial MEMS equation
//!
//! ```text
//!   -Δu = λ |x|^α h(|x|) / (1 - u)²   in the unit ball B ⊂ R^N,
//!   0 < u < 1 in B,  u = 0 on ∂B.
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`problem`] holds the problem instance and the closed-form extremal data.
//! * [`mesh`] discretises the radial Laplacian on a graded mesh.
//! * [`linalg`] has the tridiagonal, bordered and small dense kernels.
//! * [`solver`] does fixed-λ Newton solves, minimal-branch sweeps, pull-in
//!   bracketing and the independent shooting oracle.
//! * [`continuation`] traces the full branch through its folds.
//! * [`spectrum`] counts negative eigenvalues of the linearised operator.
//! * [`pohozaev`] evaluates the Pucci–Serrin identity and star-shape certificates.
//! * [`cli_io`] parses run configurations and writes the CSV/JSON artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_io;
pub mod continuation;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod mesh;
pub mod pohozaev;
pub mod problem;
pub mod solver;
pub mod spectrum;

pub use continuation::{Branch, BranchPoint, ContinuationParams, Fold};
pub use error::{Error, Result};
pub use exec::Execution;
pub use mesh::{RadialMesh, TridiagonalOperator};
pub use problem::{ClosedFormExtremal, HModifier, ProblemSpec, Regime, StabilityClass};
pub use solver::{NewtonParams, Solution};
pub use spectrum::{SpectrumResult, SymmetricTridiagonal};
