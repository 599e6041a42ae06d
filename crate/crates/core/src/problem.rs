//! Problem instance and closed-form quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default threshold used to call an eigenvalue "zero".
pub const DEFAULT_TOL_EIG: f64 = 1e-8;

const H_SAMPLES: usize = 1001;

/// Radial modifier `h(r)` of the profile `f(x) = |x|^α h(|x|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HModifier {
    Constant(f64),
    /// `h(r) = Σ c_k r^k`.
    Polynomial(Vec<f64>),
}

impl Default for HModifier {
    fn default() -> Self {
        HModifier::Constant(1.0)
    }
}

impl HModifier {
    pub fn value(&self, r: f64) -> f64 {
        match self {
            HModifier::Constant(c) => *c,
            HModifier::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * r + ck),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            HModifier::Constant(_) => 0.0,
            HModifier::Polynomial(c) => {
                c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, &ck)| acc * r + k as f64 * ck)
            }
        }
    }

    /// Smallest sampled value on `[0, 1]`.
    pub fn sampled_min(&self) -> f64 {
        (0..H_SAMPLES).map(|i| self.value(i as f64 / (H_SAMPLES - 1) as f64)).fold(f64::INFINITY, f64::min)
    }
}

/// `(N, α, h)` for the problem on the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    dimension: usize,
    alpha: f64,
    h_modifier: HModifier,
}

impl ProblemSpec {
    pub fn new(dimension: usize, alpha: f64, h_modifier: HModifier) -> Result<Self> {
        if dimension < 1 {
            return Err(Error::domain(format!("dimension must be >= 1, got {dimension}")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::domain(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        let h_min = h_modifier.sampled_min();
        if !(h_min > 0.0 && h_min.is_finite()) {
            return Err(Error::domain(format!("h_modifier must stay positive on [0,1] (sampled min {h_min})")));
        }
        Ok(Self { dimension, alpha, h_modifier })
    }

    /// Power-law profile `|x|^α` with `h ≡ 1`.
    pub fn power_law(dimension: usize, alpha: f64) -> Result<Self> {
        Self::new(dimension, alpha, HModifier::Constant(1.0))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn h_modifier(&self) -> &HModifier {
        &self.h_modifier
    }

    /// `f(r) = r^α h(r)`; see [`profile_eval`] for the checked version.
    #[inline]
    pub fn profile(&self, r: f64) -> f64 {
        let power = if self.alpha == 0.0 { 1.0 } else { r.powf(self.alpha) };
        power * self.h_modifier.value(r)
    }

    /// `r f'(r) / f(r)` written so that it is finite at `r = 0`.
    ///
    /// Needed by the `⟨∇_x F, x⟩` term of the Pohozaev identity.
    pub fn profile_log_slope(&self, r: f64) -> f64 {
        self.alpha + r * self.h_modifier.derivative(r) / self.h_modifier.value(r)
    }

    /// Closed-form singular pair for this `(N, α)`.
    pub fn extremal(&self) -> ClosedFormExtremal {
        exact_extremal(self.dimension, self.alpha)
    }
}

/// Checked profile evaluation.
pub fn profile_eval(spec: &ProblemSpec, r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::domain(format!("radius {r} outside [0, 1]")));
    }
    Ok(spec.profile(r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    SingularExtremal,
    ClassicalExtremal,
}

/// `u*(r) = 1 - r^β`, `λ* = (2+α)(3N+α-4)/9` with `β = (2+α)/3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormExtremal {
    pub dimension: usize,
    pub alpha: f64,
    pub lambda_star: f64,
    pub beta: f64,
    pub regime: Regime,
}

impl ClosedFormExtremal {
    pub fn u_star(&self, r: f64) -> f64 {
        1.0 - r.powf(self.beta)
    }
}

pub fn exact_extremal(dimension: usize, alpha: f64) -> ClosedFormExtremal {
    let n = dimension as f64;
    let lambda_star = (2.0 + alpha) * (3.0 * n + alpha - 4.0) / 9.0;
    let beta = (2.0 + alpha) / 3.0;
    let regime = match alpha_threshold(dimension) {
        Ok(alpha_n) if alpha <= alpha_n => Regime::SingularExtremal,
        _ => Regime::ClassicalExtremal,
    };
    ClosedFormExtremal { dimension, alpha, lambda_star, beta, regime }
}

/// `α_N = (3N - 14 - 4√6) / (4 + 2√6)`, defined for `N >= 8`.
pub fn alpha_threshold(dimension: usize) -> Result<f64> {
    if dimension < 8 {
        return Err(Error::domain(format!("alpha threshold needs N >= 8, got {dimension}")));
    }
    let s6 = 6f64.sqrt();
    Ok((3.0 * dimension as f64 - 14.0 - 4.0 * s6) / (4.0 + 2.0 * s6))
}

/// `|β(β + N - 2) - λ*|`, which vanishes when `u*` solves the radial equation.
///
/// `-Δ(1 - r^β) = β(β+N-2) r^(β-2)` and `λ* r^α / r^(2β) = λ* r^(β-2)`.
pub fn verify_extremal_identity(dimension: usize, alpha: f64) -> f64 {
    let ext = exact_extremal(dimension, alpha);
    let beta = ext.beta;
    (beta * (beta + dimension as f64 - 2.0) - ext.lambda_star).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StabilityKind {
    Unstable,
    SemiStable,
    Stable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityClass {
    pub kind: StabilityKind,
    pub mu1: f64,
}

/// Stable if `μ₁ > tol`, semi-stable if `|μ₁| <= tol`, unstable below `-tol`.
pub fn classify_stability(mu1: f64, tol_eig: f64) -> Result<StabilityClass> {
    if !(tol_eig > 0.0) {
        return Err(Error::domain("tol_eig must be positive"));
    }
    let kind = if mu1 > tol_eig {
        StabilityKind::Stable
    } else if mu1 >= -tol_eig {
        StabilityKind::SemiStable
    } else {
        StabilityKind::Unstable
    };
    Ok(StabilityClass { kind, mu1 })
}
