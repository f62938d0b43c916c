//! Squared, logistic and Poisson losses.
//!
//! GLM losses are `L(θ) = (1/n) Σ φ(⟨X_i, θ⟩) − y_i ⟨X_i, θ⟩` with log-partition
//! `φ`. The squared loss uses `L(θ) = (1/n) ‖y − Xθ‖²`; its gradient at θ* is
//! therefore `−(2/n) Xᵀω`, twice the GLM-convention gradient. See
//! [`Loss::lambda_scale`].

use rand_distr::{Bernoulli, Distribution, Poisson};

use crate::error::check_dim;
use crate::linalg::{dot, Matrix};
use crate::prelude::*;
use crate::randomdesign::{sample_noise, NoiseSpec};
use crate::rng::substream;
use crate::{Error, Result};

/// Default linear-predictor level above which the Poisson log-partition is
/// continued by its second-order Taylor polynomial.
pub const POISSON_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum LossKind {
    Squared,
    Logistic,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Loss {
    pub kind: LossKind,
    /// Poisson only: `φ(η) = e^η` for `η ≤ clamp`, continued as a convex
    /// quadratic above it.
    pub clamp: f64,
}

impl From<LossKind> for Loss {
    fn from(kind: LossKind) -> Self {
        Loss { kind, clamp: POISSON_CLAMP }
    }
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Truncation constants for the GLM restricted strong convexity floor.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GlmCurvature {
    /// Truncation level T.
    pub t: f64,
    /// `ℓ_φ(T) = min_{|a| ≤ 2T} φ''(a)`
    pub ell: f64,
    /// Analytic tail bounds `min(1, e·exp(−c T²/κ²))`.
    pub eps1_bar: f64,
    pub eps2_bar: f64,
}

impl GlmCurvature {
    /// `1 / (1 − ε̄₁ − ε̄₂)`, finite only when the tails sum below one.
    pub fn kappa1_factor(&self) -> Option<f64> {
        let rest = 1.0 - self.eps1_bar - self.eps2_bar;
        (rest > 0.0).then(|| 1.0 / rest)
    }
}

impl Loss {
    pub fn squared() -> Self {
        LossKind::Squared.into()
    }

    pub fn logistic() -> Self {
        LossKind::Logistic.into()
    }

    pub fn poisson() -> Self {
        LossKind::Poisson.into()
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            LossKind::Squared => "squared",
            LossKind::Logistic => "logistic",
            LossKind::Poisson => "poisson",
        }
    }

    /// Ratio between this loss's gradient at θ* and the GLM-convention
    /// `(1/n) Xᵀω`: 2 for the squared loss, 1 otherwise. Multiply a λ
    /// calibrated against `R*((1/n)Xᵀω)` by this before solving.
    pub fn lambda_scale(&self) -> f64 {
        match self.kind {
            LossKind::Squared => 2.0,
            _ => 1.0,
        }
    }

    /// `φ(η)`
    pub fn phi(&self, eta: f64) -> f64 {
        match self.kind {
            LossKind::Squared => 0.5 * eta * eta,
            LossKind::Logistic => eta.max(0.0) + (-eta.abs()).exp().ln_1p(),
            LossKind::Poisson => {
                if eta <= self.clamp {
                    eta.exp()
                } else {
                    let d = eta - self.clamp;
                    self.clamp.exp() * (1.0 + d + 0.5 * d * d)
                }
            }
        }
    }

    /// `φ'(η) = E[y | η]`
    pub fn dphi(&self, eta: f64) -> f64 {
        match self.kind {
            LossKind::Squared => eta,
            LossKind::Logistic => sigmoid(eta),
            LossKind::Poisson => {
                if eta <= self.clamp {
                    eta.exp()
                } else {
                    self.clamp.exp() * (1.0 + eta - self.clamp)
                }
            }
        }
    }

    /// `φ''(η)`
    pub fn d2phi(&self, eta: f64) -> f64 {
        match self.kind {
            LossKind::Squared => 1.0,
            LossKind::Logistic => {
                let e = (-eta.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            LossKind::Poisson => eta.min(self.clamp).exp(),
        }
    }

    /// Curvature bound of `φ''` used to size the first solver step.
    pub(crate) fn curvature_scale(&self) -> f64 {
        match self.kind {
            LossKind::Squared => 2.0,
            LossKind::Logistic => 0.25,
            LossKind::Poisson => 1.0,
        }
    }

    fn check(&self, theta: &[f64], x: &Matrix, y: &[f64]) -> Result<()> {
        check_dim(x.cols(), theta.len())?;
        check_dim(x.rows(), y.len())?;
        if x.rows() == 0 {
            return Err(Error::invalid("empty data"));
        }
        if !x.is_finite() || theta.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite value in loss inputs"));
        }
        match self.kind {
            LossKind::Poisson if y.iter().any(|&v| v < 0.0) => {
                Err(Error::invalid("Poisson responses must be nonnegative"))
            }
            LossKind::Logistic if y.iter().any(|&v| !(0.0..=1.0).contains(&v)) => {
                Err(Error::invalid("logistic responses must lie in [0, 1]"))
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, theta: &[f64], x: &Matrix, y: &[f64]) -> Result<f64> {
        self.check(theta, x, y)?;
        Ok(self.value_at(&x.matvec(theta), y))
    }

    pub fn gradient(&self, theta: &[f64], x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
        self.check(theta, x, y)?;
        Ok(self.gradient_at(x, &x.matvec(theta), y))
    }

    /// Loss from the linear predictor `η = Xθ`.
    pub(crate) fn value_at(&self, eta: &[f64], y: &[f64]) -> f64 {
        let n = eta.len() as f64;
        let terms: Vec<f64> = match self.kind {
            LossKind::Squared => eta.iter().zip(y).map(|(e, yi)| (yi - e) * (yi - e)).collect(),
            _ => eta.iter().zip(y).map(|(&e, &yi)| self.phi(e) - yi * e).collect(),
        };
        crate::stats::pairwise_sum(&terms) / n
    }

    pub(crate) fn gradient_at(&self, x: &Matrix, eta: &[f64], y: &[f64]) -> Vec<f64> {
        let n = eta.len() as f64;
        let c = self.lambda_scale() / n;
        let resid: Vec<f64> = eta.iter().zip(y).map(|(&e, &yi)| c * (self.dphi(e) - yi)).collect();
        x.matvec_t(&resid)
    }

    /// `δL(u, θ) = L(θ + u) − L(θ) − ⟨∇L(θ), u⟩`, summed row by row so the
    /// response terms cancel exactly.
    pub fn bregman(&self, theta: &[f64], u: &[f64], x: &Matrix) -> Result<f64> {
        check_dim(x.cols(), theta.len())?;
        check_dim(x.cols(), u.len())?;
        Ok(self.bregman_at(&x.matvec(theta), &x.matvec(u)))
    }

    pub(crate) fn bregman_at(&self, eta: &[f64], d: &[f64]) -> f64 {
        let n = eta.len() as f64;
        let terms: Vec<f64> = match self.kind {
            LossKind::Squared => d.iter().map(|v| v * v).collect(),
            _ => eta
                .iter()
                .zip(d)
                .map(|(&e, &di)| (self.phi(e + di) - self.phi(e) - self.dphi(e) * di).max(0.0))
                .collect(),
        };
        crate::stats::pairwise_sum(&terms) / n
    }

    /// Rows whose linear predictor exceeds the Poisson clamp.
    pub fn clamp_events(&self, eta: &[f64]) -> usize {
        match self.kind {
            LossKind::Poisson => eta.iter().filter(|e| e.abs() > self.clamp).count(),
            _ => 0,
        }
    }

    /// Curvature floor and tail constants at truncation level `t`, with
    /// declared ψ₂ bound 1 and tail constant 0.5.
    pub fn glm_curvature(&self, t: f64) -> Result<GlmCurvature> {
        self.glm_curvature_with(t, 1.0, 0.5)
    }

    /// `ℓ_φ(T)` in closed form (1, `σ(2T)(1 − σ(2T))`, `e^{−2T}`) and
    /// `ε̄ = min(1, e·exp(−c T²/κ²))` with `κ = psi2_bound`, `c = tail_const`.
    pub fn glm_curvature_with(&self, t: f64, psi2_bound: f64, tail_const: f64) -> Result<GlmCurvature> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::invalid(format!("truncation level must be positive, got {t}")));
        }
        if !(psi2_bound > 0.0) || !(tail_const > 0.0) {
            return Err(Error::invalid("psi2 bound and tail constant must be positive"));
        }
        let ell = match self.kind {
            LossKind::Squared => 1.0,
            LossKind::Logistic => self.d2phi(2.0 * t),
            LossKind::Poisson => (-2.0 * t).exp(),
        };
        let eps = (core::f64::consts::E * (-tail_const * t * t / (psi2_bound * psi2_bound)).exp()).min(1.0);
        Ok(GlmCurvature { t, ell, eps1_bar: eps, eps2_bar: eps })
    }

    /// Responses from the model at θ*, with the noise `ω = E[y|X] − y`.
    ///
    /// Squared loss: `y = Xθ* + ε` with ε from `noise` (so `ω = −ε`).
    /// Logistic: Bernoulli(σ(η)). Poisson: Poisson(φ'(η)). The GLM draws use
    /// random stream `(noise.seed, 1)`.
    pub fn sample_response(&self, x: &Matrix, theta_star: &[f64], noise: &NoiseSpec) -> Result<(Vec<f64>, Vec<f64>)> {
        check_dim(x.cols(), theta_star.len())?;
        let eta = x.matvec(theta_star);
        let y: Vec<f64> = match self.kind {
            LossKind::Squared => {
                // ω is exactly −ε, free of rounding from Xθ*.
                let eps = sample_noise(noise, x.rows())?;
                let y = eta.iter().zip(&eps).map(|(e, w)| e + w).collect();
                return Ok((y, eps.iter().map(|w| -w).collect()));
            }
            LossKind::Logistic => {
                let mut rng = substream(noise.seed, 1);
                let mut out = Vec::with_capacity(eta.len());
                for &e in &eta {
                    let b = Bernoulli::new(sigmoid(e)).map_err(|e| Error::invalid(format!("{e}")))?;
                    out.push(if b.sample(&mut rng) { 1.0 } else { 0.0 });
                }
                out
            }
            LossKind::Poisson => {
                let mut rng = substream(noise.seed, 1);
                let mut out = Vec::with_capacity(eta.len());
                for &e in &eta {
                    let mean = self.dphi(e);
                    // Poisson::new rejects a zero rate; draws are 0 there anyway.
                    let v = if mean < 1e-300 {
                        0.0
                    } else {
                        Poisson::new(mean).map_err(|e| Error::invalid(format!("{e}")))?.sample(&mut rng)
                    };
                    out.push(v);
                }
                out
            }
        };
        let omega = eta.iter().zip(&y).map(|(&e, yi)| self.dphi(e) - yi).collect();
        Ok((y, omega))
    }
}

/// `⟨X_i, v⟩` for all rows.
pub fn linear_predictor(x: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    check_dim(x.cols(), v.len())?;
    Ok((0..x.rows()).map(|i| dot(x.row(i), v)).collect())
}
