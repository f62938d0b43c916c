//! Monte-Carlo calibration of the regularization parameter.
//!
//! The statistic is `R*((1/n) Xᵀω)` with `ω_i = E[y_i | X_i] − y_i`, which is
//! the GLM-convention gradient of the loss at θ*. For the squared loss the
//! solver needs `Loss::lambda_scale()` times the recommended value.

use crate::error::check_dim;
use crate::geometry::{width_norm_ball, WidthEstimate};
use crate::linalg::Matrix;
use crate::losses::Loss;
use crate::norms::Norm;
use crate::prelude::*;
use crate::randomdesign::{sample_design, DesignSpec, NoiseSpec};
use crate::stats::{mean_stderr, quantile};
use crate::{derive_seed, Error, Executor, Result};

/// Smallest accepted trial count for [`lambda_report`].
pub const MIN_TRIALS: usize = 20;

/// `R*((1/n) Xᵀω)`
pub fn grad_dualnorm(norm: &Norm, x: &Matrix, omega: &[f64]) -> Result<f64> {
    check_dim(x.rows(), omega.len())?;
    norm.check_dim(x.cols())?;
    let n = x.rows() as f64;
    let g: Vec<f64> = x.matvec_t(omega).iter().map(|v| v / n).collect();
    Ok(norm.dual_eval(&g))
}

/// Design and noise for trial `seed`: the design uses `derive_seed(seed, 0)`
/// and the noise `derive_seed(seed, 1)`.
pub fn trial_specs(design: &DesignSpec, noise: &NoiseSpec, seed: u64) -> (DesignSpec, NoiseSpec) {
    let d = DesignSpec { seed: derive_seed(seed, 0), ..design.clone() };
    let w = NoiseSpec { seed: derive_seed(seed, 1), ..*noise };
    (d, w)
}

/// One fresh draw of `(X, ω)` and its statistic.
pub fn grad_dualnorm_trial(
    loss: &Loss,
    norm: &Norm,
    design: &DesignSpec,
    noise: &NoiseSpec,
    theta_star: &[f64],
    seed: u64,
) -> Result<f64> {
    check_dim(design.p, theta_star.len())?;
    let (d, w) = trial_specs(design, noise, seed);
    let x = sample_design(&d)?;
    let (_, omega) = loss.sample_response(&x, theta_star, &w)?;
    grad_dualnorm(norm, &x, &omega)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LambdaReport {
    pub mean_stat: f64,
    pub stat_stderr: f64,
    /// Nearest-rank 95th percentile of the trial statistics.
    pub q95: f64,
    pub n_trials: usize,
    pub n: usize,
    pub p: usize,
    /// `mean_stat·√n / ŵ(Ω_R)`
    pub width_ratio: f64,
    pub w_ball: WidthEstimate,
    /// `√Λ_max(Σ)`, 1 for isotropic designs.
    pub xi: f64,
    pub beta: f64,
    /// `β·q95`, in the GLM convention.
    pub recommended_lambda: f64,
    pub seed: u64,
}

impl LambdaReport {
    /// Recommended λ for the given loss's own gradient scaling.
    pub fn solver_lambda(&self, loss: &Loss) -> f64 {
        loss.lambda_scale() * self.recommended_lambda
    }
}

/// Aggregates `n_trials` statistics; trial `t` uses seed `derive_seed(seed, t)`
/// and the norm-ball width uses `derive_seed(seed, u64::MAX)` with `n_mc` draws.
#[allow(clippy::too_many_arguments)]
pub fn lambda_report<E: Executor>(
    loss: &Loss,
    norm: &Norm,
    design: &DesignSpec,
    noise: &NoiseSpec,
    theta_star: &[f64],
    beta: f64,
    n_trials: usize,
    n_mc: usize,
    seed: u64,
    exec: &E,
) -> Result<LambdaReport> {
    if n_trials < MIN_TRIALS {
        return Err(Error::invalid(format!("need at least {MIN_TRIALS} trials, got {n_trials}")));
    }
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(Error::invalid(format!("beta must be finite and exceed 1, got {beta}")));
    }
    design.validate()?;
    check_dim(design.p, theta_star.len())?;
    let stats = exec.map(n_trials, |t| grad_dualnorm_trial(loss, norm, design, noise, theta_star, derive_seed(seed, t as u64)));
    let stats = stats.into_iter().collect::<Result<Vec<f64>>>()?;
    let (mean_stat, stat_stderr) = mean_stderr(&stats);
    let q95 = quantile(&stats, 0.95);
    let w_ball = width_norm_ball(norm, design.p, n_mc, derive_seed(seed, u64::MAX), exec)?;
    let xi = design.covariance.lambda_max()?.sqrt();
    Ok(LambdaReport {
        mean_stat,
        stat_stderr,
        q95,
        n_trials,
        n: design.n,
        p: design.p,
        width_ratio: mean_stat * (design.n as f64).sqrt() / w_ball.mean,
        w_ball,
        xi,
        beta,
        recommended_lambda: beta * q95,
        seed,
    })
}
