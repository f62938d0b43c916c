//! Accelerated proximal gradient for `argmin L(θ) + λ R(θ)`.

use crate::linalg::{norm2, top_eigenvalue_gram, Matrix};
use crate::losses::Loss;
use crate::norms::Norm;
use crate::prelude::*;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Relative objective change below which the run may stop.
    pub rel_tol: f64,
    /// First step size; `None` uses `1/L̂` from a power-method estimate.
    pub step_init: Option<f64>,
    /// Reset momentum and retake a plain proximal step whenever the objective
    /// would increase.
    pub monotone: bool,
    pub lambda: f64,
    /// Stopping also requires `‖θ − prox(θ − t∇L(θ))‖₂ ≤ residual_tol·(1 + ‖θ‖₂)`.
    pub residual_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { max_iters: 5000, rel_tol: 1e-8, step_init: None, monotone: true, lambda: 0.0, residual_tol: 1e-6 }
    }
}

impl SolverConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        SolverConfig { lambda, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol must be positive"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must be finite and nonnegative, got {}", self.lambda)));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::invalid("residual_tol must be positive"));
        }
        if let Some(t) = self.step_init {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::invalid("step_init must be positive"));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub theta_hat: Vec<f64>,
    pub iters: usize,
    /// Objective at θ = 0 followed by the objective after every iteration.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    /// Step size in effect at termination.
    pub step: f64,
    /// Final first-order residual `‖θ − prox_{tλR}(θ − t∇L(θ))‖₂`.
    pub residual: f64,
    /// Rows whose linear predictor crossed the Poisson clamp at the solution.
    pub clamp_events: usize,
}

impl FitResult {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().unwrap_or(&f64::NAN)
    }
}

struct Problem<'a> {
    loss: &'a Loss,
    norm: &'a Norm,
    x: &'a Matrix,
    y: &'a [f64],
    lambda: f64,
}

impl Problem<'_> {
    fn objective(&self, theta: &[f64], eta: &[f64]) -> f64 {
        self.loss.value_at(eta, self.y) + self.lambda * self.norm.eval(theta)
    }

    /// One backtracked proximal step from `(v, η_v)`. Returns the new point,
    /// its predictor and the accepted step.
    fn prox_step(&self, v: &[f64], eta_v: &[f64], mut t: f64) -> (Vec<f64>, Vec<f64>, f64) {
        let g = self.loss.gradient_at(self.x, eta_v, self.y);
        let lv = self.loss.value_at(eta_v, self.y);
        loop {
            let z: Vec<f64> = v.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            let cand = self.norm.prox_unchecked(&z, t * self.lambda);
            let eta_c = self.x.matvec(&cand);
            let lc = self.loss.value_at(&eta_c, self.y);
            let mut lin = 0.0;
            let mut quad = 0.0;
            for ((c, a), gi) in cand.iter().zip(v).zip(&g) {
                let d = c - a;
                lin += gi * d;
                quad += d * d;
            }
            let model = lv + lin + quad / (2.0 * t);
            if lc <= model + 1e-12 * lv.abs().max(1.0) || t < 1e-300 || !lc.is_finite() {
                return (cand, eta_c, t);
            }
            t *= 0.5;
        }
    }

    fn residual(&self, theta: &[f64], eta: &[f64], t: f64) -> f64 {
        let g = self.loss.gradient_at(self.x, eta, self.y);
        let z: Vec<f64> = theta.iter().zip(&g).map(|(a, b)| a - t * b).collect();
        let p = self.norm.prox_unchecked(&z, t * self.lambda);
        norm2(&theta.iter().zip(&p).map(|(a, b)| a - b).collect::<Vec<_>>())
    }
}

/// Solves the regularized problem starting from θ = 0.
///
/// FISTA with step halving on a sufficient-decrease test. With
/// `cfg.monotone`, an iterate that would raise the objective is discarded,
/// momentum is reset and a plain proximal step is taken instead, so the
/// objective trace never increases.
pub fn solve_regularized(loss: &Loss, norm: &Norm, x: &Matrix, y: &[f64], cfg: &SolverConfig) -> Result<FitResult> {
    cfg.validate()?;
    let p = x.cols();
    norm.check_dim(p)?;
    let theta0 = vec![0.0; p];
    loss.value(&theta0, x, y)?;

    let prob = Problem { loss, norm, x, y, lambda: cfg.lambda };
    let mut step = match cfg.step_init {
        Some(t) => t,
        None => {
            let l_hat = loss.curvature_scale() * top_eigenvalue_gram(x, 20);
            if l_hat > 0.0 {
                1.0 / l_hat
            } else {
                1.0
            }
        }
    };

    let mut theta = theta0;
    let mut eta = vec![0.0; x.rows()];
    let mut obj = prob.objective(&theta, &eta);
    let mut trace = vec![obj];
    let mut v = theta.clone();
    let mut eta_v = eta.clone();
    let mut tk = 1.0f64;
    let mut converged = false;
    let mut residual = f64::INFINITY;
    let mut iters = 0;
    let mut stalled = false;

    while iters < cfg.max_iters {
        iters += 1;
        let (mut cand, mut eta_c, t) = prob.prox_step(&v, &eta_v, step);
        step = t;
        let mut obj_c = prob.objective(&cand, &eta_c);
        if !obj_c.is_finite() {
            trace.push(obj_c);
            return Err(Error::Solver { iters, objective_trace: trace });
        }
        let mut restarted = false;
        if cfg.monotone && obj_c > obj {
            let (c2, e2, t2) = prob.prox_step(&theta, &eta, step);
            step = t2;
            cand = c2;
            eta_c = e2;
            obj_c = prob.objective(&cand, &eta_c);
            if !obj_c.is_finite() {
                trace.push(obj_c);
                return Err(Error::Solver { iters, objective_trace: trace });
            }
            restarted = true;
            if obj_c > obj {
                // Even the plain step cannot improve: the objective is flat
                // to rounding here, so stop where we are.
                trace.push(obj);
                stalled = true;
                break;
            }
        }

        if restarted {
            tk = 1.0;
            v = cand.clone();
            eta_v = eta_c.clone();
        } else {
            let tk1 = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
            let m = (tk - 1.0) / tk1;
            v = cand.iter().zip(&theta).map(|(a, b)| a + m * (a - b)).collect();
            eta_v = eta_c.iter().zip(&eta).map(|(a, b)| a + m * (a - b)).collect();
            tk = tk1;
        }

        let rel = (obj - obj_c).abs() / obj_c.abs().max(1.0);
        theta = cand;
        eta = eta_c;
        obj = obj_c;
        trace.push(obj);

        if rel < cfg.rel_tol {
            residual = prob.residual(&theta, &eta, step);
            if residual <= cfg.residual_tol * (1.0 + norm2(&theta)) {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        residual = prob.residual(&theta, &eta, step);
        converged = stalled && residual <= cfg.residual_tol * (1.0 + norm2(&theta));
    }
    let clamp_events = loss.clamp_events(&eta);
    Ok(FitResult { theta_hat: theta, iters, objective_trace: trace, converged, step, residual, clamp_events })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_when_lambda_dominates() {
        let x = Matrix::from_rows(&[vec![1.0, 0.2], vec![0.3, -1.0], vec![0.5, 0.5]]).unwrap();
        let y = [1.0, -0.5, 2.0];
        let g = x.matvec_t(&y);
        let thr = Norm::L1.dual_eval(&g) * 2.0 / 3.0;
        let fit = solve_regularized(&Loss::squared(), &Norm::L1, &x, &y, &SolverConfig::with_lambda(thr * 1.0001)).unwrap();
        assert!(fit.theta_hat.iter().all(|&v| v == 0.0));
        assert!(fit.converged);
    }

    #[test]
    fn objective_trace_is_monotone() {
        let x = Matrix::from_rows(&[vec![1.0, 0.9, 0.1], vec![0.9, 1.0, 0.2], vec![0.1, 0.2, 1.0], vec![1.0, 1.0, 1.0]]).unwrap();
        let y = [1.0, 2.0, 0.5, 3.0];
        for norm in [Norm::L1, Norm::L2, Norm::Linf] {
            let fit = solve_regularized(&Loss::squared(), &norm, &x, &y, &SolverConfig::with_lambda(0.05)).unwrap();
            assert!(fit.converged);
            assert!(fit.objective_trace.windows(2).all(|w| w[1] <= w[0]));
            assert!(fit.residual <= 1e-6 * (1.0 + norm2(&fit.theta_hat)));
        }
    }

    #[test]
    fn rejects_bad_config() {
        let x = Matrix::identity(2);
        let err = solve_regularized(&Loss::squared(), &Norm::L1, &x, &[1.0, 1.0], &SolverConfig::with_lambda(-1.0));
        assert!(matches!(err, Err(Error::InvalidInput(_))));
        let cfg = SolverConfig { rel_tol: 0.0, ..Default::default() };
        assert!(solve_regularized(&Loss::squared(), &Norm::L1, &x, &[1.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn divergence_reports_trace() {
        let x = Matrix::identity(1);
        let cfg = SolverConfig { step_init: Some(f64::MAX), ..Default::default() };
        match solve_regularized(&Loss::squared(), &Norm::L1, &x, &[1.0], &cfg) {
            Err(Error::Solver { iters, objective_trace }) => {
                assert_eq!(iters, 1);
                assert_eq!(objective_trace[0], 1.0);
                assert!(!objective_trace[1].is_finite());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
