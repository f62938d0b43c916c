//! End-to-end recovery trials, the deterministic error bound and error
//! scaling fits.

use rand::seq::index;
use rand::Rng;

use crate::conditions::quad_values;
use crate::geometry::{sample_cap, CapSampler, ErrorSetSpec};
use crate::linalg::{norm2, sub};
use crate::losses::{Loss, LossKind};
use crate::norms::Norm;
use crate::prelude::*;
use crate::randomdesign::{sample_design, CovarianceSpec, DesignFamily, DesignSpec, NoiseFamily, NoiseSpec};
use crate::regparam::{grad_dualnorm, lambda_report, LambdaReport};
use crate::solver::{solve_regularized, SolverConfig};
use crate::stats::{loglog_fit, median, LineFit};
use crate::{derive_seed, substream, Error, Executor, Result};

/// Log-log fit of median error against n.
pub type ScalingFit = LineFit;

/// Slack allowed on the error-set membership of the realized error, which
/// only holds exactly at the exact minimizer.
pub const LEMMA_SLACK: f64 = 1e-6;

/// True parameter: `sparsity` coordinates (active groups for a group norm)
/// set to `±magnitude` on a random support.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThetaSpec {
    pub p: usize,
    pub sparsity: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum LambdaChoice {
    /// `λ` in the solver's own convention.
    Fixed { value: f64 },
    /// `β·q95` from a Monte-Carlo [`LambdaReport`], rescaled to the loss.
    Recommended,
}

/// Monte-Carlo budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct McBudget {
    pub lambda_trials: usize,
    pub width_draws: usize,
    pub cap_dirs: usize,
}

impl Default for McBudget {
    fn default() -> Self {
        McBudget { lambda_trials: 100, width_draws: 2000, cap_dirs: 500 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentConfig {
    pub norm: Norm,
    pub loss: Loss,
    pub design: DesignFamily,
    /// Row covariance for the anisotropic family.
    pub covariance: Option<CovarianceSpec>,
    pub noise: NoiseFamily,
    pub noise_scale: f64,
    pub theta: ThetaSpec,
    pub beta: f64,
    pub n_grid: Vec<usize>,
    pub seeds: usize,
    pub lambda: LambdaChoice,
    pub mc: McBudget,
    /// `lambda` is ignored; it comes from [`ExperimentConfig::lambda`].
    pub solver: SolverConfig,
    pub seed: u64,
}

impl ExperimentConfig {
    /// L1-regularized least squares on an isotropic Gaussian design.
    pub fn lasso(p: usize, s: usize, n_grid: Vec<usize>, seeds: usize, seed: u64) -> Self {
        ExperimentConfig {
            norm: Norm::L1,
            loss: Loss::squared(),
            design: DesignFamily::GaussianIsotropic,
            covariance: None,
            noise: NoiseFamily::Gaussian,
            noise_scale: 1.0,
            theta: ThetaSpec { p, sparsity: s, magnitude: 1.0 },
            beta: 2.0,
            n_grid,
            seeds,
            lambda: LambdaChoice::Recommended,
            mc: McBudget::default(),
            solver: SolverConfig::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.theta.p;
        if p == 0 {
            return Err(Error::invalid("p must be positive"));
        }
        self.norm.check_dim(p)?;
        let cap = match &self.norm {
            Norm::Group(gp) => gp.group_count(),
            _ => p,
        };
        if self.theta.sparsity > cap {
            return Err(Error::invalid(format!("sparsity {} exceeds {cap}", self.theta.sparsity)));
        }
        if !self.theta.magnitude.is_finite() {
            return Err(Error::invalid("theta magnitude must be finite"));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("n_grid must be nonempty, positive and strictly increasing"));
        }
        if self.seeds == 0 {
            return Err(Error::invalid("seeds must be at least 1"));
        }
        if !(self.beta > 1.0) || !self.beta.is_finite() {
            return Err(Error::invalid(format!("beta must be finite and exceed 1, got {}", self.beta)));
        }
        if let LambdaChoice::Fixed { value } = self.lambda {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::invalid("fixed lambda must be finite and nonnegative"));
            }
        }
        if self.mc.cap_dirs == 0 {
            return Err(Error::invalid("cap_dirs must be at least 1"));
        }
        self.design_spec(self.n_grid[0], 0).validate()?;
        SolverConfig { lambda: 0.0, ..self.solver.clone() }.validate()
    }

    pub fn design_spec(&self, n: usize, seed: u64) -> DesignSpec {
        let p = self.theta.p;
        let covariance = self.covariance.clone().unwrap_or(CovarianceSpec::Identity { p });
        DesignSpec { n, p, family: self.design, covariance, psi2_bound: 1.0, seed }
    }

    pub fn noise_spec(&self, seed: u64) -> NoiseSpec {
        NoiseSpec { family: self.noise, scale: self.noise_scale, seed }
    }
}

/// θ* for a trial, drawn from stream `(seed, 0)`.
pub fn generate_theta(spec: &ThetaSpec, norm: &Norm, seed: u64) -> Result<Vec<f64>> {
    norm.check_dim(spec.p)?;
    let mut rng = substream(seed, 0);
    let mut theta = vec![0.0; spec.p];
    let mut set = |i: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        theta[i] = if rng.random::<bool>() { spec.magnitude } else { -spec.magnitude };
    };
    match norm {
        Norm::Group(gp) => {
            if spec.sparsity > gp.group_count() {
                return Err(Error::invalid("more active groups than groups"));
            }
            let mut chosen = index::sample(&mut rng, gp.group_count(), spec.sparsity).into_vec();
            chosen.sort_unstable();
            for t in chosen {
                for &i in &gp.groups()[t] {
                    set(i, &mut rng);
                }
            }
        }
        _ => {
            if spec.sparsity > spec.p {
                return Err(Error::invalid("sparsity exceeds dimension"));
            }
            let mut chosen = index::sample(&mut rng, spec.p, spec.sparsity).into_vec();
            chosen.sort_unstable();
            for i in chosen {
                set(i, &mut rng);
            }
        }
    }
    Ok(theta)
}

/// `ψ·(1 + 1/β)·λ/κ`, or `None` when κ ≤ 0. `β = ∞` is allowed.
pub fn theoretical_bound(psi: f64, beta: f64, lambda: f64, kappa: f64) -> Result<Option<f64>> {
    if !(beta > 1.0) {
        return Err(Error::invalid(format!("beta must exceed 1, got {beta}")));
    }
    if !(lambda >= 0.0) || !(psi > 0.0) {
        return Err(Error::invalid("need lambda ≥ 0 and psi > 0"));
    }
    if !(kappa > 0.0) {
        return Ok(None);
    }
    Ok(Some(psi * (1.0 + 1.0 / beta) * lambda / kappa))
}

/// One row of the trial table.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialRecord {
    pub n: usize,
    pub seed: u64,
    /// λ passed to the solver.
    pub lambda: f64,
    pub err_l2: f64,
    pub kappa_hat: f64,
    pub bound: Option<f64>,
    /// `λ ≥ β·R*(∇L(θ*))` on the realized data and `κ̂ > 0`.
    pub bound_valid: bool,
    pub iters: usize,
}

/// A trial record with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub converged: bool,
    pub psi: f64,
    /// Whether ψ came from the closed-form bound.
    pub psi_analytic: bool,
    /// `R*(∇L(θ*))` in the solver's convention.
    pub realized_stat: f64,
    /// `R(θ̂) − R(θ*) − R(Δ̂)/β`; nonpositive when Δ̂ lies in the error set.
    pub lemma_slack: f64,
    pub in_error_set: bool,
    pub cap_dirs: usize,
    pub clamp_events: usize,
}

fn lambda_seed(cfg: &ExperimentConfig, n: usize, root: u64) -> u64 {
    // The squared-loss statistic does not involve θ*, so one report per n
    // serves every seed.
    match cfg.loss.kind {
        LossKind::Squared => derive_seed(derive_seed(cfg.seed, u64::MAX), n as u64),
        _ => derive_seed(root, 3),
    }
}

fn recommended<E: Executor>(cfg: &ExperimentConfig, n: usize, theta: &[f64], seed: u64, exec: &E) -> Result<LambdaReport> {
    lambda_report(
        &cfg.loss,
        &cfg.norm,
        &cfg.design_spec(n, 0),
        &cfg.noise_spec(0),
        theta,
        cfg.beta,
        cfg.mc.lambda_trials,
        cfg.mc.width_draws,
        seed,
        exec,
    )
}

/// Runs one recovery trial at sample size `n`.
///
/// Trial `seed` roots every random choice at `r = derive_seed(cfg.seed, seed)`:
/// θ* from `(r, 0)`, the design from `(r, 1)`, the noise from `(r, 2)` and the
/// cap from `(r, 4)`. θ* and the design rows do not depend on `n`, so a sweep
/// over `n` uses nested designs.
pub fn run_recovery_trial<E: Executor>(cfg: &ExperimentConfig, n: usize, seed: u64, exec: &E) -> Result<TrialOutcome> {
    trial(cfg, n, seed, None, exec)
}

fn trial<E: Executor>(cfg: &ExperimentConfig, n: usize, seed: u64, lambda: Option<f64>, exec: &E) -> Result<TrialOutcome> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let root = derive_seed(cfg.seed, seed);
    let theta = generate_theta(&cfg.theta, &cfg.norm, derive_seed(root, 0))?;
    let lambda_used = match (lambda, cfg.lambda) {
        (Some(l), _) => l,
        (None, LambdaChoice::Fixed { value }) => value,
        (None, LambdaChoice::Recommended) => {
            recommended(cfg, n, &theta, lambda_seed(cfg, n, root), exec)?.solver_lambda(&cfg.loss)
        }
    };
    let x = sample_design(&cfg.design_spec(n, derive_seed(root, 1)))?;
    let (y, omega) = cfg.loss.sample_response(&x, &theta, &cfg.noise_spec(derive_seed(root, 2)))?;
    let realized_stat = cfg.loss.lambda_scale() * grad_dualnorm(&cfg.norm, &x, &omega)?;

    let solver = SolverConfig { lambda: lambda_used, ..cfg.solver.clone() };
    let fit = solve_regularized(&cfg.loss, &cfg.norm, &x, &y, &solver)?;
    let delta = sub(&fit.theta_hat, &theta);
    let err_l2 = norm2(&delta);

    let errset = ErrorSetSpec::regularized(theta.clone(), cfg.beta, cfg.norm.clone())?;
    let mut cap = match sample_cap(&errset, cfg.mc.cap_dirs, derive_seed(root, 4)) {
        Ok(c) => c,
        // θ* = 0 makes the error set the whole space: fall back to uniform
        // directions.
        Err(Error::DegenerateSet { .. }) if norm2(&theta) == 0.0 => {
            let sampler = CapSampler { structured_fraction: 0.0, ..Default::default() };
            let whole = ErrorSetSpec::regularized(vec![1.0; cfg.theta.p], f64::INFINITY, Norm::L2)?;
            sampler.sample(&whole, cfg.mc.cap_dirs, derive_seed(root, 4))?
        }
        Err(e) => return Err(e),
    };
    if err_l2 > 0.0 {
        cap.push_direction(&delta)?;
    }
    let kappa_hat = match cfg.loss.kind {
        LossKind::Squared => quad_values(&x, &cap).into_iter().fold(f64::INFINITY, f64::min),
        _ => {
            let eta = x.matvec(&theta);
            let mut k = cap
                .directions()
                .iter()
                .map(|u| cfg.loss.bregman_at(&eta, &x.matvec(u)))
                .fold(f64::INFINITY, f64::min);
            if err_l2 > 0.0 {
                k = k.min(cfg.loss.bregman_at(&eta, &x.matvec(&delta)) / (err_l2 * err_l2));
            }
            k
        }
    };

    let analytic = cfg.norm.compat_bound(&cfg.norm.support_of(&theta), cfg.theta.p)?;
    let (psi, psi_analytic) = match analytic {
        Some(v) => (v, true),
        None => (cap.directions().iter().map(|u| cfg.norm.eval(u)).fold(0.0, f64::max), false),
    };
    let bound = theoretical_bound(psi, cfg.beta, lambda_used, kappa_hat)?;
    let bound_valid = lambda_used >= cfg.beta * realized_stat && kappa_hat > 0.0;

    let r_theta = cfg.norm.eval(&theta);
    let lemma_slack = cfg.norm.eval(&fit.theta_hat) - r_theta - cfg.norm.eval(&delta) / cfg.beta;
    let in_error_set = lemma_slack <= LEMMA_SLACK * (1.0 + r_theta);

    Ok(TrialOutcome {
        record: TrialRecord {
            n,
            seed,
            lambda: lambda_used,
            err_l2,
            kappa_hat,
            bound,
            bound_valid,
            iters: fit.iters,
        },
        converged: fit.converged,
        psi,
        psi_analytic,
        realized_stat,
        lemma_slack,
        in_error_set,
        cap_dirs: cap.len(),
        clamp_events: fit.clamp_events,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialFailure {
    pub n: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepResult {
    pub fit: ScalingFit,
    /// `(n, median err_l2)` for every n with at least one successful trial.
    pub medians: Vec<(usize, f64)>,
    /// Grid points where every trial failed.
    pub excluded_n: Vec<usize>,
    pub outcomes: Vec<TrialOutcome>,
    pub failures: Vec<TrialFailure>,
    /// One report per n when λ is recommended for the squared loss.
    pub lambda_reports: Vec<LambdaReport>,
}

impl SweepResult {
    pub fn records(&self) -> Vec<TrialRecord> {
        self.outcomes.iter().map(|o| o.record.clone()).collect()
    }

    /// `(eligible, covered)`: converged trials with `bound_valid`, and those
    /// among them with `err_l2 ≤ bound`.
    pub fn bound_coverage(&self) -> (usize, usize) {
        let eligible: Vec<&TrialOutcome> =
            self.outcomes.iter().filter(|o| o.converged && o.record.bound_valid).collect();
        let covered = eligible
            .iter()
            .filter(|o| o.record.bound.is_some_and(|b| o.record.err_l2 <= b))
            .count();
        (eligible.len(), covered)
    }

    /// Converged trials with `bound_valid` whose error left the error set.
    pub fn lemma_violations(&self) -> usize {
        self.outcomes.iter().filter(|o| o.converged && o.record.bound_valid && !o.in_error_set).count()
    }
}

/// Runs every `(n, seed)` trial of the grid and fits `log median err_l2`
/// against `log n`. Trials are identical to [`run_recovery_trial`] calls.
pub fn scaling_sweep<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Result<SweepResult> {
    cfg.validate()?;
    if cfg.n_grid.len() < 4 {
        return Err(Error::invalid(format!("scaling fit needs at least 4 grid points, got {}", cfg.n_grid.len())));
    }
    let shared = cfg.lambda == LambdaChoice::Recommended && cfg.loss.kind == LossKind::Squared;
    let mut lambda_reports = Vec::new();
    let mut lambdas = Vec::new();
    for &n in &cfg.n_grid {
        if shared {
            // θ* only matters for GLM responses; pass the first trial's.
            let theta = generate_theta(&cfg.theta, &cfg.norm, derive_seed(derive_seed(cfg.seed, 0), 0))?;
            let rep = recommended(cfg, n, &theta, lambda_seed(cfg, n, 0), exec)?;
            lambdas.push(Some(rep.solver_lambda(&cfg.loss)));
            lambda_reports.push(rep);
        } else {
            lambdas.push(None);
        }
    }
    let seeds = cfg.seeds;
    let results = exec.map(cfg.n_grid.len() * seeds, |k| {
        let (i, s) = (k / seeds, k % seeds);
        trial(cfg, cfg.n_grid[i], s as u64, lambdas[i], exec)
    });

    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        let (i, s) = (k / seeds, k % seeds);
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => failures.push(TrialFailure { n: cfg.n_grid[i], seed: s as u64, error: format!("{e}") }),
        }
    }
    let mut medians = Vec::new();
    let mut excluded_n = Vec::new();
    for &n in &cfg.n_grid {
        let errs: Vec<f64> = outcomes.iter().filter(|o| o.record.n == n).map(|o| o.record.err_l2).collect();
        if errs.is_empty() {
            excluded_n.push(n);
        } else {
            medians.push((n, median(&errs)));
        }
    }
    let xs: Vec<f64> = medians.iter().map(|m| m.0 as f64).collect();
    let ys: Vec<f64> = medians.iter().map(|m| m.1).collect();
    let (fit, _) = loglog_fit(&xs, &ys)?;
    Ok(SweepResult { fit, medians, excluded_n, outcomes, failures, lambda_reports })
}

/// Log-log fit of planted or measured `(n, error)` pairs.
pub fn fit_scaling(ns: &[usize], errs: &[f64]) -> Result<ScalingFit> {
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    Ok(loglog_fit(&xs, errs)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_arithmetic() {
        assert!((theoretical_bound(8.0, 2.0, 0.1, 0.5).unwrap().unwrap() - 2.4).abs() < 1e-15);
        assert_eq!(theoretical_bound(8.0, 2.0, 0.0, 0.5).unwrap(), Some(0.0));
        assert_eq!(theoretical_bound(8.0, 2.0, 0.1, 0.0).unwrap(), None);
        assert_eq!(theoretical_bound(8.0, f64::INFINITY, 0.1, 0.5).unwrap(), Some(8.0 * 0.1 / 0.5));
        assert!(theoretical_bound(8.0, 1.0, 0.1, 0.5).is_err());
    }

    #[test]
    fn planted_scaling() {
        let ns = [100, 400, 1600, 6400];
        let errs: Vec<f64> = ns.iter().map(|&n| 3.0 / (n as f64).sqrt()).collect();
        let fit = fit_scaling(&ns, &errs).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theta_generation() {
        let spec = ThetaSpec { p: 20, sparsity: 4, magnitude: 1.0 };
        let t = generate_theta(&spec, &Norm::L1, 5).unwrap();
        assert_eq!(t.iter().filter(|v| **v != 0.0).count(), 4);
        assert!((norm2(&t) - 2.0).abs() < 1e-15);
        assert_eq!(t, generate_theta(&spec, &Norm::L1, 5).unwrap());
        let gp = crate::norms::GroupPartition::contiguous(20, 5).unwrap();
        let spec = ThetaSpec { p: 20, sparsity: 2, magnitude: 1.0 };
        let t = generate_theta(&spec, &Norm::Group(gp), 5).unwrap();
        assert_eq!(t.iter().filter(|v| **v != 0.0).count(), 10);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::lasso(10, 2, vec![50, 40], 1, 0);
        assert!(cfg.validate().is_err());
        cfg.n_grid = vec![40, 50];
        assert!(cfg.validate().is_ok());
        cfg.seeds = 0;
        assert!(cfg.validate().is_err());
    }
}
