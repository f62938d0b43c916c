//! Empirical restricted eigenvalue, isometry and strong convexity statistics.
//!
//! Everything here is evaluated over a finite [`CapSample`], so an infimum is
//! an upper estimate of the infimum over the continuum cap and a supremum is a
//! lower estimate. A `passed` flag is therefore a necessary-condition check.

use crate::error::check_dim;
use crate::geometry::CapSample;
use crate::linalg::Matrix;
use crate::losses::{GlmCurvature, Loss};
use crate::prelude::*;
use crate::randomdesign::{restricted_eigs, CovarianceSpec};
use crate::stats::{loglog_fit, mean, median, LineFit};
use crate::{derive_seed, Error, Executor, Result};

/// Absolute slack for the Bregman-versus-floor comparison.
pub const FLOOR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConditionReport {
    /// `min_u (1/n)‖Xu‖²` over the cap.
    pub inf_q: f64,
    pub sup_q: f64,
    /// Curvature estimate: `inf_q` for designs, the smallest Bregman increment
    /// for losses.
    pub rsc_kappa: f64,
    pub w_hat: f64,
    pub n: usize,
    pub envelope_c: Option<f64>,
    pub passed: bool,
    pub n_dirs: usize,
    /// Restricted eigenvalues of Σ over the cap (anisotropic checks).
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    /// `max_u |(1/n)‖Xu‖² / uᵀΣu − 1|`
    pub normalized_dev: Option<f64>,
    /// Smallest truncated quadratic floor over the cap (GLM checks).
    pub floor_inf: Option<f64>,
    /// Smallest truncated second moment `(1/n)Σ⟨X_i,u⟩² I[..] I[..]`.
    pub rho2_inf: Option<f64>,
    /// Directions where the Bregman increment fell below the floor by more
    /// than [`FLOOR_TOL`].
    pub floor_violations: usize,
    /// Largest `floor − δL` over the cap.
    pub floor_gap_max: Option<f64>,
    /// Measured `P(|⟨X_i,θ*⟩| ≥ T)` and worst-case `P(|⟨X_i,u⟩| ≥ T)`.
    pub eps1_empirical: Option<f64>,
    pub eps2_empirical: Option<f64>,
    pub eps1_bar: Option<f64>,
    pub eps2_bar: Option<f64>,
    pub clamp_events: usize,
}

impl ConditionReport {
    /// Two-sided deviation `max(1 − inf_q, sup_q − 1)`.
    pub fn deviation(&self) -> f64 {
        (1.0 - self.inf_q).max(self.sup_q - 1.0)
    }
}

fn check_cap(x: &Matrix, cap: &CapSample) -> Result<()> {
    if cap.is_empty() {
        return Err(Error::invalid("empty cap"));
    }
    if x.rows() == 0 {
        return Err(Error::invalid("design has no rows"));
    }
    check_dim(x.cols(), cap.dim())
}

/// `(1/n)‖Xu‖²` for every cap direction, through the Gram matrix when that
/// is cheaper.
pub(crate) fn quad_values(x: &Matrix, cap: &CapSample) -> Vec<f64> {
    let n = x.rows() as f64;
    if x.rows() > x.cols() {
        let g = x.gram_scaled();
        cap.directions().iter().map(|u| g.quad_form(u)).collect()
    } else {
        cap.directions()
            .iter()
            .map(|u| x.matvec(u).iter().map(|v| v * v).sum::<f64>() / n)
            .collect()
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &q| (lo.min(q), hi.max(q)))
}

/// `(min, max)` of `(1/n)‖Xu‖²` over the cap.
pub fn re_statistic(x: &Matrix, cap: &CapSample) -> Result<(f64, f64)> {
    check_cap(x, cap)?;
    Ok(min_max(&quad_values(x, cap)))
}

/// Report for an isotropic design; `passed` means `inf_q > 0`.
pub fn re_report(x: &Matrix, cap: &CapSample, w_hat: f64) -> Result<ConditionReport> {
    let (inf_q, sup_q) = re_statistic(x, cap)?;
    Ok(ConditionReport {
        inf_q,
        sup_q,
        rsc_kappa: inf_q,
        w_hat,
        n: x.rows(),
        passed: inf_q > 0.0,
        n_dirs: cap.len(),
        ..Default::default()
    })
}

/// Fitted isometry envelope `deviation ≈ c·ŵ/√n`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnvelopeFit {
    /// Log-log fit of the per-n median deviation against n.
    pub fit: LineFit,
    /// Median over the grid of `deviation·√n / ŵ`.
    pub c: f64,
    /// `(n, median deviation, mean ŵ)` per grid point.
    pub points: Vec<(usize, f64, f64)>,
    /// Grid points dropped because their deviation was not positive.
    pub excluded: Vec<usize>,
}

/// Fits the deviation decay across reports at four or more distinct `n`.
/// Reports sharing an `n` (different seeds) are pooled by median.
pub fn rip_envelope(reports: &[ConditionReport]) -> Result<EnvelopeFit> {
    let mut ns: Vec<usize> = reports.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 4 {
        return Err(Error::invalid(format!("envelope fit needs at least 4 distinct n, got {}", ns.len())));
    }
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for &n in &ns {
        let group: Vec<&ConditionReport> = reports.iter().filter(|r| r.n == n).collect();
        let devs: Vec<f64> = group.iter().map(|r| r.deviation()).collect();
        let ws: Vec<f64> = group.iter().map(|r| r.w_hat).collect();
        let d = median(&devs);
        if d > 0.0 && d.is_finite() {
            points.push((n, d, mean(&ws)));
        } else {
            excluded.push(n);
        }
    }
    if points.len() < 2 {
        return Err(Error::invalid("fewer than two grid points with positive deviation"));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (fit, _) = loglog_fit(&xs, &ys)?;
    let cs: Vec<f64> = points.iter().map(|&(n, d, w)| d * (n as f64).sqrt() / w).collect();
    Ok(EnvelopeFit { fit, c: median(&cs), points, excluded })
}

/// Checks `λ_min(Σ|A)(1 − c·ŵ/√n) ≤ inf_q` and `sup_q ≤ λ_max(Σ|A)(1 + c·ŵ/√n)`
/// with an envelope constant `c` fitted on isotropic data.
pub fn aniso_re_check(x: &Matrix, cap: &CapSample, cov: &CovarianceSpec, c: f64, w_hat: f64) -> Result<ConditionReport> {
    check_cap(x, cap)?;
    check_dim(cov.dim(), x.cols())?;
    let q = quad_values(x, cap);
    let (inf_q, sup_q) = min_max(&q);
    let (lmin, lmax) = restricted_eigs(cov, cap)?;
    assert!(lmin > 0.0, "restricted eigenvalue of a positive definite covariance must be positive");
    let sigma = cov.matrix();
    let normalized_dev = cap
        .directions()
        .iter()
        .zip(&q)
        .map(|(u, qi)| (qi / sigma.quad_form(u) - 1.0).abs())
        .fold(0.0, f64::max);
    let slack = c * w_hat / (x.rows() as f64).sqrt();
    let passed = lmin * (1.0 - slack) <= inf_q && sup_q <= lmax * (1.0 + slack);
    Ok(ConditionReport {
        inf_q,
        sup_q,
        rsc_kappa: inf_q,
        w_hat,
        n: x.rows(),
        envelope_c: Some(c),
        passed,
        n_dirs: cap.len(),
        lambda_min: Some(lmin),
        lambda_max: Some(lmax),
        normalized_dev: Some(normalized_dev),
        ..Default::default()
    })
}

/// Bregman increments of a loss at θ* over the cap against their truncated
/// quadratic floor.
///
/// The floor is `(a·ℓ/n) Σ⟨X_i,u⟩² I[|⟨X_i,θ*⟩| < T] I[|⟨X_i,u⟩| < T]` where
/// `a = 1/2` is the Taylor-remainder factor for GLM losses and `a = 1` for
/// the squared loss, whose value is already `(1/n)‖Xu‖²`. Responses only enter
/// through shape checks: the increment does not depend on them.
pub fn rsc_glm_statistic(
    loss: &Loss,
    x: &Matrix,
    y: &[f64],
    theta_star: &[f64],
    cap: &CapSample,
    curvature: &GlmCurvature,
) -> Result<ConditionReport> {
    check_cap(x, cap)?;
    check_dim(x.rows(), y.len())?;
    check_dim(x.cols(), theta_star.len())?;
    let n = x.rows() as f64;
    let t = curvature.t;
    let a = loss.lambda_scale() / 2.0;
    let eta = x.matvec(theta_star);
    let inside: Vec<bool> = eta.iter().map(|e| e.abs() < t).collect();
    let eps1 = inside.iter().filter(|b| !**b).count() as f64 / n;

    let mut breg_inf = f64::INFINITY;
    let mut floor_inf = f64::INFINITY;
    let mut rho2_inf = f64::INFINITY;
    let mut gap_max = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut eps2: f64 = 0.0;
    let mut q_all = Vec::with_capacity(cap.len());
    for u in cap.directions() {
        let d = x.matvec(u);
        let breg = loss.bregman_at(&eta, &d);
        let mut rho2 = 0.0;
        let mut out = 0usize;
        for (di, &ins) in d.iter().zip(&inside) {
            if di.abs() < t {
                if ins {
                    rho2 += di * di;
                }
            } else {
                out += 1;
            }
        }
        rho2 /= n;
        let floor = a * curvature.ell * rho2;
        if breg < floor - FLOOR_TOL {
            violations += 1;
        }
        gap_max = gap_max.max(floor - breg);
        breg_inf = breg_inf.min(breg);
        floor_inf = floor_inf.min(floor);
        rho2_inf = rho2_inf.min(rho2);
        eps2 = eps2.max(out as f64 / n);
        q_all.push(d.iter().map(|v| v * v).sum::<f64>() / n);
    }
    let (inf_q, sup_q) = min_max(&q_all);
    let clamp_events = cap
        .directions()
        .iter()
        .map(|u| {
            let shifted: Vec<f64> = eta.iter().zip(x.matvec(u)).map(|(e, d)| e + d).collect();
            loss.clamp_events(&shifted)
        })
        .sum::<usize>()
        + loss.clamp_events(&eta);
    Ok(ConditionReport {
        inf_q,
        sup_q,
        rsc_kappa: breg_inf,
        w_hat: f64::NAN,
        n: x.rows(),
        envelope_c: None,
        passed: floor_inf > 0.0 && violations == 0,
        n_dirs: cap.len(),
        floor_inf: Some(floor_inf),
        rho2_inf: Some(rho2_inf),
        floor_violations: violations,
        floor_gap_max: Some(gap_max),
        eps1_empirical: Some(eps1),
        eps2_empirical: Some(eps2),
        eps1_bar: Some(curvature.eps1_bar),
        eps2_bar: Some(curvature.eps2_bar),
        clamp_events,
        ..Default::default()
    })
}

/// Located sample-size threshold.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseTransition {
    pub n0: usize,
    pub threshold: f64,
    /// Every `(n, median statistic)` evaluated, in evaluation order.
    pub evaluations: Vec<(usize, f64)>,
}

/// Smallest `n` in `[n_lo, n_hi]` whose median statistic over `n_seeds`
/// seeds reaches `threshold`, by integer bisection.
///
/// `statistic(n, seed)` is typically `inf_q` of a fresh design with `n` rows
/// over a fixed cap. The seeds `derive_seed(seed, k)` are shared by every `n`.
/// Fails with [`Error::NoCrossing`] unless the statistic is below the
/// threshold at `n_lo` and at or above it at `n_hi`.
pub fn phase_transition_n0<F, E>(
    statistic: F,
    threshold: f64,
    n_lo: usize,
    n_hi: usize,
    n_seeds: usize,
    seed: u64,
    exec: &E,
) -> Result<PhaseTransition>
where
    F: Fn(usize, u64) -> Result<f64> + Sync + Send,
    E: Executor,
{
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    if n_lo == 0 || n_lo >= n_hi {
        return Err(Error::invalid(format!("invalid n range [{n_lo}, {n_hi}]")));
    }
    if n_seeds == 0 {
        return Err(Error::invalid("need at least one seed"));
    }
    let mut evaluations = Vec::new();
    let mut eval = |n: usize| -> Result<bool> {
        let vals = exec.map(n_seeds, |k| statistic(n, derive_seed(seed, k as u64)));
        let vals = vals.into_iter().collect::<Result<Vec<f64>>>()?;
        let m = median(&vals);
        evaluations.push((n, m));
        Ok(m >= threshold)
    };
    let no_crossing = Error::NoCrossing { threshold, lo: n_lo, hi: n_hi };
    if !eval(n_hi)? || eval(n_lo)? {
        return Err(no_crossing);
    }
    let (mut lo, mut hi) = (n_lo, n_hi);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if eval(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(PhaseTransition { n0: hi, threshold, evaluations })
}
