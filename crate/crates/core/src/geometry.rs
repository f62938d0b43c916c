//! Error sets, spherical caps and Gaussian widths.
//!
//! The restricted error set of a regularized estimator is
//! `E_r = {Δ : R(θ* + Δ) ≤ R(θ*) + R(Δ)/β}` and the constrained one is
//! `E_c = {Δ : R(θ* + Δ) ≤ R(θ*)}`. Along any ray `t ↦ t·u` the function
//! `t ↦ R(θ* + t u) − t R(u)/β` is convex, so both sets are star-shaped about
//! the origin and each ray meets them in an interval `[0, t_max(u)]`. All cap
//! samplers and brute-force width oracles below rely on that.
//!
//! Widths computed from a finite cap are inner approximations of the width of
//! the continuum cap: every reported estimate is a lower estimate.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::check_dim;
use crate::linalg::{dot, norm2, normalized};
use crate::norms::{Norm, SupportSpec};
use crate::prelude::*;
use crate::rng::substream;
use crate::stats::mean_stderr;
use crate::{Error, Executor, Result};

/// Relative slack on the defining inequality of the error sets.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Largest dimension accepted by [`sandwich_check`].
pub const SANDWICH_MAX_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Variant {
    Regularized,
    Constrained,
}

/// `E_r(θ*, β)` or `E_c(θ*)` for a given norm.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorSetSpec {
    theta_star: Vec<f64>,
    beta: f64,
    norm: Norm,
    variant: Variant,
}

impl ErrorSetSpec {
    /// Restricted error set; requires β > 1. `β = ∞` yields the constrained set.
    pub fn regularized(theta_star: Vec<f64>, beta: f64, norm: Norm) -> Result<Self> {
        norm.check_dim(theta_star.len())?;
        if !(beta > 1.0) {
            return Err(Error::invalid(format!("beta must exceed 1, got {beta}")));
        }
        if theta_star.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("theta_star must be finite"));
        }
        let variant = if beta.is_infinite() { Variant::Constrained } else { Variant::Regularized };
        Ok(ErrorSetSpec { theta_star, beta, norm, variant })
    }

    pub fn constrained(theta_star: Vec<f64>, norm: Norm) -> Result<Self> {
        Self::regularized(theta_star, f64::INFINITY, norm)
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    /// β, or `+∞` for the constrained set.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn norm(&self) -> &Norm {
        &self.norm
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    /// Same θ* and norm, constrained variant.
    pub fn to_constrained(&self) -> ErrorSetSpec {
        ErrorSetSpec { beta: f64::INFINITY, variant: Variant::Constrained, ..self.clone() }
    }

    /// `R(θ* + t u) − R(θ*) − t R(u)/β`; the set is where this is ≤ 0.
    fn excess(&self, r_theta: f64, r_u: f64, u: &[f64], t: f64) -> f64 {
        let shifted: Vec<f64> = self.theta_star.iter().zip(u).map(|(a, b)| a + t * b).collect();
        let lhs = self.norm.eval(&shifted);
        let rhs = match self.variant {
            Variant::Constrained => r_theta,
            Variant::Regularized => r_theta + t * r_u / self.beta,
        };
        lhs - rhs - MEMBERSHIP_TOL * (1.0 + rhs.abs())
    }

    /// Whether `delta` satisfies the defining inequality (relative slack 1e−12).
    pub fn contains(&self, delta: &[f64]) -> Result<bool> {
        check_dim(self.dim(), delta.len())?;
        Ok(self.contains_unchecked(delta))
    }

    pub(crate) fn contains_unchecked(&self, delta: &[f64]) -> bool {
        let r_theta = self.norm.eval(&self.theta_star);
        self.excess(r_theta, self.norm.eval(delta), delta, 1.0) <= 0.0
    }

    /// Largest `t ≥ 0` with `t·u` in the set, found by bisection on the
    /// convex ray function. Returns 0 when only the origin qualifies.
    pub fn ray_extent(&self, u: &[f64]) -> Result<f64> {
        check_dim(self.dim(), u.len())?;
        let r_theta = self.norm.eval(&self.theta_star);
        let r_u = self.norm.eval(u);
        if r_u == 0.0 {
            return Ok(f64::INFINITY);
        }
        let mut hi = (1.0 + r_theta) / r_u;
        while self.excess(r_theta, r_u, u, hi) <= 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Ok(f64::INFINITY);
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.excess(r_theta, r_u, u, mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// Logarithmic scale grid `2^k ‖θ*‖₂`, k = −10..=2, used for cap acceptance.
    pub fn scale_grid(&self) -> Vec<f64> {
        let base = norm2(&self.theta_star);
        (-10..=2).map(|k| base * 2f64.powi(k)).collect()
    }

    /// Largest grid scale `α` with `α u` in the set.
    fn accept_scale(&self, r_theta: f64, u: &[f64], grid: &[f64]) -> Option<f64> {
        let r_u = self.norm.eval(u);
        grid.iter().rev().copied().find(|&t| self.excess(r_theta, r_u, u, t) <= 0.0)
    }
}

/// Unit directions in `cone(E) ∩ S^{p−1}`, each with a scale `α` such that
/// `α u` belongs to the source set.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CapSample {
    directions: Vec<Vec<f64>>,
    scales: Vec<f64>,
    source: Option<ErrorSetSpec>,
    seed: u64,
    proposals: usize,
    rejection_rate: f64,
}

impl CapSample {
    /// Wraps explicit directions as a cap with no source set. Directions are
    /// normalized unless they already have unit length to within 1e−15, in
    /// which case they are kept bit for bit (so sub-caps stay exact subsets).
    pub fn from_directions(directions: Vec<Vec<f64>>) -> Result<Self> {
        let p = directions.first().map(Vec::len).ok_or_else(|| Error::invalid("empty cap"))?;
        let mut unit = Vec::with_capacity(directions.len());
        for d in directions {
            check_dim(p, d.len())?;
            if (norm2(&d) - 1.0).abs() <= 1e-15 {
                unit.push(d);
            } else {
                unit.push(normalized(&d).ok_or_else(|| Error::invalid("zero direction in cap"))?);
            }
        }
        let n = unit.len();
        Ok(CapSample { directions: unit, scales: vec![1.0; n], source: None, seed: 0, proposals: n, rejection_rate: 0.0 })
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    /// The recorded `α` per direction.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn source(&self) -> Option<&ErrorSetSpec> {
        self.source.as_ref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn proposals(&self) -> usize {
        self.proposals
    }

    pub fn rejection_rate(&self) -> f64 {
        self.rejection_rate
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.directions.first().map_or(0, Vec::len)
    }

    /// Appends `d / ‖d‖₂`, recording `‖d‖₂` as its scale.
    pub fn push_direction(&mut self, d: &[f64]) -> Result<()> {
        if !self.is_empty() {
            check_dim(self.dim(), d.len())?;
        }
        let u = normalized(d).ok_or_else(|| Error::invalid("zero direction in cap"))?;
        self.directions.push(u);
        self.scales.push(norm2(d));
        Ok(())
    }
}

/// Rejection sampler for spherical caps of error sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapSampler {
    /// Fraction of proposals drawn from the structured stratum (sparse vectors
    /// for L1, few-group vectors for group norms); the rest are uniform on
    /// the sphere.
    pub structured_fraction: f64,
    /// Proposals attempted before giving up on a set with zero acceptance.
    pub max_proposals: usize,
}

impl Default for CapSampler {
    fn default() -> Self {
        CapSampler { structured_fraction: 0.5, max_proposals: 1_000_000 }
    }
}

/// [`CapSampler::sample`] with default settings.
pub fn sample_cap(errset: &ErrorSetSpec, n_dirs: usize, seed: u64) -> Result<CapSample> {
    CapSampler::default().sample(errset, n_dirs, seed)
}

impl CapSampler {
    /// Draws proposals until `n_dirs` are accepted. Proposal `j` uses random
    /// stream `(seed, j)`, so the accepted set is a deterministic function of
    /// the inputs.
    ///
    /// A direction is accepted if `t u` lies in the set for some `t` on the
    /// scale grid of [`ErrorSetSpec::scale_grid`].
    pub fn sample(&self, errset: &ErrorSetSpec, n_dirs: usize, seed: u64) -> Result<CapSample> {
        if n_dirs == 0 {
            return Err(Error::invalid("n_dirs must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.structured_fraction) {
            return Err(Error::invalid("structured_fraction must lie in [0, 1]"));
        }
        let grid = errset.scale_grid();
        let r_theta = errset.norm.eval(&errset.theta_star);
        if grid[grid.len() - 1] == 0.0 {
            return Err(Error::DegenerateSet { proposals: 0 });
        }
        let mut directions = Vec::with_capacity(n_dirs);
        let mut scales = Vec::with_capacity(n_dirs);
        let mut proposals = 0;
        while directions.len() < n_dirs {
            if proposals >= self.max_proposals {
                if directions.is_empty() {
                    return Err(Error::DegenerateSet { proposals });
                }
                break;
            }
            let mut rng = substream(seed, proposals as u64);
            proposals += 1;
            let raw = if rng.random::<f64>() < self.structured_fraction {
                structured_proposal(errset, &mut rng)
            } else {
                gaussian_vector(&mut rng, errset.dim())
            };
            let Some(u) = normalized(&raw) else { continue };
            if let Some(alpha) = errset.accept_scale(r_theta, &u, &grid) {
                directions.push(u);
                scales.push(alpha);
            }
        }
        let rejection_rate = 1.0 - directions.len() as f64 / proposals as f64;
        Ok(CapSample { directions, scales, source: Some(errset.clone()), seed, proposals, rejection_rate })
    }
}

pub(crate) fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, p: usize) -> Vec<f64> {
    (0..p).map(|_| rng.sample(StandardNormal)).collect()
}

/// Structured proposal: Gaussian entries on the active part of θ*, turned to
/// point against θ*, plus a few random inactive coordinates (or groups).
fn structured_proposal<R: Rng + ?Sized>(errset: &ErrorSetSpec, rng: &mut R) -> Vec<f64> {
    let theta = &errset.theta_star;
    let p = theta.len();
    let mut u = vec![0.0; p];
    match &errset.norm {
        Norm::L2 => return gaussian_vector(rng, p),
        Norm::Linf => {
            for ui in &mut u {
                *ui = if rng.random::<bool>() { 1.0 } else { -1.0 };
                *ui += 0.1 * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Norm::L1 => {
            let support: Vec<usize> = (0..p).filter(|&i| theta[i] != 0.0).collect();
            let off: Vec<usize> = (0..p).filter(|&i| theta[i] == 0.0).collect();
            for &i in &support {
                u[i] = rng.sample(StandardNormal);
            }
            orient_against(theta, &support, &mut u);
            let k_max = (2 * support.len()).max(1).min(off.len());
            if k_max > 0 {
                let k = rng.random_range(0..=k_max);
                let amp: f64 = rng.random();
                for j in index::sample(rng, off.len(), k) {
                    u[off[j]] = amp * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
        Norm::Group(gp) => {
            let groups = gp.groups();
            let active: Vec<usize> =
                (0..groups.len()).filter(|&t| groups[t].iter().any(|&i| theta[i] != 0.0)).collect();
            let single = active.is_empty() || rng.random::<bool>();
            let chosen = if single { Vec::new() } else { active };
            let idx: Vec<usize> = chosen.iter().flat_map(|&t| groups[t].iter().copied()).collect();
            for &i in &idx {
                u[i] = rng.sample(StandardNormal);
            }
            orient_against(theta, &idx, &mut u);
            let extra = rng.random_range(0..groups.len());
            let amp: f64 = if single { 1.0 } else { rng.random() };
            for &i in &groups[extra] {
                if u[i] == 0.0 {
                    u[i] = amp * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
    }
    u
}

fn orient_against(theta: &[f64], idx: &[usize], u: &mut [f64]) {
    let align: f64 = idx.iter().map(|&i| theta[i] * u[i]).sum();
    if align > 0.0 {
        for &i in idx {
            u[i] = -u[i];
        }
    }
}

/// Deterministic grid on `S^{p−1}`: the surface points of the cube
/// `[−1, 1]^p` with per-axis resolution `k`, projected onto the sphere.
///
/// Yields `(k+1)^p − (k−1)^p` directions.
pub fn sphere_grid(p: usize, k: usize) -> Result<Vec<Vec<f64>>> {
    if p == 0 || k == 0 {
        return Err(Error::invalid("sphere grid needs p ≥ 1 and k ≥ 1"));
    }
    let levels: Vec<f64> = (0..=k).map(|i| -1.0 + 2.0 * i as f64 / k as f64).collect();
    let total = (k + 1).checked_pow(p as u32).ok_or_else(|| Error::invalid("grid too large"))?;
    let mut out = Vec::new();
    let mut idx = vec![0usize; p];
    for _ in 0..total {
        if idx.iter().any(|&i| i == 0 || i == k) {
            let v: Vec<f64> = idx.iter().map(|&i| levels[i]).collect();
            out.push(normalized(&v).expect("cube surface point is nonzero"));
        }
        for d in idx.iter_mut() {
            *d += 1;
            if *d <= k {
                break;
            }
            *d = 0;
        }
    }
    Ok(out)
}

/// Monte-Carlo estimate of a Gaussian width.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WidthEstimate {
    pub target: String,
    pub mean: f64,
    /// Sample standard deviation over √n_mc.
    pub stderr: f64,
    pub n_mc: usize,
    pub seed: u64,
}

impl WidthEstimate {
    fn from_samples(target: String, samples: &[f64], seed: u64) -> Self {
        let (mean, stderr) = mean_stderr(samples);
        WidthEstimate { target, mean, stderr, n_mc: samples.len(), seed }
    }
}

/// `w(Ω_R) = E R*(g)` with the dual norm evaluated exactly per draw.
pub fn width_norm_ball<E: Executor>(norm: &Norm, p: usize, n_mc: usize, seed: u64, exec: &E) -> Result<WidthEstimate> {
    norm.check_dim(p)?;
    if n_mc < 2 {
        return Err(Error::invalid("n_mc must be at least 2"));
    }
    let samples = exec.map(n_mc, |i| norm.dual_eval(&gaussian_vector(&mut substream(seed, i as u64), p)));
    Ok(WidthEstimate::from_samples(format!("unit {} ball, p = {p}", norm.name()), &samples, seed))
}

/// Per-draw suprema `max_{u ∈ cap} ⟨g_i, u⟩` with `g_i` from stream `(seed, i)`.
pub fn cap_suprema<E: Executor>(cap: &CapSample, n_mc: usize, seed: u64, exec: &E) -> Vec<f64> {
    let p = cap.dim();
    exec.map(n_mc, |i| {
        let g = gaussian_vector(&mut substream(seed, i as u64), p);
        cap.directions.iter().map(|u| dot(&g, u)).fold(f64::NEG_INFINITY, f64::max)
    })
}

/// Inner estimate of `w(A)` from a finite cap sample.
pub fn width_cap<E: Executor>(cap: &CapSample, n_mc: usize, seed: u64, exec: &E) -> Result<WidthEstimate> {
    if cap.is_empty() {
        return Err(Error::invalid("empty cap"));
    }
    if n_mc < 2 {
        return Err(Error::invalid("n_mc must be at least 2"));
    }
    let samples = cap_suprema(cap, n_mc, seed, exec);
    let target = format!(
        "cap sample ({} directions, rejection rate {:.4}); inner estimate",
        cap.len(),
        cap.rejection_rate
    );
    Ok(WidthEstimate::from_samples(target, &samples, seed))
}

/// Closed-form widths of tangent cones at structured points:
/// `√(2s ln(p/s) + 5s/4)` for an s-sparse point (L1),
/// `√(2k(m + ln(T−k)) + k)` for k active groups, and `√p` for L2.
pub fn width_cone_analytic(norm: &Norm, structure: &SupportSpec, p: usize) -> Result<f64> {
    norm.check_dim(p)?;
    match (norm, structure) {
        (Norm::L2, _) => Ok((p as f64).sqrt()),
        (Norm::L1, SupportSpec::Sparse(s)) => {
            if *s == 0 || *s >= p {
                return Err(Error::invalid(format!("sparse cone width needs 1 ≤ s < p, got s = {s}, p = {p}")));
            }
            let s = *s as f64;
            Ok((2.0 * s * (p as f64 / s).ln() + 1.25 * s).sqrt())
        }
        (Norm::Group(gp), SupportSpec::Groups(k)) => {
            let t = gp.group_count();
            if *k == 0 || *k >= t {
                return Err(Error::invalid(format!("group cone width needs 1 ≤ k < T, got k = {k}, T = {t}")));
            }
            let (k, m) = (*k as f64, gp.max_group_size() as f64);
            Ok((2.0 * k * (m + (t as f64 - k).ln()) + k).sqrt())
        }
        (Norm::Linf, _) => Err(Error::Unsupported("no closed-form cone width for the linf norm".into())),
        (n, s) => Err(Error::invalid(format!("support {s:?} does not match norm {}", n.name()))),
    }
}

/// Upper bound on `w(Ω_R)` through the tangent cone at the most favourable
/// structured boundary point (1-sparse for L1, one active group for groups,
/// any unit vector for L2).
pub fn width_ball_via_cone(norm: &Norm, p: usize) -> Result<f64> {
    match norm {
        Norm::L1 => width_cone_analytic(norm, &SupportSpec::Sparse(1), p),
        // A single group makes the norm Euclidean.
        Norm::Group(gp) if gp.group_count() == 1 => width_cone_analytic(&Norm::L2, &SupportSpec::Dense, p),
        Norm::Group(_) => width_cone_analytic(norm, &SupportSpec::Groups(1), p),
        Norm::L2 => width_cone_analytic(norm, &SupportSpec::Dense, p),
        Norm::Linf => Err(Error::Unsupported("linf ball width via cones".into())),
    }
}

/// Brute-force check of `w(A_c) ≤ w(A_r) ≤ (1 + 2‖θ*‖₂/((β−1)ρ)) w(Ā_c)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SandwichReport {
    /// `w(E_c ∩ ρB₂)`
    pub w_constrained: WidthEstimate,
    /// `w(E_r ∩ ρB₂)`
    pub w_regularized: WidthEstimate,
    /// `w(cone(E_c) ∩ ρB₂)`
    pub w_constrained_cone: WidthEstimate,
    pub factor: f64,
    pub n_dirs: usize,
    /// Mean and standard error of the paired gap `w_r − w_c`.
    pub lower_gap: f64,
    pub lower_gap_stderr: f64,
    /// Mean and standard error of the paired gap `factor·w̄_c − w_r`.
    pub upper_gap: f64,
    pub upper_gap_stderr: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.lower_holds && self.upper_holds
    }
}

/// Estimates the three widths of the sandwich inequality on a dense direction
/// grid with shared Gaussian draws, and tests both inequalities within three
/// combined standard errors. Restricted to `p ≤ 8`.
#[allow(clippy::too_many_arguments)]
pub fn sandwich_check<E: Executor>(
    theta_star: &[f64],
    beta: f64,
    rho: f64,
    norm: &Norm,
    n_mc: usize,
    grid: usize,
    seed: u64,
    exec: &E,
) -> Result<SandwichReport> {
    let p = theta_star.len();
    if p > SANDWICH_MAX_DIM {
        return Err(Error::DimensionTooLarge { p, max: SANDWICH_MAX_DIM });
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::invalid(format!("rho must be positive, got {rho}")));
    }
    if n_mc < 2 {
        return Err(Error::invalid("n_mc must be at least 2"));
    }
    let reg = ErrorSetSpec::regularized(theta_star.to_vec(), beta, norm.clone())?;
    if beta.is_infinite() {
        return Err(Error::invalid("beta must be finite for the sandwich check"));
    }
    let con = reg.to_constrained();
    let dirs = sphere_grid(p, grid)?;
    let cone_tol = 1e-9 * norm2(theta_star).max(1.0);
    // Ray lengths of A_c, A_r and Ā_c along each grid direction.
    let mut lengths = Vec::with_capacity(dirs.len());
    for u in &dirs {
        let tc = con.ray_extent(u)?;
        let tr = reg.ray_extent(u)?;
        let cone = if tc > cone_tol { rho } else { 0.0 };
        lengths.push([tc.min(rho), tr.min(rho), cone]);
    }
    let draws = exec.map(n_mc, |i| {
        let g = gaussian_vector(&mut substream(seed, i as u64), p);
        let mut best = [0.0f64; 3];
        for (u, len) in dirs.iter().zip(&lengths) {
            let d = dot(&g, u);
            if d > 0.0 {
                for k in 0..3 {
                    best[k] = best[k].max(d * len[k]);
                }
            }
        }
        best
    });
    let col = |k: usize| draws.iter().map(|b| b[k]).collect::<Vec<f64>>();
    let (wc, wr, wbar) = (col(0), col(1), col(2));
    let factor = 1.0 + 2.0 * norm2(theta_star) / ((beta - 1.0) * rho);
    let est = |name: &str, xs: &[f64]| WidthEstimate::from_samples(format!("{name}, rho = {rho}, p = {p}"), xs, seed);
    let w_constrained = est("E_c ∩ ρB", &wc);
    let w_regularized = est("E_r ∩ ρB", &wr);
    let w_constrained_cone = est("cone(E_c) ∩ ρB", &wbar);
    let lower: Vec<f64> = wr.iter().zip(&wc).map(|(r, c)| r - c).collect();
    let upper: Vec<f64> = wbar.iter().zip(&wr).map(|(b, r)| factor * b - r).collect();
    let (lower_gap, lower_gap_stderr) = mean_stderr(&lower);
    let (upper_gap, upper_gap_stderr) = mean_stderr(&upper);
    let lower_tol = 3.0 * (w_constrained.stderr.powi(2) + w_regularized.stderr.powi(2)).sqrt();
    let upper_tol =
        3.0 * ((factor * w_constrained_cone.stderr).powi(2) + w_regularized.stderr.powi(2)).sqrt();
    Ok(SandwichReport {
        lower_holds: w_regularized.mean - w_constrained.mean >= -lower_tol,
        upper_holds: factor * w_constrained_cone.mean - w_regularized.mean >= -upper_tol,
        w_constrained,
        w_regularized,
        w_constrained_cone,
        factor,
        n_dirs: dirs.len(),
        lower_gap,
        lower_gap_stderr,
        upper_gap,
        upper_gap_stderr,
    })
}
