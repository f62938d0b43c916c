//! Norms, their duals, subgradients, proximal maps and compatibility constants.
//!
//! Every quantity is computed in closed form; no iterative dual solves.

use crate::error::check_dim;
use crate::geometry::{sample_cap, ErrorSetSpec};
use crate::linalg::{dot, norm2};
use crate::prelude::*;
use crate::{Error, Result};

/// Disjoint groups `G_1, …, G_T` covering `{0, …, p−1}`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupPartition {
    groups: Vec<Vec<usize>>,
    p: usize,
}

impl GroupPartition {
    /// Validates that `groups` is a partition of `0..p` into nonempty sets.
    pub fn new(groups: Vec<Vec<usize>>, p: usize) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::invalid("group partition needs at least one group"));
        }
        let mut seen = vec![false; p];
        for g in &groups {
            if g.is_empty() {
                return Err(Error::invalid("empty group"));
            }
            for &i in g {
                if i >= p {
                    return Err(Error::invalid(format!("group index {i} out of range for p = {p}")));
                }
                if seen[i] {
                    return Err(Error::invalid(format!("index {i} appears in more than one group")));
                }
                seen[i] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("index {missing} is not covered by any group")));
        }
        Ok(GroupPartition { groups, p })
    }

    /// Consecutive blocks of `size` coordinates (the last block may be shorter).
    pub fn contiguous(p: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("group size must be positive"));
        }
        let groups = (0..p).step_by(size).map(|s| (s..(s + size).min(p)).collect()).collect();
        Self::new(groups, p)
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    /// T
    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    /// m = max_t |G_t|
    pub fn max_group_size(&self) -> usize {
        self.groups.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn block_norm(g: &[usize], u: &[f64]) -> f64 {
        g.iter().map(|&i| u[i] * u[i]).sum::<f64>().sqrt()
    }

    /// Number of groups on which `u` is not identically zero.
    pub fn active_groups(&self, u: &[f64]) -> usize {
        self.groups.iter().filter(|g| g.iter().any(|&i| u[i] != 0.0)).count()
    }
}

/// A norm `R` on `R^p`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Norm {
    L1,
    L2,
    Linf,
    /// Sum of block L2 norms over a partition.
    Group(GroupPartition),
}

/// Sparsity structure of a parameter, interpreted per norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportSpec {
    /// `s` nonzero coordinates (L1).
    Sparse(usize),
    /// `s_G` active groups (group norm).
    Groups(usize),
    /// No structure (L2).
    Dense,
}

/// Analytic and sampled values of `ψ(E) = sup_{u∈E} R(u)/‖u‖₂`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompatibilityEstimate {
    /// Closed-form upper bound, `None` when no formula applies.
    pub analytic_bound: Option<f64>,
    pub empirical_sup: f64,
    pub n_samples: usize,
}

impl Norm {
    pub fn name(&self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
            Norm::Group(_) => "group",
        }
    }

    /// Ambient dimension fixed by the norm, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            Norm::Group(g) => Some(g.dim()),
            _ => None,
        }
    }

    pub fn check_dim(&self, p: usize) -> Result<()> {
        match self.fixed_dim() {
            Some(d) => check_dim(d, p),
            None if p == 0 => Err(Error::invalid("empty vector")),
            None => Ok(()),
        }
    }

    /// `R(u)`
    pub fn value(&self, u: &[f64]) -> Result<f64> {
        self.check_dim(u.len())?;
        Ok(self.eval(u))
    }

    /// `R*(v) = sup_{R(u) ≤ 1} ⟨u, v⟩`, which is also the support function
    /// of the unit ball.
    pub fn dual_value(&self, v: &[f64]) -> Result<f64> {
        self.check_dim(v.len())?;
        Ok(self.dual_eval(v))
    }

    /// The dual norm when it is one of the supported kinds.
    ///
    /// The group norm's dual (max of block norms) is not, so this returns
    /// `None` for it; [`Norm::dual_value`] still evaluates it.
    pub fn dual_norm(&self) -> Option<Norm> {
        match self {
            Norm::L1 => Some(Norm::Linf),
            Norm::Linf => Some(Norm::L1),
            Norm::L2 => Some(Norm::L2),
            Norm::Group(_) => None,
        }
    }

    pub(crate) fn eval(&self, u: &[f64]) -> f64 {
        match self {
            Norm::L1 => u.iter().map(|x| x.abs()).sum(),
            Norm::L2 => norm2(u),
            Norm::Linf => u.iter().fold(0.0, |m, x| m.max(x.abs())),
            Norm::Group(gp) => gp.groups.iter().map(|g| GroupPartition::block_norm(g, u)).sum(),
        }
    }

    pub(crate) fn dual_eval(&self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => Norm::Linf.eval(v),
            Norm::L2 => norm2(v),
            Norm::Linf => Norm::L1.eval(v),
            Norm::Group(gp) => {
                gp.groups.iter().map(|g| GroupPartition::block_norm(g, v)).fold(0.0, f64::max)
            }
        }
    }

    /// Minimal-norm element of `∂R(u)`.
    ///
    /// Zero on zero coordinates (L1) and zero blocks (group); at the origin the
    /// result is the zero vector for every norm.
    pub fn subgradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u.len())?;
        Ok(match self {
            Norm::L1 => u.iter().map(|&x| sign(x)).collect(),
            Norm::L2 => {
                let n = norm2(u);
                if n == 0.0 {
                    vec![0.0; u.len()]
                } else {
                    u.iter().map(|x| x / n).collect()
                }
            }
            Norm::Linf => {
                let m = self.eval(u);
                let mut g = vec![0.0; u.len()];
                if m > 0.0 {
                    let ties = u.iter().filter(|x| x.abs() == m).count() as f64;
                    for (gi, &x) in g.iter_mut().zip(u) {
                        if x.abs() == m {
                            *gi = sign(x) / ties;
                        }
                    }
                }
                g
            }
            Norm::Group(gp) => {
                let mut g = vec![0.0; u.len()];
                for grp in &gp.groups {
                    let n = GroupPartition::block_norm(grp, u);
                    if n > 0.0 {
                        for &i in grp {
                            g[i] = u[i] / n;
                        }
                    }
                }
                g
            }
        })
    }

    /// `argmin_v ½‖v − x‖₂² + t R(v)`.
    pub fn prox(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::invalid(format!("prox step must be positive and finite, got {t}")));
        }
        Ok(self.prox_unchecked(x, t))
    }

    pub(crate) fn prox_unchecked(&self, x: &[f64], t: f64) -> Vec<f64> {
        match self {
            Norm::L1 => x.iter().map(|&xi| sign(xi) * (xi.abs() - t).max(0.0)).collect(),
            Norm::L2 => block_shrink(x, norm2(x), t),
            Norm::Linf => {
                // Moreau: prox_{t‖·‖∞}(x) = x − Π_{t·B₁}(x)
                let proj = project_l1_ball(x, t);
                x.iter().zip(&proj).map(|(a, b)| a - b).collect()
            }
            Norm::Group(gp) => {
                let mut v = vec![0.0; x.len()];
                for grp in &gp.groups {
                    let n = GroupPartition::block_norm(grp, x);
                    if n > t {
                        let f = 1.0 - t / n;
                        for &i in grp {
                            v[i] = f * x[i];
                        }
                    }
                }
                v
            }
        }
    }

    /// Support structure of `theta` as seen by this norm.
    pub fn support_of(&self, theta: &[f64]) -> SupportSpec {
        match self {
            Norm::L1 | Norm::Linf => SupportSpec::Sparse(theta.iter().filter(|x| **x != 0.0).count()),
            Norm::L2 => SupportSpec::Dense,
            Norm::Group(gp) => SupportSpec::Groups(gp.active_groups(theta)),
        }
    }

    /// Closed-form bound on `ψ(E_r)` for β ≥ 2: `4√s` (L1), `4√s_G` (group),
    /// `1` (L2). `None` for L∞, which is not decomposable.
    pub fn compat_bound(&self, support: &SupportSpec, p: usize) -> Result<Option<f64>> {
        self.check_dim(p)?;
        match (self, support) {
            (Norm::L2, _) => Ok(Some(1.0)),
            (Norm::Linf, _) => Ok(None),
            (Norm::L1, SupportSpec::Sparse(s)) => {
                if *s > p {
                    return Err(Error::invalid(format!("sparsity {s} exceeds dimension {p}")));
                }
                Ok(Some(4.0 * (*s as f64).sqrt()))
            }
            (Norm::Group(gp), SupportSpec::Groups(k)) => {
                if *k > gp.group_count() {
                    return Err(Error::invalid(format!(
                        "{k} active groups exceeds group count {}",
                        gp.group_count()
                    )));
                }
                Ok(Some(4.0 * (*k as f64).sqrt()))
            }
            (n, s) => Err(Error::invalid(format!("support {s:?} does not match norm {}", n.name()))),
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn block_shrink(x: &[f64], n: f64, t: f64) -> Vec<f64> {
    if n <= t {
        vec![0.0; x.len()]
    } else {
        let f = 1.0 - t / n;
        x.iter().map(|v| f * v).collect()
    }
}

/// Euclidean projection onto `{v : ‖v‖₁ ≤ radius}` by sorting magnitudes.
fn project_l1_ball(x: &[f64], radius: f64) -> Vec<f64> {
    if Norm::L1.eval(x) <= radius {
        return x.to_vec();
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - radius) / (j + 1) as f64;
        if m > candidate {
            tau = candidate;
        } else {
            break;
        }
    }
    x.iter().map(|&v| sign(v) * (v.abs() - tau).max(0.0)).collect()
}

/// Samples members of the error set and reports the largest `R(Δ)/‖Δ‖₂`.
///
/// The analytic bound is attached when the norm is decomposable and the set
/// is at most as large as `E_r(θ*, 2)`, i.e. β ≥ 2 or the constrained set.
pub fn compat_empirical(errset: &ErrorSetSpec, n_samples: usize, seed: u64) -> Result<CompatibilityEstimate> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be at least 1"));
    }
    let norm = errset.norm();
    let theta = errset.theta_star();
    let analytic_bound = if errset.beta() >= 2.0 {
        norm.compat_bound(&norm.support_of(theta), theta.len())?
    } else {
        None
    };
    let cap = sample_cap(errset, n_samples, seed)?;
    // Ratios are scale-free, so R(αu)/‖αu‖₂ = R(u) on the unit cap.
    let empirical_sup = cap
        .directions()
        .iter()
        .zip(cap.scales())
        .map(|(u, &a)| {
            let d: Vec<f64> = u.iter().map(|x| a * x).collect();
            norm.eval(&d) / norm2(&d)
        })
        .fold(0.0, f64::max);
    Ok(CompatibilityEstimate { analytic_bound, empirical_sup, n_samples })
}

/// `R(u)·R*(v) − ⟨u, v⟩`; nonnegative by Hölder's inequality.
pub fn holder_slack(norm: &Norm, u: &[f64], v: &[f64]) -> Result<f64> {
    check_dim(u.len(), v.len())?;
    Ok(norm.value(u)? * norm.dual_value(v)? - dot(u, v))
}
