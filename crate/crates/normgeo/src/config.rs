//! TOML experiment files for `normgeo scaling`.
//!
//! ```toml
//! seed = 3
//! beta = 2.0
//!
//! [norm]
//! kind = "l1"            # l1 | l2 | linf | group
//! # groups = [[0, 1], [2, 3]]   or   group_size = 4
//!
//! [loss]
//! kind = "squared"       # squared | logistic | poisson
//!
//! [design]
//! family = "gaussian-isotropic"
//! p = 256
//! # covariance = { kind = "ar1", rho = 0.5 }   or   { kind = "file", path = "cov.csv" }
//!
//! [noise]
//! family = "gaussian"
//! scale = 1.0
//!
//! [theta]
//! sparsity = 8
//!
//! [grid]
//! n = [200, 400, 800, 1600, 3200]
//! seeds = 20
//! ```
//!
//! Optional tables: `[lambda]` (`kind = "recommended"` or `kind = "fixed"`,
//! `value = ...`), `[mc]` and `[solver]`.

use std::path::{Path, PathBuf};

use normgeo_core::harness::{ExperimentConfig, LambdaChoice, McBudget, ThetaSpec};
use normgeo_core::losses::{Loss, LossKind, POISSON_CLAMP};
use normgeo_core::norms::{GroupPartition, Norm};
use normgeo_core::randomdesign::{CovarianceSpec, DesignFamily, NoiseFamily};
use normgeo_core::solver::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::io::read_matrix_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L1,
    L2,
    Linf,
    Group,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormTable {
    pub kind: NormKind,
    pub groups: Option<Vec<Vec<usize>>>,
    pub group_size: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossTable {
    pub kind: LossKind,
    pub clamp: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CovarianceTable {
    Identity,
    Ar1 { rho: f64 },
    /// Headerless row-major CSV, relative to the config file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignTable {
    pub family: DesignFamily,
    pub p: usize,
    pub covariance: Option<CovarianceTable>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseTable {
    #[serde(default = "gaussian")]
    pub family: NoiseFamily,
    #[serde(default = "one")]
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaTable {
    pub sparsity: usize,
    #[serde(default = "one")]
    pub magnitude: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridTable {
    pub n: Vec<usize>,
    pub seeds: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub seed: Option<u64>,
    #[serde(default = "two")]
    pub beta: f64,
    pub norm: NormTable,
    pub loss: LossTable,
    pub design: DesignTable,
    pub noise: NoiseTable,
    pub theta: ThetaTable,
    pub grid: GridTable,
    #[serde(default = "recommended")]
    pub lambda: LambdaChoice,
    #[serde(default)]
    pub mc: McBudget,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn gaussian() -> NoiseFamily {
    NoiseFamily::Gaussian
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn recommended() -> LambdaChoice {
    LambdaChoice::Recommended
}

fn core(e: normgeo_core::Error) -> CliError {
    CliError::input("E_CONFIG", e.to_string())
}

/// Builds a norm on `R^p`. Group norms need exactly one of `groups` or
/// `group_size`.
pub fn build_norm(kind: NormKind, groups: Option<Vec<Vec<usize>>>, group_size: Option<usize>, p: usize) -> Result<Norm, normgeo_core::Error> {
    let bad = |m: &str| normgeo_core::Error::InvalidInput(m.to_string());
    match kind {
        NormKind::L1 | NormKind::L2 | NormKind::Linf if groups.is_some() || group_size.is_some() => {
            Err(bad("groups only apply to the group norm"))
        }
        NormKind::L1 => Ok(Norm::L1),
        NormKind::L2 => Ok(Norm::L2),
        NormKind::Linf => Ok(Norm::Linf),
        NormKind::Group => match (groups, group_size) {
            (Some(g), None) => Ok(Norm::Group(GroupPartition::new(g, p)?)),
            (None, Some(k)) => Ok(Norm::Group(GroupPartition::contiguous(p, k)?)),
            _ => Err(bad("group norm needs exactly one of groups or group_size")),
        },
    }
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::input("E_CONFIG", e.to_string().trim().replace('\n', " ")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input("E_IO", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Resolves into a validated core config. `base` anchors relative
    /// covariance paths; `seed` overrides the file's seed.
    pub fn resolve(&self, base: &Path, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
        let p = self.design.p;
        let norm = build_norm(self.norm.kind, self.norm.groups.clone(), self.norm.group_size, p).map_err(core)?;
        let covariance = match &self.design.covariance {
            None | Some(CovarianceTable::Identity) => None,
            Some(CovarianceTable::Ar1 { rho }) => Some(CovarianceSpec::Ar1 { p, rho: *rho }),
            Some(CovarianceTable::File { path }) => Some(CovarianceSpec::Explicit { matrix: read_matrix_csv(&base.join(path))? }),
        };
        let cfg = ExperimentConfig {
            norm,
            loss: Loss { kind: self.loss.kind, clamp: self.loss.clamp.unwrap_or(POISSON_CLAMP) },
            design: self.design.family,
            covariance,
            noise: self.noise.family,
            noise_scale: self.noise.scale,
            theta: ThetaSpec { p, sparsity: self.theta.sparsity, magnitude: self.theta.magnitude },
            beta: self.beta,
            n_grid: self.grid.n.clone(),
            seeds: self.grid.seeds,
            lambda: self.lambda,
            mc: self.mc,
            solver: self.solver.clone(),
            seed: seed.or(self.seed).unwrap_or(0),
        };
        cfg.validate().map_err(core)?;
        Ok(cfg)
    }
}
