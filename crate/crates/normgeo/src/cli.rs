//! Argument parsing and the subcommands.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use normgeo_core::conditions::{aniso_re_check, re_report, rip_envelope, rsc_glm_statistic, ConditionReport, EnvelopeFit};
use normgeo_core::geometry::{sample_cap, sandwich_check, width_cap, width_norm_ball, CapSample, ErrorSetSpec, WidthEstimate};
use normgeo_core::harness::{scaling_sweep, SweepResult};
use normgeo_core::losses::{Loss, LossKind};
use normgeo_core::norms::Norm;
use normgeo_core::randomdesign::{sample_design, CovarianceSpec, DesignFamily, DesignSpec, NoiseFamily, NoiseSpec};
use normgeo_core::regparam::{lambda_report, LambdaReport};
use normgeo_core::solver::{solve_regularized, SolverConfig};
use normgeo_core::{derive_seed, Executor};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{build_norm, ExperimentFile, NormKind};
use crate::error::CliError;
use crate::exec::Rayon;
use crate::io::{read_data_csv, read_matrix_csv, trials_csv, write_file};
use crate::json::to_canonical;

#[derive(Debug, Parser)]
#[command(name = "normgeo", version, about = "Geometry of norm-regularized estimation: widths, RE/RSC checks, λ calibration and recovery experiments")]
pub struct Cli {
    /// Root seed; all randomness derives from it [default: 0, or the config file's seed]
    #[arg(long, global = true, help_heading = "Global options", env = "NORMGEO_SEED")]
    pub seed: Option<u64>,
    /// Worker threads [default: available parallelism]
    #[arg(long, global = true, help_heading = "Global options")]
    pub threads: Option<usize>,
    /// Directory for output files and manifest.json
    #[arg(long, global = true, help_heading = "Global options", default_value = ".")]
    pub out_dir: PathBuf,
    /// Main output file, relative to --out-dir [default: <subcommand>.json]
    #[arg(long, global = true, help_heading = "Global options")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo Gaussian width of a norm ball or an error-set cap
    Width(WidthArgs),
    /// Restricted eigenvalue statistics over a cap, one JSON line per (n, seed)
    ReCheck(ReCheckArgs),
    /// Bregman increments of a GLM loss against the truncated quadratic floor
    RscGlm(RscGlmArgs),
    /// Monte-Carlo calibration of the regularization parameter
    Lambda(LambdaArgs),
    /// Solve a regularized problem on a data file (first column y)
    Solve(SolveArgs),
    /// Error-scaling sweep driven by a TOML experiment file
    Scaling(ScalingArgs),
    /// Width sandwich check on a brute-force direction grid (p ≤ 8)
    Sandwich(SandwichArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignArg {
    GaussianIso,
    GaussianAniso,
    Rademacher,
    Uniform,
}

impl From<DesignArg> for DesignFamily {
    fn from(d: DesignArg) -> Self {
        match d {
            DesignArg::GaussianIso => DesignFamily::GaussianIsotropic,
            DesignArg::GaussianAniso => DesignFamily::GaussianAnisotropic,
            DesignArg::Rademacher => DesignFamily::Rademacher,
            DesignArg::Uniform => DesignFamily::UniformBounded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseArg {
    Gaussian,
    Rademacher,
    Uniform,
}

impl From<NoiseArg> for NoiseFamily {
    fn from(d: NoiseArg) -> Self {
        match d {
            NoiseArg::Gaussian => NoiseFamily::Gaussian,
            NoiseArg::Rademacher => NoiseFamily::Rademacher,
            NoiseArg::Uniform => NoiseFamily::UniformBounded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LossArg {
    Squared,
    Logistic,
    Poisson,
}

impl From<LossArg> for Loss {
    fn from(l: LossArg) -> Self {
        Loss::from(match l {
            LossArg::Squared => LossKind::Squared,
            LossArg::Logistic => LossKind::Logistic,
            LossArg::Poisson => LossKind::Poisson,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormArg {
    L1,
    L2,
    Linf,
    Group,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WidthTarget {
    Ball,
    Cap,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NormArgs {
    /// Regularizer
    #[arg(long, value_enum, default_value_t = NormArg::L1)]
    pub norm: NormArg,
    /// Explicit groups for --norm group, e.g. "0,1;2,3" (0-based)
    #[arg(long)]
    pub groups: Option<String>,
    /// Contiguous groups of this size for --norm group
    #[arg(long)]
    pub group_size: Option<usize>,
}

impl NormArgs {
    pub fn build(&self, p: usize) -> Result<Norm, CliError> {
        let groups = match &self.groups {
            None => None,
            Some(s) => Some(
                s.split(';')
                    .map(|g| g.split(',').map(|i| i.trim().parse::<usize>()).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::usage(format!("--groups: {e}")))?,
            ),
        };
        let kind = match self.norm {
            NormArg::L1 => NormKind::L1,
            NormArg::L2 => NormKind::L2,
            NormArg::Linf => NormKind::Linf,
            NormArg::Group => NormKind::Group,
        };
        Ok(build_norm(kind, groups, self.group_size, p)?)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DesignArgs {
    /// Design family
    #[arg(long, value_enum, default_value_t = DesignArg::GaussianIso)]
    pub design: DesignArg,
    /// AR(1) correlation for --design gaussian-aniso
    #[arg(long)]
    pub ar1: Option<f64>,
    /// Covariance CSV (headerless, row-major) for --design gaussian-aniso
    #[arg(long)]
    pub covariance: Option<PathBuf>,
}

impl DesignArgs {
    fn covariance(&self, p: usize) -> Result<CovarianceSpec, CliError> {
        match (self.design, self.ar1, &self.covariance) {
            (DesignArg::GaussianAniso, Some(rho), None) => Ok(CovarianceSpec::Ar1 { p, rho }),
            (DesignArg::GaussianAniso, None, Some(path)) => Ok(CovarianceSpec::Explicit { matrix: read_matrix_csv(path)? }),
            (DesignArg::GaussianAniso, _, _) => Err(CliError::usage("gaussian-aniso needs exactly one of --ar1 or --covariance")),
            (_, None, None) => Ok(CovarianceSpec::Identity { p }),
            _ => Err(CliError::usage("--ar1 and --covariance need --design gaussian-aniso")),
        }
    }

    fn spec(&self, cov: &CovarianceSpec, n: usize, seed: u64) -> DesignSpec {
        DesignSpec { n, p: cov.dim(), family: self.design.into(), covariance: cov.clone(), psi2_bound: 1.0, seed }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WidthArgs {
    #[command(flatten)]
    pub norm: NormArgs,
    /// Ambient dimension
    #[arg(long)]
    pub p: usize,
    /// Gaussian draws
    #[arg(long, default_value_t = 10_000)]
    pub mc: usize,
    /// Unit norm ball, or the cap of E_r(θ*, β) at θ* with support size --s
    #[arg(long, value_enum, default_value_t = WidthTarget::Ball)]
    pub target: WidthTarget,
    /// Support size of θ* (active groups for --norm group)
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    /// β of the error set; "inf" gives the constrained set
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    /// Cap directions
    #[arg(long, default_value_t = 1000)]
    pub dirs: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReCheckArgs {
    #[command(flatten)]
    pub norm: NormArgs,
    #[command(flatten)]
    pub design: DesignArgs,
    /// Ambient dimension
    #[arg(long, default_value_t = 100)]
    pub p: usize,
    /// Support size of θ* = (1, ..., 1, 0, ..., 0)
    #[arg(long, default_value_t = 4)]
    pub s: usize,
    /// β > 1 of the restricted error set
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    /// Sample sizes, comma separated
    #[arg(long, value_delimiter = ',', default_value = "200,400,800,1600")]
    pub n_grid: Vec<usize>,
    /// Independent designs per n
    #[arg(long, default_value_t = 10)]
    pub seeds: usize,
    /// Cap directions
    #[arg(long, default_value_t = 1000)]
    pub dirs: usize,
    /// Gaussian draws for the cap width
    #[arg(long, default_value_t = 2000)]
    pub mc: usize,
    /// Envelope constant for the anisotropic bracketing check
    #[arg(long, default_value_t = 2.0)]
    pub c: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RscGlmArgs {
    #[command(flatten)]
    pub norm: NormArgs,
    /// Loss function
    #[arg(long, value_enum, default_value_t = LossArg::Logistic)]
    pub loss: LossArg,
    /// Ambient dimension
    #[arg(long, default_value_t = 64)]
    pub p: usize,
    /// Support size of θ*
    #[arg(long, default_value_t = 4)]
    pub s: usize,
    /// Value of the nonzero entries of θ*
    #[arg(long, default_value_t = 1.0)]
    pub magnitude: f64,
    /// β > 1 of the restricted error set
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    /// Truncation level T
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Sample sizes, comma separated
    #[arg(long, value_delimiter = ',', default_value = "400")]
    pub n_grid: Vec<usize>,
    /// Independent designs per n
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    /// Cap directions
    #[arg(long, default_value_t = 1000)]
    pub dirs: usize,
    /// Gaussian draws for the cap width
    #[arg(long, default_value_t = 2000)]
    pub mc: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LambdaArgs {
    #[command(flatten)]
    pub norm: NormArgs,
    #[command(flatten)]
    pub design: DesignArgs,
    /// Loss function
    #[arg(long, value_enum, default_value_t = LossArg::Squared)]
    pub loss: LossArg,
    /// Ambient dimension
    #[arg(long, default_value_t = 256)]
    pub p: usize,
    /// Sample size
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    /// Monte-Carlo trials of the gradient statistic
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// β > 1 of the restricted error set
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    /// Gaussian draws for the norm-ball width
    #[arg(long, default_value_t = 2000)]
    pub mc: usize,
    /// Noise family
    #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
    pub noise: NoiseArg,
    /// Noise standard deviation
    #[arg(long, default_value_t = 1.0)]
    pub noise_scale: f64,
    /// Support size of θ* (GLM responses depend on it)
    #[arg(long, default_value_t = 0)]
    pub s: usize,
    /// Value of the nonzero entries of θ*
    #[arg(long, default_value_t = 1.0)]
    pub magnitude: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub norm: NormArgs,
    /// Loss function
    #[arg(long, value_enum, default_value_t = LossArg::Squared)]
    pub loss: LossArg,
    /// Regularization weight in the loss's own scaling
    #[arg(long)]
    pub lambda: f64,
    /// CSV with y in the first column and the row of X after it
    #[arg(long)]
    pub data: PathBuf,
    /// Iteration cap
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    /// Relative objective change for convergence
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
    /// Fixed-point residual tolerance, relative to 1 + ‖θ‖₂
    #[arg(long, default_value_t = 1e-6)]
    pub residual_tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScalingArgs {
    /// TOML experiment file
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SandwichArgs {
    #[command(flatten)]
    pub norm: NormArgs,
    /// Ambient dimension
    #[arg(long, default_value_t = 3)]
    pub p: usize,
    /// θ*, comma separated [default: e₁]
    #[arg(long, value_delimiter = ',')]
    pub theta: Option<Vec<f64>>,
    /// β > 1 of the restricted error set
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    /// Radius ρ of the ball intersected with each set
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Gaussian draws for the cap width
    #[arg(long, default_value_t = 10_000)]
    pub mc: usize,
    /// Per-axis grid resolution [default: chosen from p]
    #[arg(long)]
    pub grid: Option<usize>,
}

/// Default grid resolution keeping the grid near 10⁴ to 10⁵ directions.
pub fn default_sandwich_grid(p: usize) -> usize {
    match p {
        0 | 1 => 1,
        2 => 2000,
        3 => 100,
        4 => 24,
        5 => 10,
        6 => 6,
        7 => 4,
        _ => 3,
    }
}

fn theta_on_first(norm: &Norm, p: usize, s: usize, magnitude: f64) -> Result<Vec<f64>, CliError> {
    let mut theta = vec![0.0; p];
    match norm {
        Norm::Group(g) => {
            if s > g.group_count() {
                return Err(CliError::usage(format!("--s {s} exceeds the {} groups", g.group_count())));
            }
            for grp in &g.groups()[..s] {
                for &i in grp {
                    theta[i] = magnitude;
                }
            }
        }
        _ => {
            if s > p {
                return Err(CliError::usage(format!("--s {s} exceeds p = {p}")));
            }
            theta[..s].iter_mut().for_each(|t| *t = magnitude);
        }
    }
    Ok(theta)
}

/// Files produced by one command, written by [`run`] together with the
/// manifest.
struct Output {
    /// Root seed actually used.
    seed: u64,
    files: Vec<(PathBuf, String)>,
    config: Value,
    seeds: Value,
    stdout: String,
}

fn canonical<T: Serialize>(v: &T) -> Result<String, CliError> {
    Ok(to_canonical(v)? + "\n")
}

fn main_path(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn cap_for(norm: &Norm, theta: Vec<f64>, beta: f64, dirs: usize, seed: u64) -> Result<CapSample, CliError> {
    let errset = ErrorSetSpec::regularized(theta, beta, norm.clone())?;
    Ok(sample_cap(&errset, dirs, seed)?)
}

fn width<E: Executor>(cli: &Cli, a: &WidthArgs, seed: u64, exec: &E) -> Result<Output, CliError> {
    let norm = a.norm.build(a.p)?;
    let (mc_seed, cap_seed) = (derive_seed(seed, 0), derive_seed(seed, 1));
    let est: WidthEstimate = match a.target {
        WidthTarget::Ball => width_norm_ball(&norm, a.p, a.mc, mc_seed, exec)?,
        WidthTarget::Cap => {
            let cap = cap_for(&norm, theta_on_first(&norm, a.p, a.s, 1.0)?, a.beta, a.dirs, cap_seed)?;
            width_cap(&cap, a.mc, mc_seed, exec)?
        }
    };
    let text = canonical(&est)?;
    Ok(Output {
        seed,
        files: vec![(main_path(cli, "width.json"), text.clone())],
        config: serde_json::to_value(a)?,
        seeds: json!({ "mc": mc_seed, "cap": cap_seed }),
        stdout: text,
    })
}

#[derive(Serialize)]
struct Line<'a> {
    seed: usize,
    #[serde(flatten)]
    report: &'a ConditionReport,
}

fn jsonl(reports: &[ConditionReport], seeds: usize) -> Result<String, CliError> {
    let mut out = String::new();
    for (k, r) in reports.iter().enumerate() {
        out += &canonical(&Line { seed: k % seeds, report: r })?;
    }
    Ok(out)
}

fn re_check<E: Executor>(cli: &Cli, a: &ReCheckArgs, seed: u64, exec: &E) -> Result<Output, CliError> {
    if a.seeds == 0 || a.n_grid.is_empty() {
        return Err(CliError::usage("need at least one seed and one n"));
    }
    let norm = a.norm.build(a.p)?;
    let cov = a.design.covariance(a.p)?;
    let (w_seed, cap_seed, design_root) = (derive_seed(seed, 0), derive_seed(seed, 1), derive_seed(seed, 2));
    let cap = cap_for(&norm, theta_on_first(&norm, a.p, a.s, 1.0)?, a.beta, a.dirs, cap_seed)?;
    let w = width_cap(&cap, a.mc, w_seed, exec)?;
    let aniso = !cov.is_identity();
    let reports = exec.map(a.n_grid.len() * a.seeds, |k| {
        let n = a.n_grid[k / a.seeds];
        let x = sample_design(&a.design.spec(&cov, n, derive_seed(design_root, (k % a.seeds) as u64)))?;
        if aniso {
            aniso_re_check(&x, &cap, &cov, a.c, w.mean)
        } else {
            re_report(&x, &cap, w.mean)
        }
    });
    let reports = reports.into_iter().collect::<Result<Vec<_>, _>>()?;
    let envelope: Option<EnvelopeFit> = if aniso { None } else { rip_envelope(&reports).ok() };
    let passed = reports.iter().filter(|r| r.passed).count();
    let summary = json!({
        "width": w,
        "envelope": envelope,
        "passed": passed,
        "total": reports.len(),
    });
    Ok(Output {
        seed,
        files: vec![(main_path(cli, "re.jsonl"), jsonl(&reports, a.seeds)?), (PathBuf::from("summary.json"), canonical(&summary)?)],
        config: serde_json::to_value(a)?,
        seeds: json!({ "width": w_seed, "cap": cap_seed, "design_root": design_root }),
        stdout: canonical(&summary)?,
    })
}

fn rsc_glm<E: Executor>(cli: &Cli, a: &RscGlmArgs, seed: u64, exec: &E) -> Result<Output, CliError> {
    if a.seeds == 0 || a.n_grid.is_empty() {
        return Err(CliError::usage("need at least one seed and one n"));
    }
    let norm = a.norm.build(a.p)?;
    let loss: Loss = a.loss.into();
    let theta = theta_on_first(&norm, a.p, a.s, a.magnitude)?;
    let curvature = loss.glm_curvature(a.t)?;
    let (w_seed, cap_seed) = (derive_seed(seed, 0), derive_seed(seed, 1));
    let (design_root, noise_root) = (derive_seed(seed, 2), derive_seed(seed, 3));
    let cap = cap_for(&norm, theta.clone(), a.beta, a.dirs, cap_seed)?;
    let w = width_cap(&cap, a.mc, w_seed, exec)?;
    let reports = exec.map(a.n_grid.len() * a.seeds, |k| {
        let (n, s) = (a.n_grid[k / a.seeds], (k % a.seeds) as u64);
        let x = sample_design(&DesignSpec::isotropic(n, a.p, DesignFamily::GaussianIsotropic, derive_seed(design_root, s)))?;
        let noise = NoiseSpec { family: NoiseFamily::Gaussian, scale: 1.0, seed: derive_seed(noise_root, s) };
        let (y, _) = loss.sample_response(&x, &theta, &noise)?;
        let mut r = rsc_glm_statistic(&loss, &x, &y, &theta, &cap, &curvature)?;
        r.w_hat = w.mean;
        Ok::<_, normgeo_core::Error>(r)
    });
    let reports = reports.into_iter().collect::<Result<Vec<_>, _>>()?;
    let summary = json!({
        "width": w,
        "curvature": curvature,
        "positive": reports.iter().filter(|r| r.rsc_kappa > 0.0).count(),
        "passed": reports.iter().filter(|r| r.passed).count(),
        "floor_violations": reports.iter().map(|r| r.floor_violations).sum::<usize>(),
        "total": reports.len(),
    });
    Ok(Output {
        seed,
        files: vec![(main_path(cli, "rsc.jsonl"), jsonl(&reports, a.seeds)?), (PathBuf::from("summary.json"), canonical(&summary)?)],
        config: serde_json::to_value(a)?,
        seeds: json!({ "width": w_seed, "cap": cap_seed, "design_root": design_root, "noise_root": noise_root }),
        stdout: canonical(&summary)?,
    })
}

fn lambda<E: Executor>(cli: &Cli, a: &LambdaArgs, seed: u64, exec: &E) -> Result<Output, CliError> {
    let norm = a.norm.build(a.p)?;
    let loss: Loss = a.loss.into();
    let cov = a.design.covariance(a.p)?;
    let theta = theta_on_first(&norm, a.p, a.s, a.magnitude)?;
    let noise = NoiseSpec { family: a.noise.into(), scale: a.noise_scale, seed: 0 };
    let report: LambdaReport =
        lambda_report(&loss, &norm, &a.design.spec(&cov, a.n, 0), &noise, &theta, a.beta, a.trials, a.mc, seed, exec)?;
    let out = json!({ "report": report, "solver_lambda": report.solver_lambda(&loss) });
    let text = canonical(&out)?;
    Ok(Output {
        seed,
        files: vec![(main_path(cli, "lambda.json"), text.clone())],
        config: serde_json::to_value(a)?,
        seeds: json!({ "trials": seed, "width": derive_seed(seed, u64::MAX) }),
        stdout: text,
    })
}

fn solve(cli: &Cli, a: &SolveArgs, seed: u64) -> Result<Output, CliError> {
    let (x, y) = read_data_csv(&a.data)?;
    let norm = a.norm.build(x.cols())?;
    let cfg = SolverConfig { max_iters: a.max_iters, rel_tol: a.rel_tol, residual_tol: a.residual_tol, ..SolverConfig::with_lambda(a.lambda) };
    let fit = solve_regularized(&a.loss.into(), &norm, &x, &y, &cfg)?;
    if !fit.converged {
        eprintln!("warning: solver stopped after {} iterations without converging", fit.iters);
    }
    let text = canonical(&fit)?;
    Ok(Output {
        seed,
        files: vec![(main_path(cli, "fit.json"), text.clone())],
        config: json!({ "args": a, "solver": cfg, "rows": x.rows(), "cols": x.cols() }),
        seeds: json!({}),
        stdout: text,
    })
}

fn summary_json(r: &SweepResult) -> Value {
    let (eligible, covered) = r.bound_coverage();
    json!({
        "fit": r.fit,
        "medians": r.medians,
        "excluded_n": r.excluded_n,
        "failures": r.failures,
        "trials": r.outcomes.len(),
        "converged": r.outcomes.iter().filter(|o| o.converged).count(),
        "bound_eligible": eligible,
        "bound_covered": covered,
        "lemma_violations": r.lemma_violations(),
        "lambda_reports": r.lambda_reports,
    })
}

fn scaling<E: Executor>(cli: &Cli, a: &ScalingArgs, exec: &E) -> Result<Output, CliError> {
    let file = ExperimentFile::load(&a.config)?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let cfg = file.resolve(base, cli.seed)?;
    let result = scaling_sweep(&cfg, exec)?;
    for n in &result.excluded_n {
        eprintln!("warning: every trial failed at n = {n}; excluded from the fit");
    }
    let summary = canonical(&summary_json(&result))?;
    Ok(Output {
        seed: cfg.seed,
        files: vec![(PathBuf::from("trials.csv"), trials_csv(&result.records())?), (main_path(cli, "summary.json"), summary.clone())],
        config: json!({ "file": a.config, "experiment": cfg }),
        seeds: json!({}),
        stdout: summary,
    })
}

fn sandwich<E: Executor>(cli: &Cli, a: &SandwichArgs, seed: u64, exec: &E) -> Result<Output, CliError> {
    let norm = a.norm.build(a.p)?;
    let theta = match &a.theta {
        Some(t) if t.len() != a.p => return Err(CliError::usage(format!("--theta has {} entries, p = {}", t.len(), a.p))),
        Some(t) => t.clone(),
        None => theta_on_first(&Norm::L1, a.p, a.p.min(1), 1.0)?,
    };
    let grid = a.grid.unwrap_or_else(|| default_sandwich_grid(a.p));
    let report = sandwich_check(&theta, a.beta, a.rho, &norm, a.mc, grid, seed, exec)?;
    let out = json!({ "report": report, "holds": report.holds() });
    let text = canonical(&out)?;
    Ok(Output {
        seed,
        files: vec![(main_path(cli, "sandwich.json"), text.clone())],
        config: json!({ "args": a, "grid": grid, "theta": theta }),
        seeds: json!({ "mc": seed }),
        stdout: text,
    })
}

fn dispatch(cli: &Cli) -> Result<String, CliError> {
    if cli.threads == Some(0) {
        return Err(CliError::usage("--threads must be at least 1"));
    }
    let exec = Rayon::new(cli.threads).map_err(|e| CliError::runtime("E_THREADS", e.to_string()))?;
    let seed = cli.seed.unwrap_or(0);
    let (name, out) = match &cli.command {
        Command::Width(a) => ("width", width(cli, a, seed, &exec)?),
        Command::ReCheck(a) => ("re-check", re_check(cli, a, seed, &exec)?),
        Command::RscGlm(a) => ("rsc-glm", rsc_glm(cli, a, seed, &exec)?),
        Command::Lambda(a) => ("lambda", lambda(cli, a, seed, &exec)?),
        Command::Solve(a) => ("solve", solve(cli, a, seed)?),
        Command::Scaling(a) => ("scaling", scaling(cli, a, &exec)?),
        Command::Sandwich(a) => ("sandwich", sandwich(cli, a, seed, &exec)?),
    };
    let names: Vec<String> = out.files.iter().map(|(p, _)| p.display().to_string()).collect();
    let manifest = json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": out.seed,
        "derived_seeds": out.seeds,
        "config": out.config,
        "outputs": names,
    });
    for (path, text) in &out.files {
        write_file(&cli.out_dir.join(path), text)?;
    }
    write_file(&cli.out_dir.join("manifest.json"), &canonical(&manifest)?)?;
    Ok(out.stdout)
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status. Errors go to stderr as one `E_TAG: message` line.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.render().to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", CliError::usage(first));
            return crate::error::EXIT_INPUT;
        }
    };
    match dispatch(&cli) {
        Ok(stdout) => {
            print!("{stdout}");
            0
        }
        Err(e) => {
            eprintln!("{}", CliError { message: e.message.replace('\n', " "), ..e });
            e.code
        }
    }
}
