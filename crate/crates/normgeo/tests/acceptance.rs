//! Acceptance suite. Runs every criterion at its stated size and tolerance
//! and prints one PASS/FAIL line per criterion.
//!
//! `cargo test -p normgeo --test acceptance` runs all of them; trailing
//! numbers (`-- 3 8`) select a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use normgeo::json::to_canonical;
use normgeo::Rayon;
use normgeo_core::conditions::{aniso_re_check, phase_transition_n0, re_report, re_statistic, rip_envelope, rsc_glm_statistic};
use normgeo_core::geometry::{cap_suprema, sample_cap, sandwich_check, sphere_grid, width_cap, width_norm_ball, CapSample, ErrorSetSpec};
use normgeo_core::harness::{scaling_sweep, ExperimentConfig, SweepResult};
use normgeo_core::linalg::{dot, norm2, Matrix};
use normgeo_core::losses::Loss;
use normgeo_core::norms::{compat_empirical, GroupPartition, Norm};
use normgeo_core::randomdesign::{sample_design, CovarianceSpec, DesignFamily, DesignSpec, NoiseFamily, NoiseSpec};
use normgeo_core::regparam::lambda_report;
use normgeo_core::solver::{solve_regularized, SolverConfig};
use normgeo_core::stats::{linear_fit, mean_stderr};
use normgeo_core::{derive_seed, substream, Executor, Sequential};
use rand::Rng;
use rand_distr::StandardNormal;

type Check = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn theta_first(p: usize, s: usize) -> Vec<f64> {
    (0..p).map(|i| if i < s { 1.0 } else { 0.0 }).collect()
}

fn l1_cap(p: usize, s: usize, dirs: usize, seed: u64) -> CapSample {
    let es = ErrorSetSpec::regularized(theta_first(p, s), 2.0, Norm::L1).unwrap();
    sample_cap(&es, dirs, seed).unwrap()
}

const N_GRID: [usize; 5] = [200, 400, 800, 1600, 3200];

static SWEEP: OnceLock<(SweepResult, f64)> = OnceLock::new();

fn lasso_sweep(exec: &Rayon) -> &'static (SweepResult, f64) {
    SWEEP.get_or_init(|| {
        let t = Instant::now();
        let cfg = ExperimentConfig::lasso(256, 8, N_GRID.to_vec(), 20, 1);
        (scaling_sweep(&cfg, exec).unwrap(), t.elapsed().as_secs_f64())
    })
}

fn c1_error_scaling(exec: &Rayon) -> Check {
    let (r, secs) = lasso_sweep(exec);
    let f = &r.fit;
    verdict(
        (f.slope + 0.5).abs() <= 0.1 && f.r2 >= 0.95 && r.failures.is_empty(),
        format!("slope {:.4}, r2 {:.4}, {} trials, {} failed, sweep {secs:.1}s", f.slope, f.r2, r.outcomes.len(), r.failures.len()),
    )
}

fn c2_bound_validity(exec: &Rayon) -> Check {
    let (r, _) = lasso_sweep(exec);
    let (eligible, covered) = r.bound_coverage();
    let frac = covered as f64 / eligible.max(1) as f64;
    verdict(eligible > 0 && frac >= 0.95, format!("{covered}/{eligible} covered ({:.1}%), lemma violations {}", 100.0 * frac, r.lemma_violations()))
}

fn c3_lambda_width(exec: &Rayon) -> Check {
    let noise = NoiseSpec { family: NoiseFamily::Gaussian, scale: 1.0, seed: 0 };
    let report = |d: &DesignSpec, p: usize, seed| {
        lambda_report(&Loss::squared(), &Norm::L1, d, &noise, &vec![0.0; p], 2.0, 200, 2000, seed, exec).unwrap()
    };
    let mut ratios = Vec::new();
    for p in [64, 128, 256, 512] {
        ratios.push(report(&DesignSpec::isotropic(400, p, DesignFamily::GaussianIsotropic, 0), p, 1).width_ratio);
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let iso = report(&DesignSpec::isotropic(400, 64, DesignFamily::GaussianIsotropic, 0), 64, 2);
    let cov = CovarianceSpec::Explicit { matrix: Matrix::identity(64).scaled(4.0) };
    let aniso = report(&DesignSpec::anisotropic(400, cov, 0), 64, 3);
    let inflation = aniso.mean_stat / iso.mean_stat;
    verdict(
        hi / lo <= 2.0 && (inflation - 2.0).abs() <= 0.4,
        format!("width ratios {ratios:.3?} (max/min {:.3}), Σ=4I inflation {inflation:.3} with ξ = {}", hi / lo, aniso.xi),
    )
}

fn envelope(cap: &CapSample, p: usize, family: DesignFamily, w: f64, seed: u64, exec: &Rayon) -> normgeo_core::conditions::EnvelopeFit {
    let reports = exec.map(N_GRID.len() * 10, |k| {
        let x = sample_design(&DesignSpec::isotropic(N_GRID[k / 10], p, family, derive_seed(seed, (k % 10) as u64))).unwrap();
        re_report(&x, cap, w).unwrap()
    });
    rip_envelope(&reports).unwrap()
}

fn c4_rip_decay(exec: &Rayon) -> Check {
    let cap = l1_cap(100, 4, 1000, 1);
    let w = width_cap(&cap, 2000, 2, exec).unwrap().mean;
    let mut ok = true;
    let mut detail = Vec::new();
    for family in [DesignFamily::GaussianIsotropic, DesignFamily::Rademacher] {
        let env = envelope(&cap, 100, family, w, 5, exec);
        ok &= (env.fit.slope + 0.5).abs() <= 0.15;
        detail.push(format!("{family:?} slope {:.4} (c {:.3})", env.fit.slope, env.c));
    }
    verdict(ok, detail.join(", "))
}

fn c5_anisotropic_bracketing(exec: &Rayon) -> Check {
    let p = 50;
    let cap = l1_cap(p, 4, 1000, 3);
    let w = width_cap(&cap, 2000, 2, exec).unwrap().mean;
    let c = envelope(&cap, p, DesignFamily::GaussianIsotropic, w, 6, exec).c;
    let n = (10.0 * w * w).ceil() as usize;
    let cov = CovarianceSpec::Ar1 { p, rho: 0.5 };
    let passed = exec
        .map(20, |k| {
            let x = sample_design(&DesignSpec::anisotropic(n, cov.clone(), derive_seed(7, k as u64))).unwrap();
            aniso_re_check(&x, &cap, &cov, c, w).unwrap().passed
        })
        .into_iter()
        .filter(|b| *b)
        .count();
    verdict(passed >= 18, format!("{passed}/20 bracketed at n = {n} (ŵ = {w:.3}, c = {c:.3})"))
}

fn c6_width_sandwich(exec: &Rayon) -> Check {
    let mut ok = true;
    let mut detail = Vec::new();
    for p in [2, 3, 4] {
        let grid = normgeo::cli::default_sandwich_grid(p);
        let r = sandwich_check(&theta_first(p, 1), 2.0, 1.0, &Norm::L1, 10_000, grid, 11, exec).unwrap();
        ok &= r.holds();
        detail.push(format!(
            "p={p}: {:.4} ≤ {:.4} ≤ {:.0}·{:.4}",
            r.w_constrained.mean, r.w_regularized.mean, r.factor, r.w_constrained_cone.mean
        ));
    }
    verdict(ok, detail.join("; "))
}

fn c7_compatibility(_: &Rayon) -> Check {
    let p = 100;
    let mut ok = true;
    let mut detail = Vec::new();
    for s in [1usize, 4] {
        let es = ErrorSetSpec::regularized(theta_first(p, s), 2.0, Norm::L1).unwrap();
        let est = compat_empirical(&es, 100_000, derive_seed(13, s as u64)).unwrap();
        let bound = 4.0 * (s as f64).sqrt();
        ok &= est.empirical_sup <= bound;
        detail.push(format!("L1 s={s}: ψ̂ {:.4} ≤ {bound}", est.empirical_sup));
    }
    let es = ErrorSetSpec::regularized(theta_first(p, 4), 2.0, Norm::L2).unwrap();
    let est = compat_empirical(&es, 100_000, 14).unwrap();
    ok &= est.empirical_sup == 1.0;
    detail.push(format!("L2: ψ̂ {}", est.empirical_sup));
    verdict(ok, detail.join(", "))
}

fn c8_phase_transition(exec: &Rayon) -> Check {
    let p = 128;
    let (mut w2, mut n0) = (Vec::new(), Vec::new());
    for s in [2usize, 4, 8] {
        let cap = l1_cap(p, s, 2000, 7);
        let w = width_cap(&cap, 2000, 9, exec).unwrap().mean;
        let stat = |n: usize, seed: u64| {
            let x = sample_design(&DesignSpec::isotropic(n, p, DesignFamily::GaussianIsotropic, seed))?;
            Ok(re_statistic(&x, &cap)?.0)
        };
        let pt = phase_transition_n0(stat, 0.5, 4, 20_000, 10, 3, exec).unwrap();
        w2.push(w * w);
        n0.push(pt.n0 as f64);
    }
    let fit = linear_fit(&w2, &n0).unwrap();
    verdict(fit.r2 >= 0.9, format!("ŵ² {w2:.3?}, n0 {n0:?}, r2 {:.4}", fit.r2))
}

fn c9_glm_rsc(exec: &Rayon) -> Check {
    let p = 64;
    let theta = theta_first(p, 4);
    let cap = l1_cap(p, 4, 1000, 11);
    let w = width_cap(&cap, 2000, 2, exec).unwrap().mean;
    let n = (4.0 * w * w).ceil() as usize;
    let loss = Loss::logistic();
    let curv = loss.glm_curvature(1.0).unwrap();
    let reports = exec.map(20, |k| {
        let x = sample_design(&DesignSpec::isotropic(n, p, DesignFamily::GaussianIsotropic, derive_seed(8, k as u64))).unwrap();
        let noise = NoiseSpec { family: NoiseFamily::Gaussian, scale: 1.0, seed: derive_seed(12, k as u64) };
        let (y, _) = loss.sample_response(&x, &theta, &noise).unwrap();
        rsc_glm_statistic(&loss, &x, &y, &theta, &cap, &curv).unwrap()
    });
    let positive = reports.iter().filter(|r| r.rsc_kappa > 0.0).count();
    let floor_positive = reports.iter().filter(|r| r.floor_inf.unwrap() > 0.0).count();
    let violations: usize = reports.iter().map(|r| r.floor_violations).sum();
    verdict(
        positive >= 18 && violations == 0,
        format!("inf δL > 0 in {positive}/20 at n = {n} (ŵ = {w:.3}); floor > 0 in {floor_positive}/20; {violations} floor violations over {} directions", 20 * cap.len()),
    )
}

fn gaussian_design(n: usize, p: usize, seed: u64) -> Matrix {
    sample_design(&DesignSpec::isotropic(n, p, DesignFamily::GaussianIsotropic, seed)).unwrap()
}

fn c10_oracles(_: &Rayon) -> Check {
    let mut detail = Vec::new();
    let mut ok = true;

    // Normal equations via an independent Cholesky solve.
    let (n, p) = (200, 50);
    let x = gaussian_design(n, p, 3);
    let mut rng = substream(4, 0);
    let y: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) + 2.0).collect();
    let xm = DMatrix::from_row_slice(n, p, x.as_slice());
    let oracle = (xm.transpose() * &xm).cholesky().unwrap().solve(&(xm.transpose() * DVector::from_vec(y.clone())));
    let cfg = SolverConfig { rel_tol: 1e-14, residual_tol: 1e-9, ..SolverConfig::with_lambda(0.0) };
    let fit = solve_regularized(&Loss::squared(), &Norm::L1, &x, &y, &cfg).unwrap();
    let rel = fit.theta_hat.iter().zip(oracle.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / oracle.norm();
    ok &= rel <= 1e-6;
    detail.push(format!("normal equations rel {rel:.2e}"));

    // X = √n·I reduces the lasso to soft thresholding at λ/2.
    let n = 16;
    let x = Matrix::identity(n).scaled((n as f64).sqrt());
    let y: Vec<f64> = (0..n).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let mut worst: f64 = 0.0;
    for lambda in [0.1, 0.5, 1.3] {
        let fit = solve_regularized(&Loss::squared(), &Norm::L1, &x, &y, &SolverConfig::with_lambda(lambda)).unwrap();
        for (t, yi) in fit.theta_hat.iter().zip(&y) {
            let z = yi / (n as f64).sqrt();
            worst = worst.max((t - z.signum() * (z.abs() - lambda / 2.0).max(0.0)).abs());
        }
    }
    ok &= worst <= 1e-9;
    detail.push(format!("soft threshold max dev {worst:.1e}"));

    // Central differences.
    let h = 1e-6;
    let mut fd_worst: f64 = 0.0;
    for loss in [Loss::squared(), Loss::logistic(), Loss::poisson()] {
        for k in 0..300u64 {
            let x = gaussian_design(12, 4, k);
            let mut rng = substream(k, 7);
            let y: Vec<f64> = (0..12)
                .map(|_| match loss.name() {
                    "squared" => rng.sample(StandardNormal),
                    "logistic" => rng.random_range(0..2) as f64,
                    _ => rng.random_range(0..5) as f64,
                })
                .collect();
            let theta: Vec<f64> = (0..4).map(|_| rng.random_range(-0.5..0.5)).collect();
            let g = loss.gradient(&theta, &x, &y).unwrap();
            let mut diff = 0.0;
            for j in 0..4 {
                let (mut a, mut b) = (theta.clone(), theta.clone());
                a[j] += h;
                b[j] -= h;
                let fd = (loss.value(&a, &x, &y).unwrap() - loss.value(&b, &x, &y).unwrap()) / (2.0 * h);
                diff += (g[j] - fd).powi(2);
            }
            fd_worst = fd_worst.max(diff.sqrt() / norm2(&g).max(1.0));
        }
    }
    ok &= fd_worst <= 1e-5;
    detail.push(format!("gradient vs FD {fd_worst:.1e}"));

    // Sampled cap against an exhaustive sphere grid restricted to the cone.
    let x = gaussian_design(15, 4, 8);
    let es = ErrorSetSpec::regularized(theta_first(4, 1), 2.0, Norm::L1).unwrap();
    let grid: Vec<Vec<f64>> = sphere_grid(4, 20).unwrap().into_iter().filter(|u| es.ray_extent(u).unwrap() > 1e-9).collect();
    let (brute, _) = re_statistic(&x, &CapSample::from_directions(grid).unwrap()).unwrap();
    let (sampled, _) = re_statistic(&x, &sample_cap(&es, 20_000, 9).unwrap()).unwrap();
    let gap = (sampled - brute).abs() / brute;
    ok &= gap <= 0.1;
    detail.push(format!("cap inf_q vs enumeration {:.2}%", 100.0 * gap));

    verdict(ok, detail.join(", "))
}

fn random_vec(rng: &mut impl Rng, p: usize) -> Vec<f64> {
    (0..p).map(|_| rng.sample(StandardNormal)).collect()
}

fn point_set_width(points: &[Vec<f64>], n_mc: usize, seed: u64) -> (f64, f64) {
    let p = points[0].len();
    let sups: Vec<f64> = (0..n_mc)
        .map(|i| {
            let g = random_vec(&mut substream(seed, i as u64), p);
            points.iter().map(|x| dot(x, &g)).fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    mean_stderr(&sups)
}

fn c11_properties(_: &Rayon) -> Check {
    let mut failures = Vec::new();
    let p = 8;
    let norms = [Norm::L1, Norm::L2, Norm::Linf, Norm::Group(GroupPartition::contiguous(p, 2).unwrap())];
    let mut rng = substream(21, 0);
    let mut checks = 0usize;
    for norm in &norms {
        for _ in 0..2000 {
            let (u, v) = (random_vec(&mut rng, p), random_vec(&mut rng, p));
            let c: f64 = rng.sample(StandardNormal);
            let (ru, rv) = (norm.value(&u).unwrap(), norm.value(&v).unwrap());
            let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            let cu: Vec<f64> = u.iter().map(|a| c * a).collect();
            let tol = 1e-12 * (1.0 + ru + rv);
            if !(ru > 0.0 && norm.value(&sum).unwrap() <= ru + rv + tol) {
                failures.push(format!("{} triangle", norm.name()));
            }
            if (norm.value(&cu).unwrap() - c.abs() * ru).abs() > 1e-12 * (1.0 + c.abs() * ru) {
                failures.push(format!("{} homogeneity", norm.name()));
            }
            if dot(&u, &v) > ru * norm.dual_value(&v).unwrap() + tol * (1.0 + norm2(&v)) {
                failures.push(format!("{} Hölder", norm.name()));
            }
            // Prox optimality: (x − z)/t is a subgradient of R at z.
            let t = rng.random_range(0.01..3.0);
            let z = norm.prox(&u, t).unwrap();
            let g: Vec<f64> = u.iter().zip(&z).map(|(a, b)| (a - b) / t).collect();
            if norm.dual_value(&g).unwrap() > 1.0 + 1e-9 || (dot(&g, &z) - norm.value(&z).unwrap()).abs() > 1e-9 * (1.0 + norm2(&u)) {
                failures.push(format!("{} prox", norm.name()));
            }
            checks += 4;
        }
    }
    if norms.iter().any(|n| n.value(&[0.0; 8]).unwrap() != 0.0) {
        failures.push("norm of zero".into());
    }

    // Width invariants.
    let dirs = [vec![1.0, 2.0, -1.0], vec![0.0, -3.0, 1.0], vec![2.0, 0.5, 0.5]];
    let cap_w = |c: f64| {
        let d: Vec<Vec<f64>> = dirs.iter().map(|v| v.iter().map(|x| c * x).collect()).collect();
        width_cap(&CapSample::from_directions(d).unwrap(), 5000, 4, &Sequential).unwrap().mean
    };
    if cap_w(8.0) != cap_w(1.0) || cap_w(0.25) != cap_w(1.0) {
        failures.push("cap width direction scaling".into());
    }
    let grid = sphere_grid(3, 6).unwrap();
    let rho = 2.5;
    let big: Vec<Vec<f64>> = grid.iter().map(|u| u.iter().map(|x| rho * x).collect()).collect();
    let ((w1, s1), (w2, s2)) = (point_set_width(&grid, 20_000, 8), point_set_width(&big, 20_000, 8));
    if (w2 - rho * w1).abs() > 3.0 * (s2 * s2 + rho * rho * s1 * s1).sqrt() {
        failures.push("width radius scaling".into());
    }
    let b = random_vec(&mut rng, 3);
    let shifted: Vec<Vec<f64>> = grid.iter().map(|u| u.iter().zip(&b).map(|(x, y)| x + y).collect()).collect();
    let ((w1, s1), (w2, s2)) = (point_set_width(&grid, 20_000, 11), point_set_width(&shifted, 20_000, 12));
    if (w1 - w2).abs() > 3.0 * (s1 * s1 + s2 * s2).sqrt() {
        failures.push("width translation".into());
    }
    let es = ErrorSetSpec::regularized(vec![1.0, 0.0, 0.0, -1.0, 0.0, 0.0], 2.0, Norm::L1).unwrap();
    let full = sample_cap(&es, 400, 3).unwrap();
    let part = CapSample::from_directions(full.directions()[..150].to_vec()).unwrap();
    let (a, bb) = (cap_suprema(&part, 3000, 4, &Sequential), cap_suprema(&full, 3000, 4, &Sequential));
    if a.iter().zip(&bb).any(|(x, y)| x > y) {
        failures.push("width monotonicity".into());
    }

    // Single- versus multi-threaded output.
    let mut cfg = ExperimentConfig::lasso(64, 4, vec![100, 200, 400, 800], 4, 17);
    cfg.mc.lambda_trials = 40;
    cfg.mc.width_draws = 300;
    cfg.mc.cap_dirs = 100;
    let bytes = |exec: &dyn Fn(&ExperimentConfig) -> SweepResult| to_canonical(&exec(&cfg)).unwrap();
    let one = bytes(&|c| scaling_sweep(c, &Rayon::new(Some(1)).unwrap()).unwrap());
    let four = bytes(&|c| scaling_sweep(c, &Rayon::new(Some(4)).unwrap()).unwrap());
    let seq = bytes(&|c| scaling_sweep(c, &Sequential).unwrap());
    let w1 = to_canonical(&width_norm_ball(&Norm::L1, 50, 5000, 2, &Rayon::new(Some(1)).unwrap()).unwrap()).unwrap();
    let w4 = to_canonical(&width_norm_ball(&Norm::L1, 50, 5000, 2, &Rayon::new(Some(4)).unwrap()).unwrap()).unwrap();
    if one != four || one != seq || w1 != w4 {
        failures.push("thread determinism".into());
    }

    failures.dedup();
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{checks} norm/Hölder/prox checks, width scaling/translation/monotonicity, 1 vs 4 threads byte-identical ({} bytes)", one.len())
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

type Criterion = (&'static str, fn(&Rayon) -> Check);

fn main() {
    let criteria: [Criterion; 11] = [
        ("L1 error scaling", c1_error_scaling),
        ("bound validity", c2_bound_validity),
        ("λ width scaling", c3_lambda_width),
        ("RIP decay", c4_rip_decay),
        ("anisotropic bracketing", c5_anisotropic_bracketing),
        ("width sandwich", c6_width_sandwich),
        ("compatibility", c7_compatibility),
        ("phase transition", c8_phase_transition),
        ("GLM RSC", c9_glm_rsc),
        ("oracle equivalences", c10_oracles),
        ("property suites", c11_properties),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let exec = Rayon::new(None).expect("thread pool");
    let mut failed = 0;
    println!("acceptance: {} worker threads", exec.threads());
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| f(&exec))).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(d) => println!("criterion {id:>2} {name}: PASS ({d}) [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("criterion {id:>2} {name}: FAIL ({d}) [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}
