use normgeo_core::linalg::{norm2, Matrix};
use normgeo_core::losses::Loss;
use normgeo_core::norms::Norm;
use normgeo_core::randomdesign::*;
use normgeo_core::regparam::*;
use normgeo_core::stats::median;
use normgeo_core::{derive_seed, Sequential};

fn gaussian_noise() -> NoiseSpec {
    NoiseSpec { family: NoiseFamily::Gaussian, scale: 1.0, seed: 0 }
}

#[test]
fn scalar_and_noiseless_statistics() {
    assert_eq!(grad_dualnorm(&Norm::L1, &Matrix::identity(1), &[2.0]).unwrap(), 2.0);
    let x = Matrix::identity(3).scaled(5.0);
    assert_eq!(grad_dualnorm(&Norm::L2, &x, &[0.0; 3]).unwrap(), 0.0);
    // Noiseless GLM responses: ω = E[y|X] − y vanishes when y is set to its mean.
    let loss = Loss::poisson();
    let theta = [0.2, -0.1, 0.3];
    let y: Vec<f64> = x.matvec(&theta).iter().map(|&e| loss.dphi(e)).collect();
    let omega: Vec<f64> = x.matvec(&theta).iter().zip(&y).map(|(&e, yi)| loss.dphi(e) - yi).collect();
    assert_eq!(grad_dualnorm(&Norm::L1, &x, &omega).unwrap(), 0.0);
}

#[test]
fn lasso_statistic_tracks_log_p() {
    let p = 256;
    let design = DesignSpec::isotropic(400, p, DesignFamily::GaussianIsotropic, 0);
    let r = lambda_report(&Loss::squared(), &Norm::L1, &design, &gaussian_noise(), &vec![0.0; p], 2.0, 200, 2000, 1, &Sequential)
        .unwrap();
    let ratio = r.mean_stat * 20.0 / (2.0 * (p as f64).ln()).sqrt();
    assert!((0.5..=2.0).contains(&ratio), "{ratio}");
    assert!(r.q95 >= r.mean_stat);
    assert_eq!(r.recommended_lambda, 2.0 * r.q95);
}

#[test]
fn width_ratio_is_stable_across_dimension() {
    let ratios: Vec<f64> = [64, 128, 256, 512]
        .iter()
        .map(|&p| {
            let design = DesignSpec::isotropic(400, p, DesignFamily::GaussianIsotropic, 0);
            lambda_report(&Loss::squared(), &Norm::L1, &design, &gaussian_noise(), &vec![0.0; p], 2.0, 200, 2000, 2, &Sequential)
                .unwrap()
                .width_ratio
        })
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi / lo < 2.0, "{ratios:?}");
}

#[test]
fn anisotropic_scale_inflates_statistic_by_xi() {
    let p = 64;
    let iso = DesignSpec::isotropic(400, p, DesignFamily::GaussianIsotropic, 0);
    let aniso = DesignSpec::anisotropic(400, CovarianceSpec::Explicit { matrix: Matrix::identity(p).scaled(4.0) }, 0);
    let run = |d: &DesignSpec, seed| {
        lambda_report(&Loss::squared(), &Norm::L1, d, &gaussian_noise(), &vec![0.0; p], 2.0, 200, 500, seed, &Sequential).unwrap()
    };
    // Independent trial seeds for the two designs.
    let (a, b) = (run(&iso, 3), run(&aniso, 4));
    assert!((b.xi - 2.0).abs() < 1e-12);
    assert!((b.mean_stat / a.mean_stat - 2.0).abs() <= 0.4, "{}", b.mean_stat / a.mean_stat);
}

/// The statistic decays like 1/√n: quadrupling n halves it (doubling n
/// divides it by √2).
#[test]
fn statistic_decays_like_inverse_root_n() {
    let p = 50;
    let mut ratios = Vec::new();
    for rep in 0..20u64 {
        let stat = |n: usize| {
            let design = DesignSpec::isotropic(n, p, DesignFamily::GaussianIsotropic, 0);
            lambda_report(&Loss::squared(), &Norm::L1, &design, &gaussian_noise(), &vec![0.0; p], 2.0, 20, 10, derive_seed(5, rep), &Sequential)
                .unwrap()
                .mean_stat
        };
        ratios.push(stat(200) / stat(800));
    }
    let m = median(&ratios);
    assert!((m - 2.0).abs() <= 0.15 * 2.0, "{m}");
}

#[test]
fn recommended_lambda_covers_fresh_trials() {
    let p = 40;
    let design = DesignSpec::isotropic(100, p, DesignFamily::GaussianIsotropic, 0);
    let theta = vec![0.0; p];
    let beta = 2.0;
    let r = lambda_report(&Loss::squared(), &Norm::L1, &design, &gaussian_noise(), &theta, beta, 1000, 100, 6, &Sequential).unwrap();
    let m = 1000;
    let covered = (0..m)
        .filter(|&t| {
            let s = grad_dualnorm_trial(&Loss::squared(), &Norm::L1, &design, &gaussian_noise(), &theta, derive_seed(7, t)).unwrap();
            r.recommended_lambda >= beta * s
        })
        .count();
    // 95% nominal coverage, less three binomial standard errors.
    let slack = 3.0 * (0.95f64 * 0.05 / m as f64).sqrt();
    assert!(covered as f64 / m as f64 >= 0.95 - slack, "{covered}/{m}");
}

#[test]
fn squared_and_gaussian_glm_statistics_coincide() {
    let (n, p) = (60, 12);
    let x = sample_design(&DesignSpec::isotropic(n, p, DesignFamily::GaussianIsotropic, 8)).unwrap();
    let theta: Vec<f64> = (0..p).map(|i| if i < 3 { 1.0 } else { 0.0 }).collect();
    let loss = Loss::squared();
    let (y, omega) = loss.sample_response(&x, &theta, &NoiseSpec { seed: 9, ..gaussian_noise() }).unwrap();
    // Gaussian GLM gradient (1/n)Xᵀ(φ'(η) − y) with φ' the identity.
    let eta = x.matvec(&theta);
    let resid: Vec<f64> = eta.iter().zip(&y).map(|(e, yi)| e - yi).collect();
    let glm: Vec<f64> = x.matvec_t(&resid).iter().map(|v| v / n as f64).collect();
    let squared: Vec<f64> = loss.gradient(&theta, &x, &y).unwrap().iter().map(|v| v / loss.lambda_scale()).collect();
    for norm in [Norm::L1, Norm::L2, Norm::Linf] {
        let s = grad_dualnorm(&norm, &x, &omega).unwrap();
        assert!((norm.dual_value(&glm).unwrap() - s).abs() <= 1e-10);
        assert!((norm.dual_value(&squared).unwrap() - s).abs() <= 1e-10);
    }
    assert!(norm2(&omega) > 0.0);
}
