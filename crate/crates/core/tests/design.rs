use normgeo_core::geometry::{sphere_grid, CapSample};
use normgeo_core::linalg::Matrix;
use normgeo_core::randomdesign::*;
use normgeo_core::stats::{mean, variance};
use normgeo_core::{derive_seed, Error};

fn gram_deviation(x: &Matrix) -> f64 {
    x.gram_scaled().max_abs_diff(&Matrix::identity(x.cols()))
}

#[test]
fn designs_are_deterministic_and_nested() {
    let spec = DesignSpec::isotropic(4, 3, DesignFamily::GaussianIsotropic, 7);
    assert_eq!(sample_design(&spec).unwrap(), sample_design(&spec).unwrap());
    let big = sample_design(&DesignSpec { n: 40, ..spec.clone() }).unwrap();
    assert_eq!(big.top_rows(4), sample_design(&spec).unwrap());
}

#[test]
fn bounded_families() {
    let x = sample_design(&DesignSpec::isotropic(50, 7, DesignFamily::Rademacher, 1)).unwrap();
    assert!(x.as_slice().iter().all(|&v| v == 1.0 || v == -1.0));
    let x = sample_design(&DesignSpec::isotropic(50, 7, DesignFamily::UniformBounded, 1)).unwrap();
    assert!(x.as_slice().iter().all(|v| v.abs() <= 3f64.sqrt()));
}

#[test]
fn isotropy_at_large_n() {
    let n = 100_000;
    let bound = 5.0 / (n as f64).sqrt();
    for family in [DesignFamily::GaussianIsotropic, DesignFamily::Rademacher, DesignFamily::UniformBounded] {
        let mut ok = 0;
        let seeds = 20;
        for s in 0..seeds {
            let x = sample_design(&DesignSpec::isotropic(n, 10, family, derive_seed(3, s))).unwrap();
            ok += (gram_deviation(&x) <= bound) as usize;
        }
        assert!(ok as f64 >= 0.95 * seeds as f64, "{family:?}: {ok}/{seeds}");
    }
}

#[test]
fn ar1_covariance_is_reproduced() {
    let cov = CovarianceSpec::Ar1 { p: 2, rho: 0.5 };
    let x = sample_design(&DesignSpec::anisotropic(100_000, cov.clone(), 5)).unwrap();
    let g = x.gram_scaled();
    assert!((g[(0, 1)] - 0.5).abs() < 0.02, "{}", g[(0, 1)]);
    assert!((g[(0, 0)] - 1.0).abs() < 0.02);
    // Entrywise error shrinks like 1/√n.
    let cov5 = CovarianceSpec::Ar1 { p: 5, rho: 0.5 };
    let sigma = cov5.matrix();
    for n in [1_000, 10_000, 100_000] {
        let x = sample_design(&DesignSpec::anisotropic(n, cov5.clone(), 6)).unwrap();
        assert!(x.gram_scaled().max_abs_diff(&sigma) <= 5.0 / (n as f64).sqrt());
    }
    assert_eq!(cov.matrix()[(1, 0)], 0.5);
    assert_eq!(CovarianceSpec::Ar1 { p: 4, rho: 0.5 }.matrix()[(0, 3)], 0.125);
}

#[test]
fn noise_moments() {
    let n = 1_000_000;
    let w = sample_noise(&NoiseSpec { family: NoiseFamily::Gaussian, scale: 1.0, seed: 2 }, n).unwrap();
    assert!((variance(&w) - 1.0).abs() < 0.01);
    assert!(mean(&w).abs() < 0.01);
    let w = sample_noise(&NoiseSpec { family: NoiseFamily::Gaussian, scale: 0.5, seed: 3 }, n).unwrap();
    assert!((variance(&w).sqrt() - 0.5).abs() < 0.01);
    let w = sample_noise(&NoiseSpec { family: NoiseFamily::UniformBounded, scale: 2.0, seed: 4 }, n).unwrap();
    assert!((variance(&w).sqrt() - 2.0).abs() < 0.01);
    let w = sample_noise(&NoiseSpec { family: NoiseFamily::Rademacher, scale: 1.0, seed: 5 }, 8).unwrap();
    assert!(w.iter().all(|&v| v == 1.0 || v == -1.0));
    let spec = NoiseSpec { family: NoiseFamily::Gaussian, scale: 0.0, seed: 0 };
    assert!(matches!(sample_noise(&spec, 3), Err(Error::InvalidInput(_))));
}

#[test]
fn covariance_roots() {
    assert_eq!(sigma_sqrt(&CovarianceSpec::Identity { p: 5 }).unwrap(), Matrix::identity(5));
    let r = sigma_sqrt(&CovarianceSpec::Explicit { matrix: Matrix::diag(&[4.0, 9.0]) }).unwrap();
    assert!(r.max_abs_diff(&Matrix::diag(&[2.0, 3.0])) < 1e-14);
    for (p, rho) in [(3, 0.5), (10, 0.9), (6, -0.3)] {
        let cov = CovarianceSpec::Ar1 { p, rho };
        let sigma = cov.matrix();
        let r = sigma_sqrt(&cov).unwrap();
        assert!(r.is_symmetric(1e-14));
        assert!(r.matmul(&r).max_abs_diff(&sigma) <= 1e-10 * sigma.frobenius());
    }
}

#[test]
fn covariance_errors() {
    let not_pd = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
    let e = sigma_sqrt(&CovarianceSpec::Explicit { matrix: not_pd.clone() }).unwrap_err();
    assert!(e.is_input_error());
    let spec = DesignSpec::anisotropic(5, CovarianceSpec::Explicit { matrix: not_pd }, 0);
    assert!(sample_design(&spec).unwrap_err().is_input_error());
    let tiny = Matrix::diag(&[1.0, 1e-13]);
    assert!(matches!(sigma_sqrt(&CovarianceSpec::Explicit { matrix: tiny }), Err(Error::NearSingular { .. })));
    assert!(CovarianceSpec::Ar1 { p: 3, rho: 1.0 }.validate().is_err());
    let iso_with_cov = DesignSpec {
        covariance: CovarianceSpec::Ar1 { p: 3, rho: 0.2 },
        ..DesignSpec::isotropic(5, 3, DesignFamily::Rademacher, 0)
    };
    assert!(iso_with_cov.validate().is_err());
}

#[test]
fn restricted_eigenvalue_examples() {
    let grid = CapSample::from_directions(sphere_grid(2, 5000).unwrap()).unwrap();
    assert!(grid.len() >= 10_000);
    let (lo, hi) = restricted_eigs(&CovarianceSpec::Identity { p: 2 }, &grid).unwrap();
    assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    let axes = CapSample::from_directions(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let diag = CovarianceSpec::Explicit { matrix: Matrix::diag(&[1.0, 4.0]) };
    assert_eq!(restricted_eigs(&diag, &axes).unwrap(), (1.0, 4.0));
    let (lo, hi) = restricted_eigs(&CovarianceSpec::Ar1 { p: 2, rho: 0.5 }, &grid).unwrap();
    assert!((lo - 0.5).abs() < 1e-3 && (hi - 1.5).abs() < 1e-3);
    assert!((CovarianceSpec::Ar1 { p: 2, rho: 0.5 }.lambda_max().unwrap() - 1.5).abs() < 1e-14);
}
