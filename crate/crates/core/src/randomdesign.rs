//! Random design matrices and noise vectors from sub-Gaussian families.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::check_dim;
use crate::geometry::CapSample;
use crate::linalg::{cholesky, symmetric_eigen, Matrix};
use crate::prelude::*;
use crate::rng::substream;
use crate::{Error, Result};

/// Smallest eigenvalue accepted by [`sigma_sqrt`].
pub const NEAR_SINGULAR_EIG: f64 = 1e-12;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Row covariance `Σ = E[X_i X_iᵀ]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum CovarianceSpec {
    Identity { p: usize },
    /// `Σ_ij = ρ^{|i−j|}`
    Ar1 { p: usize, rho: f64 },
    Explicit { matrix: Matrix },
}

impl CovarianceSpec {
    pub fn dim(&self) -> usize {
        match self {
            CovarianceSpec::Identity { p } | CovarianceSpec::Ar1 { p, .. } => *p,
            CovarianceSpec::Explicit { matrix } => matrix.rows(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, CovarianceSpec::Identity { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CovarianceSpec::Identity { p } if *p == 0 => Err(Error::invalid("covariance dimension must be positive")),
            CovarianceSpec::Identity { .. } => Ok(()),
            CovarianceSpec::Ar1 { p, rho } => {
                if *p == 0 {
                    return Err(Error::invalid("covariance dimension must be positive"));
                }
                if !(rho.abs() < 1.0) {
                    return Err(Error::invalid(format!("AR(1) coefficient must lie in (−1, 1), got {rho}")));
                }
                Ok(())
            }
            CovarianceSpec::Explicit { matrix } => {
                check_dim(matrix.rows(), matrix.cols())?;
                if !matrix.is_finite() || !matrix.is_symmetric(1e-12 * (1.0 + matrix.frobenius())) {
                    return Err(Error::invalid("explicit covariance must be finite and symmetric"));
                }
                cholesky(matrix).map(|_| ())
            }
        }
    }

    /// Dense Σ.
    pub fn matrix(&self) -> Matrix {
        match self {
            CovarianceSpec::Identity { p } => Matrix::identity(*p),
            CovarianceSpec::Ar1 { p, rho } => {
                let mut m = Matrix::zeros(*p, *p);
                for i in 0..*p {
                    for j in 0..*p {
                        m[(i, j)] = rho.powi((i as i32 - j as i32).abs());
                    }
                }
                m
            }
            CovarianceSpec::Explicit { matrix } => matrix.clone(),
        }
    }

    /// Largest eigenvalue `Λ_max(Σ)`.
    pub fn lambda_max(&self) -> Result<f64> {
        if self.is_identity() {
            return Ok(1.0);
        }
        let (vals, _) = symmetric_eigen(&self.matrix())?;
        Ok(*vals.last().expect("nonempty covariance"))
    }
}

/// Symmetric square root `Σ^{1/2}` from the eigendecomposition of Σ.
pub fn sigma_sqrt(cov: &CovarianceSpec) -> Result<Matrix> {
    cov.validate()?;
    if let CovarianceSpec::Identity { p } = cov {
        return Ok(Matrix::identity(*p));
    }
    let (vals, vecs) = symmetric_eigen(&cov.matrix())?;
    if vals[0] <= NEAR_SINGULAR_EIG {
        return Err(Error::NearSingular { min_eigenvalue: vals[0] });
    }
    let roots: Vec<f64> = vals.iter().map(|v| v.sqrt()).collect();
    Ok(vecs.matmul(&Matrix::diag(&roots)).matmul(&vecs.transpose()))
}

/// `(inf, sup)` of `uᵀΣu` over the cap directions: inner approximations of
/// the restricted eigenvalues `λ_min(Σ|A)` and `λ_max(Σ|A)`.
pub fn restricted_eigs(cov: &CovarianceSpec, cap: &CapSample) -> Result<(f64, f64)> {
    if cap.is_empty() {
        return Err(Error::invalid("empty cap"));
    }
    check_dim(cov.dim(), cap.dim())?;
    if cov.is_identity() {
        // Cap directions are unit vectors.
        return Ok((1.0, 1.0));
    }
    let sigma = cov.matrix();
    Ok(cap
        .directions()
        .iter()
        .map(|u| sigma.quad_form(u))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| (lo.min(q), hi.max(q))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum DesignFamily {
    GaussianIsotropic,
    /// Rows `X̃_i Σ^{1/2}` with `X̃_i ~ N(0, I)`.
    GaussianAnisotropic,
    Rademacher,
    /// Entries uniform on `[−√3, √3]` (unit variance).
    UniformBounded,
}

/// Random `n × p` design with i.i.d. rows.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DesignSpec {
    pub n: usize,
    pub p: usize,
    pub family: DesignFamily,
    pub covariance: CovarianceSpec,
    /// Declared ψ₂ bound of a whitened row. Reported only.
    pub psi2_bound: f64,
    pub seed: u64,
}

impl DesignSpec {
    pub fn isotropic(n: usize, p: usize, family: DesignFamily, seed: u64) -> Self {
        DesignSpec { n, p, family, covariance: CovarianceSpec::Identity { p }, psi2_bound: 1.0, seed }
    }

    pub fn anisotropic(n: usize, covariance: CovarianceSpec, seed: u64) -> Self {
        let p = covariance.dim();
        DesignSpec { n, p, family: DesignFamily::GaussianAnisotropic, covariance, psi2_bound: 1.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::invalid("design needs n ≥ 1 and p ≥ 1"));
        }
        check_dim(self.p, self.covariance.dim())?;
        self.covariance.validate()?;
        if self.family != DesignFamily::GaussianAnisotropic && !self.covariance.is_identity() {
            return Err(Error::invalid("only the anisotropic Gaussian family takes a covariance"));
        }
        Ok(())
    }

    pub fn is_isotropic(&self) -> bool {
        self.covariance.is_identity()
    }
}

/// Draws the design. Row `i` uses random stream `(seed, i)`, so designs with
/// the same seed and increasing `n` are nested.
pub fn sample_design(spec: &DesignSpec) -> Result<Matrix> {
    spec.validate()?;
    let root = match spec.family {
        DesignFamily::GaussianAnisotropic if !spec.covariance.is_identity() => Some(sigma_sqrt(&spec.covariance)?),
        _ => None,
    };
    let p = spec.p;
    let mut x = Matrix::zeros(spec.n, p);
    for i in 0..spec.n {
        let mut rng = substream(spec.seed, i as u64);
        let row = x.row_mut(i);
        match spec.family {
            DesignFamily::GaussianIsotropic | DesignFamily::GaussianAnisotropic => {
                for v in row.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
            }
            DesignFamily::Rademacher => {
                for v in row.iter_mut() {
                    *v = if rng.random::<bool>() { 1.0 } else { -1.0 };
                }
            }
            DesignFamily::UniformBounded => {
                for v in row.iter_mut() {
                    *v = rng.random_range(-SQRT3..SQRT3);
                }
            }
        }
        if let Some(root) = &root {
            // Σ^{1/2} is symmetric, so the row vector z Σ^{1/2} equals Σ^{1/2} z.
            let z = row.to_vec();
            row.copy_from_slice(&root.matvec(&z));
        }
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum NoiseFamily {
    Gaussian,
    Rademacher,
    UniformBounded,
}

/// Centered i.i.d. noise with standard deviation `scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub scale: f64,
    pub seed: u64,
}

pub fn sample_noise(spec: &NoiseSpec, n: usize) -> Result<Vec<f64>> {
    if !(spec.scale > 0.0) || !spec.scale.is_finite() {
        return Err(Error::invalid(format!("noise scale must be positive, got {}", spec.scale)));
    }
    if n == 0 {
        return Err(Error::invalid("noise length must be at least 1"));
    }
    let mut rng = substream(spec.seed, 0);
    let s = spec.scale;
    Ok((0..n)
        .map(|_| match spec.family {
            NoiseFamily::Gaussian => s * rng.sample::<f64, _>(StandardNormal),
            NoiseFamily::Rademacher => {
                if rng.random::<bool>() {
                    s
                } else {
                    -s
                }
            }
            NoiseFamily::UniformBounded => s * rng.random_range(-SQRT3..SQRT3),
        })
        .collect())
}
