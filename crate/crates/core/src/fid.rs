//! Fréchet distance between Gaussian fits of two sample sets, on raw
//! coordinates.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::Array2;
use thiserror::Error;

/// Covariance eigenvalues are floored here after fitting.
pub const EIGEN_FLOOR: f64 = 1e-10;
/// Results above this negative value are clipped to 0 silently; anything
/// lower is still clipped but reported through [`Fid::clipped`].
pub const NEGATIVE_SLACK: f64 = -1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum FidError {
    #[error("need at least {needed} samples for dimension {dim}, got {got}")]
    InsufficientSamples { needed: usize, got: usize, dim: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix square root did not converge")]
    MatrixSqrtNonConvergence,
    #[error("samples contain non-finite values")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFit {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianFit {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Sample mean and unbiased covariance, symmetrized and eigenvalue-floored.
///
/// Two samples suffice: a rank-deficient covariance is lifted to PSD by the
/// eigenvalue floor.
pub fn fit_gaussian(samples: &Array2<f64>) -> Result<GaussianFit, FidError> {
    let (n, d) = samples.dim();
    if d == 0 || n < 2 {
        return Err(FidError::InsufficientSamples {
            needed: 2,
            got: n,
            dim: d,
        });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(FidError::NonFinite);
    }
    let mean = DVector::from_fn(d, |j, _| samples.column(j).sum() / n as f64);
    let mut cov = DMatrix::zeros(d, d);
    for row in samples.rows() {
        let c = DVector::from_fn(d, |j, _| row[j] - mean[j]);
        cov += &c * c.transpose();
    }
    cov /= (n - 1) as f64;
    Ok(GaussianFit {
        mean,
        covariance: floor_eigenvalues(&cov, EIGEN_FLOOR)?,
    })
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn floor_eigenvalues(m: &DMatrix<f64>, floor: f64) -> Result<DMatrix<f64>, FidError> {
    let eig = SymmetricEigen::try_new(symmetrize(m), f64::EPSILON, 0).ok_or(FidError::MatrixSqrtNonConvergence)?;
    let vals = eig.eigenvalues.map(|v| v.max(floor));
    Ok(symmetrize(
        &(&eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()),
    ))
}

/// Principal square root of a symmetric PSD matrix (negative eigenvalues from
/// round-off are treated as zero).
pub fn sqrtm_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>, FidError> {
    let eig = SymmetricEigen::try_new(symmetrize(m), f64::EPSILON, 0).ok_or(FidError::MatrixSqrtNonConvergence)?;
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(symmetrize(
        &(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()),
    ))
}

/// Score plus whether a meaningfully negative raw value was clipped to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fid {
    pub value: f64,
    pub clipped: bool,
}

/// `‖μ₁ − μ₂‖² + Tr(Σ₁ + Σ₂ − 2(Σ₂^{1/2} Σ₁ Σ₂^{1/2})^{1/2})`.
pub fn frechet_distance(f1: &GaussianFit, f2: &GaussianFit) -> Result<f64, FidError> {
    Ok(frechet_distance_detailed(f1, f2)?.value)
}

pub fn frechet_distance_detailed(f1: &GaussianFit, f2: &GaussianFit) -> Result<Fid, FidError> {
    if f1.dim() != f2.dim() {
        return Err(FidError::DimensionMismatch(f1.dim(), f2.dim()));
    }
    let diff = &f1.mean - &f2.mean;
    let root2 = sqrtm_psd(&f2.covariance)?;
    let cross = sqrtm_psd(&(&root2 * &f1.covariance * &root2))?;
    let raw = diff.dot(&diff) + f1.covariance.trace() + f2.covariance.trace() - 2.0 * cross.trace();
    Ok(Fid {
        value: raw.max(0.0),
        clipped: raw < NEGATIVE_SLACK,
    })
}

/// FID between two sample matrices (rows are samples).
pub fn fid_from_samples(a: &Array2<f64>, b: &Array2<f64>) -> Result<Fid, FidError> {
    frechet_distance_detailed(&fit_gaussian(a)?, &fit_gaussian(b)?)
}
