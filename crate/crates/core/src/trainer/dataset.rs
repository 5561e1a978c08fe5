use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::TrainError;

/// Spacing between neighbouring grid-mixture modes when none is given.
pub const DEFAULT_GRID_SPACING: f64 = 2.0;

fn default_spacing() -> f64 {
    DEFAULT_GRID_SPACING
}

/// Synthetic real-data distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SyntheticDataset {
    /// `n_modes` isotropic Gaussians evenly spaced on a circle.
    GaussianMixtureRing { n_modes: usize, radius: f64, mode_std: f64 },
    /// `rows × cols` isotropic Gaussians on a centred square lattice.
    GridMixture {
        rows: usize,
        cols: usize,
        mode_std: f64,
        #[serde(default = "default_spacing")]
        spacing: f64,
    },
    /// One Gaussian with full covariance `cov` (row-major, d × d).
    SingleGaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
}

/// Result of [`mode_coverage`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub modes_hit: usize,
    pub high_quality_fraction: f64,
}

/// A mode counts as hit once this share of samples lies within
/// [`COVERAGE_RADIUS_STDS`] standard deviations of it.
pub const MODE_HIT_FRACTION: f64 = 0.01;
pub const COVERAGE_RADIUS_STDS: f64 = 3.0;

impl SyntheticDataset {
    pub fn ring(n_modes: usize, radius: f64, mode_std: f64) -> Self {
        SyntheticDataset::GaussianMixtureRing {
            n_modes,
            radius,
            mode_std,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SyntheticDataset::SingleGaussian { mean, .. } => mean.len(),
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::ConfigInvalid(format!("dataset: {msg}")));
        match self {
            SyntheticDataset::GaussianMixtureRing {
                n_modes,
                radius,
                mode_std,
            } => {
                if *n_modes < 1 {
                    return bad("n_modes must be >= 1".into());
                }
                if !(*mode_std > 0.0 && mode_std.is_finite()) {
                    return bad(format!("mode_std must be > 0, got {mode_std}"));
                }
                if !(radius.is_finite() && (*radius > 0.0 || *n_modes == 1)) {
                    return bad(format!("radius must be > 0 for distinct modes, got {radius}"));
                }
            }
            SyntheticDataset::GridMixture {
                rows,
                cols,
                mode_std,
                spacing,
            } => {
                if *rows < 1 || *cols < 1 {
                    return bad("rows and cols must be >= 1".into());
                }
                if !(*mode_std > 0.0 && mode_std.is_finite()) {
                    return bad(format!("mode_std must be > 0, got {mode_std}"));
                }
                if !(*spacing > 0.0 && spacing.is_finite()) {
                    return bad(format!("spacing must be > 0, got {spacing}"));
                }
            }
            SyntheticDataset::SingleGaussian { mean, cov } => {
                if mean.is_empty() || mean.iter().any(|m| !m.is_finite()) {
                    return bad("mean must be a non-empty finite vector".into());
                }
                if cov.len() != mean.len() || cov.iter().any(|r| r.len() != mean.len()) {
                    return bad("cov must be a square matrix matching mean".into());
                }
                self.cholesky()?;
            }
        }
        Ok(())
    }

    fn cholesky(&self) -> Result<DMatrix<f64>, TrainError> {
        let SyntheticDataset::SingleGaussian { mean, cov } = self else {
            unreachable!("only called for single-gaussian")
        };
        let d = mean.len();
        let m = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
        if (&m - m.transpose()).norm() > 1e-12 {
            return Err(TrainError::ConfigInvalid("dataset: cov must be symmetric".into()));
        }
        Ok(m.cholesky()
            .ok_or_else(|| TrainError::ConfigInvalid("dataset: cov must be positive definite".into()))?
            .l())
    }

    /// Mode centres and their common standard deviation (mixtures only).
    pub fn modes(&self) -> Option<(Vec<[f64; 2]>, f64)> {
        match self {
            SyntheticDataset::GaussianMixtureRing {
                n_modes,
                radius,
                mode_std,
            } => Some((
                (0..*n_modes)
                    .map(|i| {
                        let t = TAU * i as f64 / *n_modes as f64;
                        [radius * t.cos(), radius * t.sin()]
                    })
                    .collect(),
                *mode_std,
            )),
            SyntheticDataset::GridMixture {
                rows,
                cols,
                mode_std,
                spacing,
            } => {
                let (r0, c0) = ((*rows as f64 - 1.0) / 2.0, (*cols as f64 - 1.0) / 2.0);
                let mut centres = Vec::with_capacity(rows * cols);
                for r in 0..*rows {
                    for c in 0..*cols {
                        centres.push([(c as f64 - c0) * spacing, (r as f64 - r0) * spacing]);
                    }
                }
                Some((centres, *mode_std))
            }
            SyntheticDataset::SingleGaussian { .. } => None,
        }
    }

    /// `n` independent draws, one per row.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Array2<f64>, TrainError> {
        let d = self.dim();
        let mut out = Array2::zeros((n, d));
        match self {
            SyntheticDataset::SingleGaussian { mean, .. } => {
                let l = self.cholesky()?;
                for mut row in out.rows_mut() {
                    let z = DVector::from_fn(d, |_, _| StandardNormal.sample(rng));
                    let x = &l * z;
                    for j in 0..d {
                        row[j] = mean[j] + x[j];
                    }
                }
            }
            _ => {
                let (centres, std) = self.modes().expect("mixture");
                for mut row in out.rows_mut() {
                    let c = centres[rng.random_range(0..centres.len())];
                    let e0: f64 = StandardNormal.sample(rng);
                    let e1: f64 = StandardNormal.sample(rng);
                    row[0] = c[0] + std * e0;
                    row[1] = c[1] + std * e1;
                }
            }
        }
        Ok(out)
    }
}

/// Assigns each sample to its nearest mode. A mode is hit when at least 1% of
/// all samples fall within 3·mode_std of it; the high-quality fraction is the
/// share of samples within 3·mode_std of any mode.
pub fn mode_coverage(samples: &Array2<f64>, dataset: &SyntheticDataset) -> Result<Coverage, TrainError> {
    let (centres, std) = dataset.modes().ok_or(TrainError::WrongDatasetKind)?;
    if samples.ncols() != 2 {
        return Err(TrainError::ConfigInvalid(format!(
            "mode coverage needs 2-D samples, got {} columns",
            samples.ncols()
        )));
    }
    let n = samples.nrows();
    if n == 0 {
        return Ok(Coverage {
            modes_hit: 0,
            high_quality_fraction: 0.0,
        });
    }
    let limit = (COVERAGE_RADIUS_STDS * std).powi(2);
    let mut near = vec![0usize; centres.len()];
    let mut good = 0usize;
    for row in samples.rows() {
        let (best, dist2) = centres
            .iter()
            .enumerate()
            .map(|(i, c)| (i, (row[0] - c[0]).powi(2) + (row[1] - c[1]).powi(2)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one mode");
        if dist2 <= limit {
            near[best] += 1;
            good += 1;
        }
    }
    let threshold = MODE_HIT_FRACTION * n as f64;
    Ok(Coverage {
        modes_hit: near.iter().filter(|&&c| c as f64 >= threshold).count(),
        high_quality_fraction: good as f64 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn true_mixture_samples_hit_every_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for ds in [
            SyntheticDataset::ring(8, 2.0, 0.02),
            SyntheticDataset::GridMixture {
                rows: 5,
                cols: 5,
                mode_std: 0.05,
                spacing: 2.0,
            },
        ] {
            let s = ds.sample(20_000, &mut rng).unwrap();
            let c = mode_coverage(&s, &ds).unwrap();
            assert_eq!(c.modes_hit, ds.modes().unwrap().0.len());
            // 3σ in 2-D holds 1 − e^{−4.5} ≈ 0.9889 of each mode's mass.
            assert!(c.high_quality_fraction > 0.985, "{c:?}");
        }
    }

    #[test]
    fn collapsed_and_far_samples() {
        let ds = SyntheticDataset::ring(8, 2.0, 0.02);
        let collapsed = Array2::from_shape_fn((500, 2), |(_, j)| [2.0, 0.0][j]);
        let c = mode_coverage(&collapsed, &ds).unwrap();
        assert_eq!((c.modes_hit, c.high_quality_fraction), (1, 1.0));

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let far = Array2::from_shape_simple_fn((1000, 2), || rng.random_range(10.0..20.0));
        let c = mode_coverage(&far, &ds).unwrap();
        assert_eq!((c.modes_hit, c.high_quality_fraction), (0, 0.0));
    }

    #[test]
    fn single_gaussian_has_no_modes() {
        let ds = SyntheticDataset::SingleGaussian {
            mean: vec![0.0, 0.0],
            cov: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        };
        let s = Array2::zeros((4, 2));
        assert!(matches!(mode_coverage(&s, &ds), Err(TrainError::WrongDatasetKind)));
    }

    #[test]
    fn single_gaussian_sampling_matches_covariance() {
        let ds = SyntheticDataset::SingleGaussian {
            mean: vec![1.0, -1.0],
            cov: vec![vec![2.0, 0.6], vec![0.6, 0.5]],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = ds.sample(100_000, &mut rng).unwrap();
        let fit = crate::fid::fit_gaussian(&s).unwrap();
        assert!((fit.mean[0] - 1.0).abs() < 0.02 && (fit.mean[1] + 1.0).abs() < 0.02);
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 0.5]);
        assert!((fit.covariance - expected).norm() < 0.05);
    }

    #[test]
    fn invalid_datasets_are_rejected() {
        assert!(SyntheticDataset::ring(8, 2.0, 0.0).validate().is_err());
        assert!(SyntheticDataset::ring(8, 0.0, 0.1).validate().is_err());
        assert!(SyntheticDataset::ring(1, 0.0, 0.1).validate().is_ok());
        let not_pd = SyntheticDataset::SingleGaussian {
            mean: vec![0.0, 0.0],
            cov: vec![vec![1.0, 2.0], vec![2.0, 1.0]],
        };
        assert!(not_pd.validate().is_err());
    }
}
