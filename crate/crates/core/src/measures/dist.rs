use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::MeasureError;

/// Tolerance on the total mass of a [`DiscreteDist`].
pub const DISCRETE_MASS_TOL: f64 = 1e-12;
/// Tolerance on the total mass of a histogram density.
pub const HISTOGRAM_MASS_TOL: f64 = 1e-10;
/// Gaussian supports are truncated at this many standard deviations.
pub const GAUSSIAN_TRUNCATION_SIGMAS: f64 = 12.0;

/// Positive real order parameter (α of the Rényi family, k of Pearson-Vajda).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Order(pub(crate) f64);

impl Order {
    pub fn new(value: f64) -> Result<Self, MeasureError> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(MeasureError::OrderOutOfRange {
                order: value,
                reason: "order must be a finite positive real",
            })
        }
    }

    /// An order valid for Rényi measures: positive and not within 1e-9 of 1.
    pub fn renyi(value: f64) -> Result<Self, MeasureError> {
        let order = Self::new(value)?;
        order.check_renyi()?;
        Ok(order)
    }

    /// An order valid for the Pearson-Vajda divergence (k >= 1).
    pub fn vajda(value: f64) -> Result<Self, MeasureError> {
        let order = Self::new(value)?;
        order.check_vajda()?;
        Ok(order)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub(crate) fn check_renyi(self) -> Result<f64, MeasureError> {
        if (self.0 - 1.0).abs() > 1e-9 {
            Ok(self.0)
        } else {
            Err(MeasureError::OrderOutOfRange {
                order: self.0,
                reason: "Rényi order must differ from 1 by more than 1e-9",
            })
        }
    }

    pub(crate) fn check_vajda(self) -> Result<f64, MeasureError> {
        if self.0 >= 1.0 {
            Ok(self.0)
        } else {
            Err(MeasureError::OrderOutOfRange {
                order: self.0,
                reason: "Pearson-Vajda order must be >= 1",
            })
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Probability vector over an implicitly indexed finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    probs: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(probs: Vec<f64>) -> Result<Self, MeasureError> {
        if probs.is_empty() {
            return Err(MeasureError::InvalidDistribution(
                "discrete distribution needs at least one entry".into(),
            ));
        }
        if let Some(bad) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(MeasureError::InvalidDistribution(format!(
                "probabilities must be finite and non-negative, got {bad}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > DISCRETE_MASS_TOL {
            return Err(MeasureError::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self, MeasureError> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(MeasureError::InvalidDistribution(
                "weights must have positive finite total".into(),
            ));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Pointwise-evaluable density callback.
pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum DensityKind {
    Gaussian {
        mean: f64,
        variance: f64,
    },
    GaussianDiag {
        mean: Vec<f64>,
        variance: Vec<f64>,
    },
    Histogram {
        edges: Vec<f64>,
        masses: Vec<f64>,
    },
    Evaluable {
        pdf: DensityFn,
        lo: f64,
        hi: f64,
        breaks: Vec<f64>,
    },
}

/// A continuous density on the real line (or a diagonal Gaussian on R^d).
#[derive(Clone)]
pub struct ContinuousDensity {
    kind: DensityKind,
}

impl fmt::Debug for ContinuousDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DensityKind::Gaussian { mean, variance } => {
                write!(f, "Gaussian(mean={mean}, variance={variance})")
            }
            DensityKind::GaussianDiag { mean, variance } => {
                write!(f, "GaussianDiag(mean={mean:?}, variance={variance:?})")
            }
            DensityKind::Histogram { edges, masses } => {
                write!(f, "Histogram(edges={edges:?}, masses={masses:?})")
            }
            DensityKind::Evaluable { lo, hi, .. } => write!(f, "Evaluable(support=[{lo}, {hi}])"),
        }
    }
}

const EVALUABLE_SPOT_CHECKS: usize = 257;

impl ContinuousDensity {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self, MeasureError> {
        if !(mean.is_finite() && variance.is_finite() && variance > 0.0) {
            return Err(MeasureError::InvalidDistribution(format!(
                "Gaussian needs finite mean and positive variance, got N({mean}, {variance})"
            )));
        }
        Ok(Self {
            kind: DensityKind::Gaussian { mean, variance },
        })
    }

    pub fn gaussian_diag(mean: Vec<f64>, variance: Vec<f64>) -> Result<Self, MeasureError> {
        if mean.is_empty() || mean.len() != variance.len() {
            return Err(MeasureError::InvalidDistribution(
                "diagonal Gaussian needs equally sized, non-empty mean and variance".into(),
            ));
        }
        if mean.iter().any(|m| !m.is_finite()) || variance.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(MeasureError::InvalidDistribution(
                "diagonal Gaussian needs finite means and positive variances".into(),
            ));
        }
        Ok(Self {
            kind: DensityKind::GaussianDiag { mean, variance },
        })
    }

    /// Piecewise-constant density: bin `i` spans `[edges[i], edges[i+1])` and
    /// carries probability `masses[i]`.
    pub fn histogram(edges: Vec<f64>, masses: Vec<f64>) -> Result<Self, MeasureError> {
        if masses.is_empty() || edges.len() != masses.len() + 1 {
            return Err(MeasureError::InvalidDistribution(
                "histogram needs n >= 1 masses and n + 1 edges".into(),
            ));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MeasureError::InvalidDistribution(
                "histogram edges must be finite and strictly increasing".into(),
            ));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(MeasureError::InvalidDistribution(
                "histogram masses must be non-negative".into(),
            ));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > HISTOGRAM_MASS_TOL {
            return Err(MeasureError::InvalidDistribution(format!(
                "histogram masses sum to {total}, not 1"
            )));
        }
        Ok(Self {
            kind: DensityKind::Histogram { edges, masses },
        })
    }

    /// Density given by a callback on `[lo, hi]`, zero outside. The callback
    /// need not integrate to one (non-negative measures are accepted), but it
    /// must be non-negative; this is spot-checked on a uniform grid here and
    /// at every quadrature node during integration.
    pub fn evaluable<F>(pdf: F, lo: f64, hi: f64) -> Result<Self, MeasureError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::evaluable_with_breaks(pdf, lo, hi, Vec::new())
    }

    /// Like [`ContinuousDensity::evaluable`], with interior points where the
    /// callback is known to be non-smooth.
    pub fn evaluable_with_breaks<F>(pdf: F, lo: f64, hi: f64, mut breaks: Vec<f64>) -> Result<Self, MeasureError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(MeasureError::InvalidDistribution(format!(
                "invalid support [{lo}, {hi}]"
            )));
        }
        for i in 0..EVALUABLE_SPOT_CHECKS {
            let x = lo + (hi - lo) * i as f64 / (EVALUABLE_SPOT_CHECKS - 1) as f64;
            let v = pdf(x);
            if !(v.is_finite() && v >= 0.0) {
                return Err(MeasureError::NegativeFunctionValue { x, value: v });
            }
        }
        breaks.retain(|b| *b > lo && *b < hi);
        breaks.sort_by(f64::total_cmp);
        Ok(Self {
            kind: DensityKind::Evaluable {
                pdf: Arc::new(pdf),
                lo,
                hi,
                breaks,
            },
        })
    }

    /// Number of coordinates the density lives on.
    pub fn dim(&self) -> usize {
        match &self.kind {
            DensityKind::GaussianDiag { mean, .. } => mean.len(),
            _ => 1,
        }
    }

    /// Marginal means and variances when the density is a (diagonal) Gaussian.
    pub fn gaussian_params(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.kind {
            DensityKind::Gaussian { mean, variance } => Some((vec![*mean], vec![*variance])),
            DensityKind::GaussianDiag { mean, variance } => Some((mean.clone(), variance.clone())),
            _ => None,
        }
    }

    pub(crate) fn is_diag(&self) -> bool {
        matches!(self.kind, DensityKind::GaussianDiag { .. })
    }

    /// The 1-D marginals of a diagonal Gaussian (or the density itself).
    pub(crate) fn marginals(&self) -> Vec<ContinuousDensity> {
        match &self.kind {
            DensityKind::GaussianDiag { mean, variance } => mean
                .iter()
                .zip(variance)
                .map(|(&m, &v)| ContinuousDensity {
                    kind: DensityKind::Gaussian { mean: m, variance: v },
                })
                .collect(),
            _ => vec![self.clone()],
        }
    }

    /// Support interval (Gaussians truncated at ±12σ).
    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            DensityKind::Gaussian { mean, variance } => {
                let w = GAUSSIAN_TRUNCATION_SIGMAS * variance.sqrt();
                (mean - w, mean + w)
            }
            DensityKind::GaussianDiag { mean, variance } => {
                let w = GAUSSIAN_TRUNCATION_SIGMAS * variance[0].sqrt();
                (mean[0] - w, mean[0] + w)
            }
            DensityKind::Histogram { edges, .. } => (edges[0], edges[edges.len() - 1]),
            DensityKind::Evaluable { lo, hi, .. } => (*lo, *hi),
        }
    }

    /// Points inside the support where panels should be split.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            DensityKind::Gaussian { mean, variance } => gaussian_breaks(*mean, variance.sqrt()),
            DensityKind::GaussianDiag { mean, variance } => gaussian_breaks(mean[0], variance[0].sqrt()),
            DensityKind::Histogram { edges, .. } => edges.clone(),
            DensityKind::Evaluable { lo, hi, breaks, .. } => {
                let mut v = Vec::with_capacity(breaks.len() + 2);
                v.push(*lo);
                v.extend_from_slice(breaks);
                v.push(*hi);
                v
            }
        }
    }

    /// Density value at `x` (1-D kinds; the first marginal for diagonal Gaussians).
    pub fn pdf(&self, x: f64) -> f64 {
        match &self.kind {
            DensityKind::Evaluable { pdf, lo, hi, .. } => {
                if x < *lo || x > *hi {
                    0.0
                } else {
                    pdf(x)
                }
            }
            _ => self.ln_pdf(x).exp(),
        }
    }

    /// Natural log of the density at `x`; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        match &self.kind {
            DensityKind::Gaussian { mean, variance } => gaussian_ln_pdf(x, *mean, *variance),
            DensityKind::GaussianDiag { mean, variance } => gaussian_ln_pdf(x, mean[0], variance[0]),
            DensityKind::Histogram { edges, masses } => {
                let n = masses.len();
                if x < edges[0] || x > edges[n] {
                    return f64::NEG_INFINITY;
                }
                // Bins are half-open except the last, which includes its right edge.
                let idx = edges.partition_point(|e| *e <= x).saturating_sub(1).min(n - 1);
                (masses[idx] / (edges[idx + 1] - edges[idx])).ln()
            }
            DensityKind::Evaluable { .. } => self.pdf(x).ln(),
        }
    }
}

pub(crate) fn gaussian_breaks(mean: f64, sd: f64) -> Vec<f64> {
    [-12.0, -8.0, -5.0, -3.0, -1.5, 0.0, 1.5, 3.0, 5.0, 8.0, 12.0]
        .iter()
        .map(|k| mean + k * sd)
        .collect()
}

fn gaussian_ln_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * PI * variance).ln() - d * d / (2.0 * variance)
}

/// Argument to every information measure.
#[derive(Debug, Clone)]
pub enum Distribution {
    Discrete(DiscreteDist),
    Continuous(ContinuousDensity),
}

impl From<DiscreteDist> for Distribution {
    fn from(d: DiscreteDist) -> Self {
        Distribution::Discrete(d)
    }
}

impl From<ContinuousDensity> for Distribution {
    fn from(d: ContinuousDensity) -> Self {
        Distribution::Continuous(d)
    }
}

impl Distribution {
    /// Convenience constructor for a discrete distribution.
    pub fn discrete(probs: Vec<f64>) -> Result<Self, MeasureError> {
        DiscreteDist::new(probs).map(Self::Discrete)
    }

    /// Convenience constructor for a 1-D Gaussian.
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self, MeasureError> {
        ContinuousDensity::gaussian(mean, variance).map(Self::Continuous)
    }
}
