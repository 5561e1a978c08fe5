//! Adaptive Gauss-Kronrod (7/15) panel quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd Kronrod abscissae XGK[1], XGK[3], XGK[5] and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("invalid quadrature settings: {0}")]
    InvalidSettings(&'static str),
    #[error("integrand is not finite at x = {x} (value {value})")]
    NonFinite { x: f64, value: f64 },
    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate}, error bound {error})"
    )]
    NonConvergence {
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },
}

/// Adaptive panel subdivision driven by the Gauss-Kronrod error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// One 15-point Kronrod panel with its embedded 7-point Gauss error estimate.
fn kronrod_panel<F>(f: &F, a: f64, b: f64) -> Result<Panel, QuadratureError>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64, QuadratureError> {
        let value = f(x);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(QuadratureError::NonFinite { x, value })
        }
    };

    let fc = eval(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = fc.abs() * WGK[7];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    let error = rescale_error((kronrod - gauss) * half, res_abs * scale, res_asc * scale);
    Ok(Panel {
        a,
        b,
        value: kronrod * half,
        error,
    })
}

impl Quadrature {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self, QuadratureError> {
        let q = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(QuadratureError::InvalidSettings("tolerances must be positive"));
        }
        if self.max_subdivisions < 1 {
            return Err(QuadratureError::InvalidSettings("max_subdivisions must be >= 1"));
        }
        Ok(())
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F>(&self, f: F, a: f64, b: f64) -> Result<f64, QuadratureError>
    where
        F: Fn(f64) -> f64,
    {
        self.integrate_panels(&f, &[a, b])
    }

    /// Integrates `f` over `[breaks[0], breaks[last]]`, starting from one panel
    /// per consecutive pair of break points. Breaks must be sorted; duplicate
    /// points are dropped.
    pub fn integrate_panels<F>(&self, f: &F, breaks: &[f64]) -> Result<f64, QuadratureError>
    where
        F: Fn(f64) -> f64 + ?Sized,
    {
        self.validate()?;
        let mut heap = BinaryHeap::new();
        let mut total = 0.0;
        let mut total_err = 0.0;
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if !(b > a) {
                continue;
            }
            let panel = kronrod_panel(f, a, b)?;
            total += panel.value;
            total_err += panel.error;
            heap.push(panel);
        }
        let mut subdivisions = heap.len();

        loop {
            let tol = self.abs_tol.max(self.rel_tol * total.abs());
            if total_err <= tol {
                return Ok(total);
            }
            if subdivisions >= self.max_subdivisions {
                return Err(QuadratureError::NonConvergence {
                    subdivisions,
                    estimate: total,
                    error: total_err,
                });
            }
            let Some(worst) = heap.pop() else {
                return Ok(total);
            };
            let mid = 0.5 * (worst.a + worst.b);
            if !(mid > worst.a && mid < worst.b) {
                // Panel can no longer be split in floating point.
                return Err(QuadratureError::NonConvergence {
                    subdivisions,
                    estimate: total,
                    error: total_err,
                });
            }
            let left = kronrod_panel(f, worst.a, mid)?;
            let right = kronrod_panel(f, mid, worst.b)?;
            total += left.value + right.value - worst.value;
            total_err += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);
            subdivisions += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = Quadrature::default();
        let v = q.integrate(|x| 3.0 * x * x - 2.0 * x + 1.0, -1.0, 2.0).unwrap();
        // x^3 - x^2 + x on [-1, 2] = (8 - 4 + 2) - (-1 - 1 - 1) = 9
        assert!((v - 9.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_mass_over_twelve_sigma() {
        let q = Quadrature::default();
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let v = q.integrate(pdf, -12.0, 12.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn kink_is_resolved_by_subdivision() {
        let q = Quadrature::default();
        let v = q.integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0).unwrap();
        let exact = 0.5 * 0.3 * 0.3 + 0.5 * 0.7 * 0.7;
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn break_points_split_piecewise_constants() {
        let q = Quadrature::default();
        let f = |x: f64| if x < 0.25 { 2.0 } else { 0.5 };
        let v = q.integrate_panels(&f, &[0.0, 0.25, 1.0]).unwrap();
        assert!((v - (0.5 + 0.375)).abs() < 1e-14);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let q = Quadrature::default();
        let err = q.integrate(|x: f64| 1.0 / x, 0.0, 1.0).unwrap_err();
        assert!(
            matches!(err, QuadratureError::NonFinite { .. }) || matches!(err, QuadratureError::NonConvergence { .. })
        );
    }

    #[test]
    fn subdivision_budget_is_enforced() {
        let q = Quadrature::new(1e-14, 1e-14, 1).unwrap();
        let err = q.integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0).unwrap_err();
        assert!(matches!(err, QuadratureError::NonConvergence { .. }));
    }

    #[test]
    fn rejects_bad_settings() {
        assert!(Quadrature::new(0.0, 1e-8, 10).is_err());
        assert!(Quadrature::new(1e-10, 1e-8, 0).is_err());
    }
}
