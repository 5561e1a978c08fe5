//! Information measures: KL, Shannon and Rényi cross-entropies, Rényi,
//! Jensen-Shannon, Jensen-Rényi and Pearson-Vajda divergences.
//!
//! Discrete inputs are evaluated by exact summation; continuous inputs by
//! adaptive quadrature over the relevant support. Indices (or points) where
//! both arguments vanish are skipped. All logarithms are natural.
//!
//! Integrals of the form `∫ p·exp(t·e)` with small `t = α − 1` are evaluated
//! as `∫ p + ∫ p·expm1(t·e)` so that orders close to 1 keep their precision.

use std::cell::RefCell;
use std::f64::consts::LN_2;

use thiserror::Error;

pub mod closed_form;
mod dist;
pub mod quadrature;

pub use dist::{
    ContinuousDensity, DensityFn, DiscreteDist, Distribution, Order, DISCRETE_MASS_TOL, GAUSSIAN_TRUNCATION_SIGMAS,
    HISTOGRAM_MASS_TOL,
};
pub use quadrature::{Quadrature, QuadratureError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("support mismatch: {0}")]
    SupportMismatch(String),
    #[error("absolute continuity violated: p > 0 where q = 0 (at {at})")]
    AbsoluteContinuityViolation { at: String },
    #[error("order {order} out of range: {reason}")]
    OrderOutOfRange { order: f64, reason: &'static str },
    #[error("division by zero: p = 0 where q > 0 (at {at})")]
    DivisionByZeroSupport { at: String },
    #[error("integral diverges: {0}")]
    IntegralDiverges(String),
    #[error("logarithm of a zero integral")]
    LogOfZero,
    #[error("function value {value} at {x} is negative or not finite")]
    NegativeFunctionValue { x: f64, value: f64 },
    #[error("quadrature failed: {0}")]
    QuadratureNonConvergence(QuadratureError),
    #[error("unsupported input: {0}")]
    Unsupported(String),
}

impl From<QuadratureError> for MeasureError {
    fn from(e: QuadratureError) -> Self {
        MeasureError::QuadratureNonConvergence(e)
    }
}

pub type Result<T> = std::result::Result<T, MeasureError>;

/// Non-negative weighting function standing in for `q` in the Rényi
/// cross-entropy functional; it need not be normalized.
#[derive(Clone, Copy)]
pub enum Weighting<'a> {
    /// One value per index of a discrete `p`.
    Values(&'a [f64]),
    /// Pointwise function on the real line.
    Function(&'a (dyn Fn(f64) -> f64 + Sync)),
}

/// Where the measure's integrand is evaluated.
enum Domain {
    Indices(usize),
    Panels(Vec<f64>),
}

#[derive(Clone, Copy)]
enum Pt {
    Index(usize),
    At(f64),
}

impl std::fmt::Display for Pt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Pt::Index(i) => write!(f, "index {i}"),
            Pt::At(x) => write!(f, "x = {x}"),
        }
    }
}

enum Pair<'a> {
    Discrete(&'a [f64], &'a [f64]),
    Continuous(&'a ContinuousDensity, &'a ContinuousDensity),
}

fn pair<'a>(p: &'a Distribution, q: &'a Distribution) -> Result<Pair<'a>> {
    match (p, q) {
        (Distribution::Discrete(p), Distribution::Discrete(q)) => {
            if p.len() != q.len() {
                return Err(MeasureError::SupportMismatch(format!(
                    "discrete supports of size {} and {}",
                    p.len(),
                    q.len()
                )));
            }
            Ok(Pair::Discrete(p.probs(), q.probs()))
        }
        (Distribution::Continuous(p), Distribution::Continuous(q)) => {
            if p.dim() != q.dim() {
                return Err(MeasureError::SupportMismatch(format!(
                    "densities on R^{} and R^{}",
                    p.dim(),
                    q.dim()
                )));
            }
            Ok(Pair::Continuous(p, q))
        }
        _ => Err(MeasureError::SupportMismatch(
            "cannot compare a discrete distribution with a density".into(),
        )),
    }
}

fn ln_density(d: &ContinuousDensity, x: f64) -> Result<f64> {
    let l = d.ln_pdf(x);
    if l.is_nan() {
        return Err(MeasureError::NegativeFunctionValue { x, value: d.pdf(x) });
    }
    if l == f64::INFINITY {
        return Err(MeasureError::IntegralDiverges(format!(
            "density is infinite at x = {x}"
        )));
    }
    Ok(l)
}

/// `ln(e^a + e^b)` without overflow.
fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn panels(domain: (f64, f64), densities: &[&ContinuousDensity]) -> Vec<f64> {
    let (lo, hi) = domain;
    let mut breaks = vec![lo, hi];
    for d in densities {
        breaks.extend(d.breakpoints().into_iter().filter(|b| *b > lo && *b < hi));
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

fn union(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0.min(b.0), a.1.max(b.1))
}

/// Panels for an integrand proportional to `p^wp · q^wq` over `p`'s support.
///
/// Between two 1-D Gaussians that integrand is itself Gaussian-shaped and can
/// be much wider than either factor (think α·σ_q² + (1 − α)·σ_p² close to 0),
/// so the grid is stretched to cover its own ±12σ window.
fn tilted_panels(p: &ContinuousDensity, q: &ContinuousDensity, wp: f64, wq: f64) -> Result<Vec<f64>> {
    let mut domain = p.support();
    let mut extra = Vec::new();
    if let (Some((mp, vp)), Some((mq, vq))) = (p.gaussian_params(), q.gaussian_params()) {
        if mp.len() == 1 && mq.len() == 1 {
            let precision = wp / vp[0] + wq / vq[0];
            if !(precision > 0.0) {
                return Err(MeasureError::IntegralDiverges(
                    "Gaussian integrand has non-positive precision".into(),
                ));
            }
            let var = precision.recip();
            let mean = (wp * mp[0] / vp[0] + wq * mq[0] / vq[0]) * var;
            extra = dist::gaussian_breaks(mean, var.sqrt());
            domain = union(domain, (extra[0], extra[extra.len() - 1]));
        }
    }
    let mut breaks = panels(domain, &[p, q]);
    breaks.extend(extra);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    Ok(breaks)
}

/// Below this |α − 1| the `∫p + ∫p·expm1` split is used for log-moments.
const SPLIT_THRESHOLD: f64 = 0.25;

/// Measure evaluator with a configurable quadrature backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct Measures {
    pub quadrature: Quadrature,
}

impl Measures {
    pub fn new(quadrature: Quadrature) -> Self {
        Self { quadrature }
    }

    /// Sums (discrete) or integrates (continuous) a fallible integrand.
    fn reduce<F>(&self, domain: &Domain, f: F) -> Result<f64>
    where
        F: Fn(Pt) -> Result<f64>,
    {
        match domain {
            Domain::Indices(n) => {
                let mut total = 0.0;
                for i in 0..*n {
                    total += f(Pt::Index(i))?;
                }
                Ok(total)
            }
            Domain::Panels(breaks) => {
                let failure: RefCell<Option<MeasureError>> = RefCell::new(None);
                let integrand = |x: f64| -> f64 {
                    if failure.borrow().is_some() {
                        return 0.0;
                    }
                    match f(Pt::At(x)) {
                        Ok(v) => v,
                        Err(e) => {
                            *failure.borrow_mut() = Some(e);
                            0.0
                        }
                    }
                };
                let result = self.quadrature.integrate_panels(&integrand, breaks);
                if let Some(e) = failure.into_inner() {
                    return Err(e);
                }
                match result {
                    Ok(v) => Ok(v),
                    Err(QuadratureError::NonFinite { x, .. }) => Err(MeasureError::IntegralDiverges(format!(
                        "integrand not finite at x = {x}"
                    ))),
                    Err(e) => Err(e.into()),
                }
            }
        }
    }

    /// `ln ∫ w·exp(t·e)` where `term` yields `(ln w, e)` and `None` means `w = 0`.
    fn ln_moment<F>(&self, domain: &Domain, t: f64, term: F) -> Result<f64>
    where
        F: Fn(Pt) -> Result<Option<(f64, f64)>>,
    {
        let scaled = |pt: Pt| -> Result<Option<(f64, f64)>> {
            match term(pt)? {
                None => Ok(None),
                Some((lw, e)) => {
                    let te = t * e;
                    if te == f64::INFINITY || te.is_nan() {
                        return Err(MeasureError::IntegralDiverges(format!("integrand unbounded at {pt}")));
                    }
                    Ok(Some((lw, te)))
                }
            }
        };
        let value = if t.abs() < SPLIT_THRESHOLD {
            let mass = self.reduce(domain, |pt| Ok(scaled(pt)?.map_or(0.0, |(lw, _)| lw.exp())))?;
            let excess = self.reduce(domain, |pt| {
                Ok(scaled(pt)?.map_or(0.0, |(lw, te)| {
                    if te < 1.0 {
                        lw.exp() * te.exp_m1()
                    } else {
                        (lw + te).exp() - lw.exp()
                    }
                }))
            })?;
            if !(mass > 0.0) {
                return Err(MeasureError::LogOfZero);
            }
            let ratio = excess / mass;
            if ratio <= -1.0 {
                return Err(MeasureError::LogOfZero);
            }
            mass.ln() + ratio.ln_1p()
        } else {
            let integral = self.reduce(domain, |pt| Ok(scaled(pt)?.map_or(0.0, |(lw, te)| (lw + te).exp())))?;
            if integral <= 0.0 {
                return Err(MeasureError::LogOfZero);
            }
            integral.ln()
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(MeasureError::IntegralDiverges(format!(
                "log-moment evaluated to {value}"
            )))
        }
    }

    /// KL(p ‖ q) = ∫ p log(p/q).
    pub fn kl_divergence(&self, p: &Distribution, q: &Distribution) -> Result<f64> {
        match pair(p, q)? {
            Pair::Discrete(p, q) => {
                let mut total = 0.0;
                for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
                    if pi == 0.0 {
                        continue;
                    }
                    if qi == 0.0 {
                        return Err(MeasureError::AbsoluteContinuityViolation {
                            at: format!("index {i}"),
                        });
                    }
                    total += pi * (pi / qi).ln();
                }
                Ok(total)
            }
            Pair::Continuous(p, q) if p.is_diag() || q.is_diag() => {
                self.factorized(p, q, |pi, qi| self.kl_divergence(&pi.into(), &qi.into()))
            }
            Pair::Continuous(p, q) => {
                let domain = Domain::Panels(panels(p.support(), &[p, q]));
                self.reduce(&domain, |pt| {
                    let Pt::At(x) = pt else { unreachable!() };
                    let lp = ln_density(p, x)?;
                    if lp == f64::NEG_INFINITY {
                        return Ok(0.0);
                    }
                    let lq = ln_density(q, x)?;
                    if lq == f64::NEG_INFINITY {
                        return Err(MeasureError::AbsoluteContinuityViolation { at: pt.to_string() });
                    }
                    Ok(lp.exp() * (lp - lq))
                })
            }
        }
    }

    /// h(p; q) = −∫ p log q.
    pub fn shannon_cross_entropy(&self, p: &Distribution, q: &Distribution) -> Result<f64> {
        match pair(p, q)? {
            Pair::Discrete(p, q) => {
                let mut total = 0.0;
                for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
                    if pi == 0.0 {
                        continue;
                    }
                    if qi == 0.0 {
                        return Err(MeasureError::AbsoluteContinuityViolation {
                            at: format!("index {i}"),
                        });
                    }
                    total -= pi * qi.ln();
                }
                Ok(total)
            }
            Pair::Continuous(p, q) if p.is_diag() || q.is_diag() => {
                self.factorized(p, q, |pi, qi| self.shannon_cross_entropy(&pi.into(), &qi.into()))
            }
            Pair::Continuous(p, q) => {
                let domain = Domain::Panels(panels(p.support(), &[p, q]));
                self.reduce(&domain, |pt| {
                    let Pt::At(x) = pt else { unreachable!() };
                    let lp = ln_density(p, x)?;
                    if lp == f64::NEG_INFINITY {
                        return Ok(0.0);
                    }
                    let lq = ln_density(q, x)?;
                    if lq == f64::NEG_INFINITY {
                        return Err(MeasureError::AbsoluteContinuityViolation { at: pt.to_string() });
                    }
                    Ok(-lp.exp() * lq)
                })
            }
        }
    }

    /// |χ|^k(p ‖ q) = ∫ |q − p|^k / p^{k−1}.
    ///
    /// Continuous arguments may be unnormalized non-negative measures
    /// (evaluable densities); see [`pearson_vajda_masses`] for the discrete
    /// counterpart.
    pub fn pearson_vajda(&self, p: &Distribution, q: &Distribution, k: Order) -> Result<f64> {
        let k = k.check_vajda()?;
        match pair(p, q)? {
            Pair::Discrete(p, q) => pearson_vajda_masses(p, q, Order(k)),
            Pair::Continuous(p, q) if p.is_diag() || q.is_diag() => Err(MeasureError::Unsupported(
                "Pearson-Vajda divergence does not factorize over diagonal Gaussians".into(),
            )),
            Pair::Continuous(p, q) => {
                let domain = Domain::Panels(panels(union(p.support(), q.support()), &[p, q]));
                self.reduce(&domain, |pt| {
                    let Pt::At(x) = pt else { unreachable!() };
                    let lp = ln_density(p, x)?;
                    let lq = ln_density(q, x)?;
                    if lp == f64::NEG_INFINITY {
                        if lq == f64::NEG_INFINITY {
                            return Ok(0.0);
                        }
                        if k == 1.0 {
                            return Ok(lq.exp());
                        }
                        return Err(MeasureError::DivisionByZeroSupport { at: pt.to_string() });
                    }
                    let ratio = (lq - lp).exp();
                    Ok(lp.exp() * (ratio - 1.0).abs().powf(k))
                })
            }
        }
    }

    /// D_α(p ‖ q) = (1/(α−1)) log ∫ p^α q^{1−α}.
    pub fn renyi_divergence(&self, p: &Distribution, q: &Distribution, alpha: Order) -> Result<f64> {
        let a = alpha.check_renyi()?;
        match pair(p, q)? {
            Pair::Discrete(pv, qv) => {
                let ln = self.ln_moment(&Domain::Indices(pv.len()), a - 1.0, |pt| {
                    let Pt::Index(i) = pt else { unreachable!() };
                    if pv[i] == 0.0 {
                        return Ok(None);
                    }
                    Ok(Some((pv[i].ln(), pv[i].ln() - qv[i].ln())))
                })?;
                Ok(ln / (a - 1.0))
            }
            Pair::Continuous(p, q) => {
                if let (Some((_, vp)), Some((_, vq))) = (p.gaussian_params(), q.gaussian_params()) {
                    if let Some(j) = vp.iter().zip(&vq).position(|(vp, vq)| a * vq + (1.0 - a) * vp <= 0.0) {
                        return Err(MeasureError::IntegralDiverges(format!(
                            "α·σ_q² + (1 − α)·σ_p² <= 0 in coordinate {j}"
                        )));
                    }
                }
                if p.is_diag() || q.is_diag() {
                    return self.factorized(p, q, |pi, qi| self.renyi_divergence(&pi.into(), &qi.into(), alpha));
                }
                let domain = Domain::Panels(tilted_panels(p, q, a, 1.0 - a)?);
                let ln = self.ln_moment(&domain, a - 1.0, |pt| {
                    let Pt::At(x) = pt else { unreachable!() };
                    let lp = ln_density(p, x)?;
                    if lp == f64::NEG_INFINITY {
                        return Ok(None);
                    }
                    let lq = ln_density(q, x)?;
                    Ok(Some((lp, lp - lq)))
                })?;
                Ok(ln / (a - 1.0))
            }
        }
    }

    /// h_α(p; q) = (1/(1−α)) log ∫ p q^{α−1}.
    pub fn renyi_cross_entropy(&self, p: &Distribution, q: &Distribution, alpha: Order) -> Result<f64> {
        let a = alpha.check_renyi()?;
        match pair(p, q)? {
            Pair::Discrete(_, qv) => self.renyi_cross_entropy_functional(p, Weighting::Values(qv), alpha),
            Pair::Continuous(pc, qc) if pc.is_diag() || qc.is_diag() => {
                self.factorized(pc, qc, |pi, qi| self.renyi_cross_entropy(&pi.into(), &qi.into(), alpha))
            }
            Pair::Continuous(pc, qc) => {
                let domain = Domain::Panels(tilted_panels(pc, qc, 1.0, a - 1.0)?);
                let ln = self.ln_moment(&domain, a - 1.0, |pt| {
                    let Pt::At(x) = pt else { unreachable!() };
                    let lp = ln_density(pc, x)?;
                    if lp == f64::NEG_INFINITY {
                        return Ok(None);
                    }
                    Ok(Some((lp, ln_density(qc, x)?)))
                })?;
                Ok(ln / (1.0 - a))
            }
        }
    }

    /// H_α(p; q) for a non-negative, not necessarily normalized `q`.
    pub fn renyi_cross_entropy_functional(&self, p: &Distribution, q: Weighting<'_>, alpha: Order) -> Result<f64> {
        let a = alpha.check_renyi()?;
        let ln_weight = |x: f64, value: f64| -> Result<f64> {
            if !(value.is_finite() && value >= 0.0) {
                return Err(MeasureError::NegativeFunctionValue { x, value });
            }
            Ok(value.ln())
        };
        let ln =
            match (p, q) {
                (Distribution::Discrete(pd), Weighting::Values(qv)) => {
                    let pv = pd.probs();
                    if pv.len() != qv.len() {
                        return Err(MeasureError::SupportMismatch(format!(
                            "{} probabilities against {} function values",
                            pv.len(),
                            qv.len()
                        )));
                    }
                    self.ln_moment(&Domain::Indices(pv.len()), a - 1.0, |pt| {
                        let Pt::Index(i) = pt else { unreachable!() };
                        if pv[i] == 0.0 {
                            return Ok(None);
                        }
                        Ok(Some((pv[i].ln(), ln_weight(i as f64, qv[i])?)))
                    })?
                }
                (Distribution::Continuous(pc), Weighting::Function(qf)) if !pc.is_diag() => {
                    let domain = Domain::Panels(panels(pc.support(), &[pc]));
                    self.ln_moment(&domain, a - 1.0, |pt| {
                        let Pt::At(x) = pt else { unreachable!() };
                        let lp = ln_density(pc, x)?;
                        if lp == f64::NEG_INFINITY {
                            return Ok(None);
                        }
                        Ok(Some((lp, ln_weight(x, qf(x))?)))
                    })?
                }
                _ => return Err(MeasureError::SupportMismatch(
                    "weighting kind must match the distribution kind (values for discrete, function for 1-D densities)"
                        .into(),
                )),
            };
        Ok(ln / (1.0 - a))
    }

    /// JSD(p ‖ q) = ½KL(p ‖ m) + ½KL(q ‖ m), m = (p + q)/2.
    pub fn jensen_shannon(&self, p: &Distribution, q: &Distribution) -> Result<f64> {
        match pair(p, q)? {
            Pair::Discrete(p, q) => {
                let mut total = 0.0;
                for (&pi, &qi) in p.iter().zip(q) {
                    let m = 0.5 * (pi + qi);
                    if pi > 0.0 {
                        total += 0.5 * pi * (pi / m).ln();
                    }
                    if qi > 0.0 {
                        total += 0.5 * qi * (qi / m).ln();
                    }
                }
                Ok(total)
            }
            Pair::Continuous(p, q) if p.is_diag() || q.is_diag() => Err(MeasureError::Unsupported(
                "Jensen-Shannon divergence does not factorize over diagonal Gaussians".into(),
            )),
            Pair::Continuous(p, q) => {
                let domain = Domain::Panels(panels(union(p.support(), q.support()), &[p, q]));
                self.reduce(&domain, |pt| {
                    let Pt::At(x) = pt else { unreachable!() };
                    let lp = ln_density(p, x)?;
                    let lq = ln_density(q, x)?;
                    let lm = log_add_exp(lp, lq) - LN_2;
                    let mut v = 0.0;
                    if lp > f64::NEG_INFINITY {
                        v += 0.5 * lp.exp() * (lp - lm);
                    }
                    if lq > f64::NEG_INFINITY {
                        v += 0.5 * lq.exp() * (lq - lm);
                    }
                    Ok(v)
                })
            }
        }
    }

    /// JR_α(p ‖ q) = ½D_α(p ‖ m) + ½D_α(q ‖ m), m = (p + q)/2.
    pub fn jensen_renyi(&self, p: &Distribution, q: &Distribution, alpha: Order) -> Result<f64> {
        let a = alpha.check_renyi()?;
        let t = a - 1.0;
        match pair(p, q)? {
            Pair::Discrete(pv, qv) => {
                let n = pv.len();
                let half = |first: &[f64], second: &[f64]| -> Result<f64> {
                    self.ln_moment(&Domain::Indices(n), t, |pt| {
                        let Pt::Index(i) = pt else { unreachable!() };
                        if first[i] == 0.0 {
                            return Ok(None);
                        }
                        let m = 0.5 * (first[i] + second[i]);
                        Ok(Some((first[i].ln(), (first[i] / m).ln())))
                    })
                };
                Ok(0.5 * (half(pv, qv)? + half(qv, pv)?) / t)
            }
            Pair::Continuous(p, q) if p.is_diag() || q.is_diag() => Err(MeasureError::Unsupported(
                "Jensen-Rényi divergence does not factorize over diagonal Gaussians".into(),
            )),
            Pair::Continuous(p, q) => {
                let half = |first: &ContinuousDensity, second: &ContinuousDensity| -> Result<f64> {
                    let domain = Domain::Panels(panels(union(first.support(), second.support()), &[first, second]));
                    self.ln_moment(&domain, t, |pt| {
                        let Pt::At(x) = pt else { unreachable!() };
                        let lf = ln_density(first, x)?;
                        if lf == f64::NEG_INFINITY {
                            return Ok(None);
                        }
                        let ls = ln_density(second, x)?;
                        let lm = log_add_exp(lf, ls) - LN_2;
                        Ok(Some((lf, lf - lm)))
                    })
                };
                Ok(0.5 * (half(p, q)? + half(q, p)?) / t)
            }
        }
    }

    /// Sums a per-coordinate measure over the marginals of diagonal Gaussians.
    fn factorized<F>(&self, p: &ContinuousDensity, q: &ContinuousDensity, per_coord: F) -> Result<f64>
    where
        F: Fn(ContinuousDensity, ContinuousDensity) -> Result<f64>,
    {
        let (pm, qm) = (p.marginals(), q.marginals());
        if pm.len() != qm.len() {
            return Err(MeasureError::SupportMismatch("dimension mismatch".into()));
        }
        pm.into_iter().zip(qm).map(|(a, b)| per_coord(a, b)).sum()
    }
}

/// |χ|^k between non-negative discrete measures (not necessarily normalized).
pub fn pearson_vajda_masses(p: &[f64], q: &[f64], k: Order) -> Result<f64> {
    let k = k.check_vajda()?;
    if p.len() != q.len() {
        return Err(MeasureError::SupportMismatch(format!(
            "{} masses against {}",
            p.len(),
            q.len()
        )));
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if !(pi >= 0.0 && qi >= 0.0 && pi.is_finite() && qi.is_finite()) {
            return Err(MeasureError::InvalidDistribution(format!(
                "masses must be non-negative (index {i})"
            )));
        }
        if pi == 0.0 {
            if qi == 0.0 {
                continue;
            }
            if k == 1.0 {
                total += qi;
                continue;
            }
            return Err(MeasureError::DivisionByZeroSupport {
                at: format!("index {i}"),
            });
        }
        total += (qi - pi).abs().powf(k) / pi.powf(k - 1.0);
    }
    Ok(total)
}

/// Pearson χ²(p ‖ q) = Σ (q − p)²/p by direct summation.
pub fn pearson_chi2(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    if p.len() != q.len() {
        return Err(MeasureError::SupportMismatch(format!(
            "{} against {}",
            p.len(),
            q.len()
        )));
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.probs().iter().zip(q.probs()).enumerate() {
        if pi == 0.0 {
            if qi == 0.0 {
                continue;
            }
            return Err(MeasureError::DivisionByZeroSupport {
                at: format!("index {i}"),
            });
        }
        let d = qi - pi;
        total += d * d / pi;
    }
    Ok(total)
}

pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    Measures::default().kl_divergence(p, q)
}

pub fn shannon_cross_entropy(p: &Distribution, q: &Distribution) -> Result<f64> {
    Measures::default().shannon_cross_entropy(p, q)
}

pub fn pearson_vajda(p: &Distribution, q: &Distribution, k: Order) -> Result<f64> {
    Measures::default().pearson_vajda(p, q, k)
}

pub fn renyi_divergence(p: &Distribution, q: &Distribution, alpha: Order) -> Result<f64> {
    Measures::default().renyi_divergence(p, q, alpha)
}

pub fn renyi_cross_entropy(p: &Distribution, q: &Distribution, alpha: Order) -> Result<f64> {
    Measures::default().renyi_cross_entropy(p, q, alpha)
}

pub fn renyi_cross_entropy_functional(p: &Distribution, q: Weighting<'_>, alpha: Order) -> Result<f64> {
    Measures::default().renyi_cross_entropy_functional(p, q, alpha)
}

pub fn jensen_shannon(p: &Distribution, q: &Distribution) -> Result<f64> {
    Measures::default().jensen_shannon(p, q)
}

pub fn jensen_renyi(p: &Distribution, q: &Distribution, alpha: Order) -> Result<f64> {
    Measures::default().jensen_renyi(p, q, alpha)
}
