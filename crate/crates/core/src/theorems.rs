//! Numerical certification of the analytic results behind the losses:
//! optimal discriminators, the loss-equals-divergence identities, the α → 1
//! limits and the stability boundary of the Rényi cross-entropy functional.
//!
//! Identity checks compute the two sides through unrelated code paths. The
//! loss side integrates the generator objective with `D*` plugged in, using
//! the quadrature directly; the divergence side goes through [`Measures`].

use std::cell::RefCell;
use std::f64::consts::LN_2;

use thiserror::Error;

use crate::autodiff::Mlp;
use crate::losses::{LkganParams, CLAMP_HI, CLAMP_LO};
use crate::measures::{
    pearson_vajda_masses, ContinuousDensity, DiscreteDist, Distribution, MeasureError, Measures, Order, Quadrature,
    Weighting,
};

mod suite;

pub use suite::{run_suite, SuiteCheck, CHECK_NAMES, DEFAULT_TOLERANCE};

/// Slack allowed on `a − b = 2(c − b)`.
pub const CONSTRAINT_TOL: f64 = 1e-12;
/// Samples and bins used for empirical densities of network outputs.
pub const EMPIRICAL_SAMPLES: usize = 100_000;
pub const EMPIRICAL_BINS: usize = 256;

#[derive(Debug, Error)]
pub enum TheoremError {
    #[error("p_X + p_g vanishes at {at}")]
    ZeroDensitySum { at: String },
    #[error("constraint a - b = 2(c - b) violated (a = {a}, b = {b}, c = {c})")]
    ConstraintViolated { a: f64, b: f64, c: f64 },
    #[error("discriminator value {value} at {at} is saturated for the log term it feeds")]
    SaturatedDiscriminator { at: String, value: f64 },
    #[error("integrability hypothesis fails: {0}")]
    HypothesisViolated(String),
    #[error("condition-number denominator is degenerate: {0}")]
    DegenerateDenominator(String),
    #[error("density pair mismatch: {0}")]
    KindMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown check {0:?}")]
    UnknownCheck(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

pub type Result<T> = std::result::Result<T, TheoremError>;

/// Where a density or discriminator is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Index(usize),
    At(f64),
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Point::Index(i) => write!(f, "index {i}"),
            Point::At(x) => write!(f, "x = {x}"),
        }
    }
}

/// Data density `p_X` and generator density `p_g` of the same kind.
#[derive(Debug, Clone)]
pub struct DensityPair {
    p_x: Distribution,
    p_g: Distribution,
}

impl DensityPair {
    pub fn new(p_x: Distribution, p_g: Distribution) -> Result<Self> {
        match (&p_x, &p_g) {
            (Distribution::Discrete(a), Distribution::Discrete(b)) => {
                if a.len() != b.len() {
                    return Err(TheoremError::KindMismatch(format!(
                        "discrete supports of size {} and {}",
                        a.len(),
                        b.len()
                    )));
                }
            }
            (Distribution::Continuous(a), Distribution::Continuous(b)) => {
                if a.dim() != 1 || b.dim() != 1 {
                    return Err(TheoremError::KindMismatch("only 1-D densities are supported".into()));
                }
            }
            _ => {
                return Err(TheoremError::KindMismatch(
                    "cannot pair a discrete distribution with a density".into(),
                ))
            }
        }
        Ok(Self { p_x, p_g })
    }

    pub fn gaussians(mean_x: f64, var_x: f64, mean_g: f64, var_g: f64) -> Result<Self> {
        Self::new(
            Distribution::gaussian(mean_x, var_x)?,
            Distribution::gaussian(mean_g, var_g)?,
        )
    }

    pub fn discrete(p_x: Vec<f64>, p_g: Vec<f64>) -> Result<Self> {
        Self::new(Distribution::discrete(p_x)?, Distribution::discrete(p_g)?)
    }

    pub fn p_x(&self) -> &Distribution {
        &self.p_x
    }

    pub fn p_g(&self) -> &Distribution {
        &self.p_g
    }

    /// `(ln p_X(x), ln p_g(x))`.
    pub fn ln_densities(&self, at: Point) -> Result<(f64, f64)> {
        let one = |d: &Distribution| -> Result<f64> {
            let v = match (d, at) {
                (Distribution::Discrete(d), Point::Index(i)) => d
                    .probs()
                    .get(i)
                    .ok_or_else(|| TheoremError::InvalidArgument(format!("index {i} is outside the support")))?
                    .ln(),
                (Distribution::Continuous(c), Point::At(x)) => c.ln_pdf(x),
                _ => {
                    return Err(TheoremError::InvalidArgument(format!(
                        "{at} does not match the kind of the density pair"
                    )))
                }
            };
            if v.is_nan() || v == f64::INFINITY {
                return Err(MeasureError::NegativeFunctionValue {
                    x: point_coord(at),
                    value: v.exp(),
                }
                .into());
            }
            Ok(v)
        };
        Ok((one(&self.p_x)?, one(&self.p_g)?))
    }

    fn domain(&self) -> Domain {
        match (&self.p_x, &self.p_g) {
            (Distribution::Discrete(d), _) => Domain::Indices(d.len()),
            (Distribution::Continuous(a), Distribution::Continuous(b)) => Domain::Panels(union_panels(a, b)),
            _ => unreachable!("checked in DensityPair::new"),
        }
    }

    fn densities(&self) -> Option<(&ContinuousDensity, &ContinuousDensity)> {
        match (&self.p_x, &self.p_g) {
            (Distribution::Continuous(a), Distribution::Continuous(b)) => Some((a, b)),
            _ => None,
        }
    }

    fn masses(&self) -> Option<(&DiscreteDist, &DiscreteDist)> {
        match (&self.p_x, &self.p_g) {
            (Distribution::Discrete(a), Distribution::Discrete(b)) => Some((a, b)),
            _ => None,
        }
    }
}

fn point_coord(p: Point) -> f64 {
    match p {
        Point::Index(i) => i as f64,
        Point::At(x) => x,
    }
}

/// Panels over the union of both supports, split at every break of either.
fn union_panels(a: &ContinuousDensity, b: &ContinuousDensity) -> Vec<f64> {
    let (la, ha) = a.support();
    let (lb, hb) = b.support();
    let (lo, hi) = (la.min(lb), ha.max(hb));
    let mut breaks = vec![lo, hi];
    breaks.extend(
        a.breakpoints()
            .into_iter()
            .chain(b.breakpoints())
            .filter(|x| *x > lo && *x < hi),
    );
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

enum Domain {
    Indices(usize),
    Panels(Vec<f64>),
}

/// Sums or integrates a fallible integrand over a pair's joint support.
fn reduce<F>(quad: &Quadrature, domain: &Domain, f: F) -> Result<f64>
where
    F: Fn(Point) -> Result<f64>,
{
    match domain {
        Domain::Indices(n) => (0..*n).map(|i| f(Point::Index(i))).sum(),
        Domain::Panels(breaks) => {
            let failure: RefCell<Option<TheoremError>> = RefCell::new(None);
            let integrand = |x: f64| -> f64 {
                if failure.borrow().is_some() {
                    return 0.0;
                }
                match f(Point::At(x)) {
                    Ok(v) => v,
                    Err(e) => {
                        *failure.borrow_mut() = Some(e);
                        0.0
                    }
                }
            };
            let result = quad.integrate_panels(&integrand, breaks);
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            Ok(result.map_err(MeasureError::from)?)
        }
    }
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Pointwise optimal discriminator `(a·p_g + b·p_X)/(p_g + p_X)`.
#[derive(Debug, Clone)]
pub struct OptimalDiscriminator {
    pair: DensityPair,
    a: f64,
    b: f64,
}

/// Best response of the LkGAN discriminator for labels `a` (fake) and `b` (real).
pub fn optimal_disc_lkgan(pair: &DensityPair, a: f64, b: f64) -> Result<OptimalDiscriminator> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(TheoremError::InvalidArgument(format!(
            "labels must be finite, got a = {a}, b = {b}"
        )));
    }
    Ok(OptimalDiscriminator {
        pair: pair.clone(),
        a,
        b,
    })
}

/// Best response of the classical discriminator, `p_X/(p_X + p_g)`.
pub fn optimal_disc_renyi(pair: &DensityPair) -> OptimalDiscriminator {
    OptimalDiscriminator {
        pair: pair.clone(),
        a: 0.0,
        b: 1.0,
    }
}

impl OptimalDiscriminator {
    /// `p_g/(p_X + p_g)` evaluated in the log domain so that far tails, where
    /// both densities underflow together, keep their ratio.
    fn fake_share(&self, at: Point) -> Result<f64> {
        let (lx, lg) = self.pair.ln_densities(at)?;
        if lx == f64::NEG_INFINITY && lg == f64::NEG_INFINITY {
            return Err(TheoremError::ZeroDensitySum { at: at.to_string() });
        }
        Ok(1.0 / (1.0 + (lx - lg).exp()))
    }

    pub fn at(&self, at: Point) -> Result<f64> {
        let w = self.fake_share(at)?;
        let (lo, hi) = (self.a.min(self.b), self.a.max(self.b));
        Ok((self.b + (self.a - self.b) * w).clamp(lo, hi))
    }

    /// Callback form for continuous pairs; `NaN` where `D*` is undefined.
    pub fn as_fn(&self) -> impl Fn(f64) -> f64 + Sync + '_ {
        move |x| self.at(Point::At(x)).unwrap_or(f64::NAN)
    }
}

/// Both sides of an identity and their absolute difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

impl IdentityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            gap: (lhs - rhs).abs(),
        }
    }
}

/// `V_{k,g}(D*, g)` against `|c − b|^k·|χ|^k(p_X + p_g ‖ 2p_g)`.
pub fn verify_lkgan_identity(pair: &DensityPair, params: &LkganParams) -> Result<IdentityCheck> {
    verify_lkgan_identity_with(&Measures::default(), pair, params)
}

pub fn verify_lkgan_identity_with(
    measures: &Measures,
    pair: &DensityPair,
    params: &LkganParams,
) -> Result<IdentityCheck> {
    let (a, b, c, k) = (params.a(), params.b(), params.c(), params.k());
    if ((a - b) - 2.0 * (c - b)).abs() > CONSTRAINT_TOL {
        return Err(TheoremError::ConstraintViolated { a, b, c });
    }
    let d_star = optimal_disc_lkgan(pair, a, b)?;

    // Generator objective with D* plugged in, one expectation per density.
    let lhs = reduce(&measures.quadrature, &pair.domain(), |at| {
        let (lx, lg) = pair.ln_densities(at)?;
        if lx == f64::NEG_INFINITY && lg == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let dev = (d_star.at(at)? - c).abs().powf(k);
        Ok(lx.exp() * dev + lg.exp() * dev)
    })?;

    let scale = (c - b).abs().powf(k);
    let divergence = if let Some((px, pg)) = pair.masses() {
        let sum: Vec<f64> = px.probs().iter().zip(pg.probs()).map(|(x, g)| x + g).collect();
        let twice: Vec<f64> = pg.probs().iter().map(|g| 2.0 * g).collect();
        pearson_vajda_masses(&sum, &twice, params.order())?
    } else {
        let (px, pg) = pair.densities().expect("continuous pair");
        let breaks = union_panels(px, pg);
        let (lo, hi) = (breaks[0], breaks[breaks.len() - 1]);
        let interior = breaks[1..breaks.len() - 1].to_vec();
        let (sx, sg) = (px.clone(), pg.clone());
        let sum = ContinuousDensity::evaluable_with_breaks(move |x| sx.pdf(x) + sg.pdf(x), lo, hi, interior.clone())?;
        let tg = pg.clone();
        let twice = ContinuousDensity::evaluable_with_breaks(move |x| 2.0 * tg.pdf(x), lo, hi, interior)?;
        measures.pearson_vajda(&sum.into(), &twice.into(), params.order())?
    };
    Ok(IdentityCheck::new(lhs, scale * divergence))
}

/// `(1/(α−1))·ln ∫ w·exp((α−1)·ℓ)` where `term` yields `(ln w, ℓ)`.
fn ln_power_moment<F>(quad: &Quadrature, domain: &Domain, t: f64, term: F) -> Result<f64>
where
    F: Fn(Point) -> Result<Option<(f64, f64)>>,
{
    let integral = reduce(quad, domain, |at| {
        Ok(term(at)?.map_or(0.0, |(lw, l)| (lw + t * l).exp()))
    })?;
    if !(integral > 0.0 && integral.is_finite()) {
        return Err(MeasureError::IntegralDiverges(format!("moment integral evaluated to {integral}")).into());
    }
    Ok(integral.ln() / t)
}

/// `−H_α(p_X; D*) − H_α(p_g; 1 − D*)` against `2·JR_α(p_X ‖ p_g) − 2 log 2`.
pub fn verify_renyigan_identity(pair: &DensityPair, alpha: Order) -> Result<IdentityCheck> {
    verify_renyigan_identity_with(&Measures::default(), pair, alpha)
}

pub fn verify_renyigan_identity_with(measures: &Measures, pair: &DensityPair, alpha: Order) -> Result<IdentityCheck> {
    let a = Order::renyi(alpha.value())?.value();
    let t = a - 1.0;
    let domain = pair.domain();
    let quad = &measures.quadrature;
    // ln D* = ln p_X − ln(p_X + p_g), ln(1 − D*) = ln p_g − ln(p_X + p_g).
    let real = ln_power_moment(quad, &domain, t, |at| {
        let (lx, lg) = pair.ln_densities(at)?;
        Ok((lx > f64::NEG_INFINITY).then(|| (lx, lx - ln_add_exp(lx, lg))))
    })?;
    let fake = ln_power_moment(quad, &domain, t, |at| {
        let (lx, lg) = pair.ln_densities(at)?;
        Ok((lg > f64::NEG_INFINITY).then(|| (lg, lg - ln_add_exp(lx, lg))))
    })?;
    let lhs = real + fake;
    let rhs = 2.0 * measures.jensen_renyi(pair.p_x(), pair.p_g(), alpha)? - 2.0 * LN_2;
    Ok(IdentityCheck::new(lhs, rhs))
}

/// Evaluates a discriminator at a point of a pair's support.
fn disc_value(d: &Weighting<'_>, at: Point) -> Result<f64> {
    match (d, at) {
        (Weighting::Values(v), Point::Index(i)) => v
            .get(i)
            .copied()
            .ok_or_else(|| TheoremError::InvalidArgument(format!("no discriminator value for index {i}"))),
        (Weighting::Function(f), Point::At(x)) => Ok(f(x)),
        _ => Err(TheoremError::InvalidArgument(
            "discriminator kind must match the density pair (values for discrete, function for densities)".into(),
        )),
    }
}

/// `ln D` (or `ln(1 − D)`), rejecting values outside [0, 1] and a zero
/// log argument.
fn ln_disc(d: &Weighting<'_>, at: Point, complement: bool) -> Result<f64> {
    let v = disc_value(d, at)?;
    let inside = if complement {
        (0.0..1.0).contains(&v)
    } else {
        v > 0.0 && v <= 1.0
    };
    if !inside {
        return Err(TheoremError::SaturatedDiscriminator {
            at: at.to_string(),
            value: v,
        });
    }
    Ok(if complement { (-v).ln_1p() } else { v.ln() })
}

/// Classical objective `V(D, g) = ∫ p_X ln D + ∫ p_g ln(1 − D)`.
pub fn population_gan_value(d: Weighting<'_>, pair: &DensityPair) -> Result<f64> {
    let quad = Quadrature::default();
    reduce(&quad, &pair.domain(), |at| {
        let (lx, lg) = pair.ln_densities(at)?;
        let mut v = 0.0;
        if lx > f64::NEG_INFINITY {
            v += lx.exp() * ln_disc(&d, at, false)?;
        }
        if lg > f64::NEG_INFINITY {
            v += lg.exp() * ln_disc(&d, at, true)?;
        }
        Ok(v)
    })
}

/// Rényi generator objective `−H_α(p_X; D) − H_α(p_g; 1 − D)`.
pub fn population_renyi_value(d: Weighting<'_>, pair: &DensityPair, alpha: Order) -> Result<f64> {
    let measures = Measures::default();
    let complement: Vec<f64>;
    let complement_fn;
    let one_minus = match d {
        Weighting::Values(v) => {
            complement = v.iter().map(|x| 1.0 - x).collect();
            Weighting::Values(&complement)
        }
        Weighting::Function(f) => {
            complement_fn = move |x: f64| 1.0 - f(x);
            Weighting::Function(&complement_fn)
        }
    };
    let real = measures.renyi_cross_entropy_functional(pair.p_x(), d, alpha)?;
    let fake = measures.renyi_cross_entropy_functional(pair.p_g(), one_minus, alpha)?;
    Ok(-real - fake)
}

/// The L1-normalized population objective `|V_{α,g}(D, g) + 2 log 2|`.
pub fn population_l1_objective(d: Weighting<'_>, pair: &DensityPair, alpha: Order) -> Result<f64> {
    Ok((population_renyi_value(d, pair, alpha)? + 2.0 * LN_2).abs())
}

/// `max_{α ∈ {1−ε, 1+ε}} |V_{α,g}(D, g) − V(D, g)|`.
///
/// The discriminator must lie strictly inside (0, 1) wherever the matching
/// density is positive, and the inverse moments `E_{p_X}[1/D]` and
/// `E_{p_g}[1/(1 − D)]` must be finite.
pub fn verify_generator_limit(d: Weighting<'_>, pair: &DensityPair, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(TheoremError::InvalidArgument(format!("eps = {eps} must lie in (0, 1)")));
    }
    let quad = Quadrature::default();
    let inverse_moment = reduce(&quad, &pair.domain(), |at| {
        let (lx, lg) = pair.ln_densities(at)?;
        let mut v = 0.0;
        if lx > f64::NEG_INFINITY {
            v += (lx - ln_disc(&d, at, false)?).exp();
        }
        if lg > f64::NEG_INFINITY {
            v += (lg - ln_disc(&d, at, true)?).exp();
        }
        Ok(v)
    });
    match inverse_moment {
        Ok(v) if v.is_finite() => {}
        Ok(v) => return Err(TheoremError::HypothesisViolated(format!("inverse moments sum to {v}"))),
        Err(TheoremError::Measure(e)) => return Err(TheoremError::HypothesisViolated(e.to_string())),
        Err(e) => return Err(e),
    }
    let reference = population_gan_value(d, pair)?;
    let mut gap: f64 = 0.0;
    for alpha in [1.0 - eps, 1.0 + eps] {
        let v = population_renyi_value(d, pair, Order::renyi(alpha)?)?;
        gap = gap.max((v - reference).abs());
    }
    Ok(gap)
}

/// Histogram density of `samples` over `[lo, hi]` with `bins` equal bins.
pub fn empirical_density(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<ContinuousDensity> {
    if samples.is_empty() || bins == 0 || !(hi > lo) {
        return Err(TheoremError::InvalidArgument(
            "empirical density needs samples, bins >= 1 and hi > lo".into(),
        ));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &s in samples {
        if !(s >= lo && s <= hi) {
            return Err(TheoremError::InvalidArgument(format!(
                "sample {s} outside [{lo}, {hi}]"
            )));
        }
        counts[(((s - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let n = samples.len() as f64;
    let edges = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let masses = counts.iter().map(|&c| c as f64 / n).collect();
    Ok(ContinuousDensity::histogram(edges, masses)?)
}

/// Pair of empirical densities over the common range of both sample sets.
pub fn empirical_pair(real: &[f64], fake: &[f64], bins: usize) -> Result<DensityPair> {
    let (lo, hi) = real
        .iter()
        .chain(fake)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
            (lo.min(s), hi.max(s))
        });
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(TheoremError::InvalidArgument(
            "samples must be finite and non-empty".into(),
        ));
    }
    let pad = 1e-9 * (hi - lo).abs().max(1.0);
    DensityPair::new(
        empirical_density(real, lo - pad, hi + pad, bins)?.into(),
        empirical_density(fake, lo - pad, hi + pad, bins)?.into(),
    )
}

/// A scalar-input discriminator network as a callback, clamped to
/// `[CLAMP_LO, CLAMP_HI]` like the training losses do.
pub fn clamped_discriminator(net: &Mlp) -> Result<impl Fn(f64) -> f64 + Sync + '_> {
    if net.input_dim() != 1 || !net.is_discriminator() {
        return Err(TheoremError::InvalidArgument(
            "expected a discriminator with one input".into(),
        ));
    }
    Ok(move |x: f64| {
        let input = ndarray::Array2::from_elem((1, 1), x);
        match net.forward(&input) {
            Ok(out) => out[[0, 0]].clamp(CLAMP_LO, CLAMP_HI),
            Err(_) => f64::NAN,
        }
    })
}

/// Absolute condition number `p(x₀)·q(x₀)^{α−2} / ∫ p·q^{α−1}` of the Rényi
/// cross-entropy functional.
///
/// Returns `+∞` when `q(x₀) = 0` and `α < 2`. The denominator is weighted by
/// the given `p`.
pub fn condition_number(p: &Distribution, q: Weighting<'_>, alpha: Order, x0: Point) -> Result<f64> {
    let a = Order::renyi(alpha.value())?.value();
    let (p0, q0) = match (p, x0) {
        (Distribution::Discrete(d), Point::Index(i)) => {
            let p0 = *d
                .probs()
                .get(i)
                .ok_or_else(|| TheoremError::InvalidArgument(format!("index {i} is outside the support")))?;
            (p0, disc_value(&q, x0)?)
        }
        (Distribution::Continuous(c), Point::At(x)) => (c.pdf(x), disc_value(&q, x0)?),
        _ => {
            return Err(TheoremError::InvalidArgument(
                "x0 must be an index for discrete p and a coordinate for densities".into(),
            ))
        }
    };
    if !(q0.is_finite() && q0 >= 0.0) {
        return Err(MeasureError::NegativeFunctionValue {
            x: point_coord(x0),
            value: q0,
        }
        .into());
    }
    let h = Measures::default()
        .renyi_cross_entropy_functional(p, q, alpha)
        .map_err(|e| TheoremError::DegenerateDenominator(e.to_string()))?;
    let denominator = ((1.0 - a) * h).exp();
    if !(denominator > 0.0 && denominator.is_finite()) {
        return Err(TheoremError::DegenerateDenominator(format!(
            "∫ p·q^(α−1) evaluated to {denominator}"
        )));
    }
    if q0 == 0.0 && a < 2.0 {
        return Ok(f64::INFINITY);
    }
    Ok(p0 * q0.powf(a - 2.0) / denominator)
}

/// `max_{α = 1 ± ε} |h_α(p; q) − h(p; q)|`.
pub fn cross_entropy_limit_gap(p: &Distribution, q: &Distribution, eps: f64) -> Result<f64> {
    let m = Measures::default();
    let reference = m.shannon_cross_entropy(p, q)?;
    limit_gap(eps, reference, |alpha| Ok(m.renyi_cross_entropy(p, q, alpha)?))
}

/// `max_{α = 1 ± ε} |D_α(p ‖ q) − KL(p ‖ q)|`.
pub fn renyi_kl_limit_gap(p: &Distribution, q: &Distribution, eps: f64) -> Result<f64> {
    let m = Measures::default();
    let reference = m.kl_divergence(p, q)?;
    limit_gap(eps, reference, |alpha| Ok(m.renyi_divergence(p, q, alpha)?))
}

/// `max_{α = 1 ± ε} |JR_α(p ‖ q) − JSD(p ‖ q)|`.
pub fn jensen_renyi_limit_gap(p: &Distribution, q: &Distribution, eps: f64) -> Result<f64> {
    let m = Measures::default();
    let reference = m.jensen_shannon(p, q)?;
    limit_gap(eps, reference, |alpha| Ok(m.jensen_renyi(p, q, alpha)?))
}

fn limit_gap<F>(eps: f64, reference: f64, at: F) -> Result<f64>
where
    F: Fn(Order) -> Result<f64>,
{
    if !(eps > 0.0 && eps < 1.0) {
        return Err(TheoremError::InvalidArgument(format!("eps = {eps} must lie in (0, 1)")));
    }
    let below = at(Order::renyi(1.0 - eps)?)?;
    let above = at(Order::renyi(1.0 + eps)?)?;
    Ok((below - reference).abs().max((above - reference).abs()))
}
