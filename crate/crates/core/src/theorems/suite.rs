//! The built-in verification suite behind the `verify` subcommand.
//!
//! Every check reduces to a non-negative gap that passes when it is at most
//! the requested tolerance. Inequality checks report the size of the
//! violation, so a satisfied bound has gap 0.

use std::f64::consts::LN_2;

use super::{
    condition_number, optimal_disc_renyi, population_gan_value, population_renyi_value, verify_lkgan_identity,
    verify_renyigan_identity, DensityPair, IdentityCheck, Point, Result, TheoremError,
};
use crate::losses::LkganParams;
use crate::measures::{ContinuousDensity, Distribution, Measures, Order, Weighting};

pub const DEFAULT_TOLERANCE: f64 = 1e-5;

/// Distance from 1 at which the suite's limit checks are evaluated. They run
/// on discrete inputs, where sums are exact, so the gap is of order ε.
const LIMIT_EPS: f64 = 1e-6;
const ALPHA_GRID: [f64; 8] = [0.1, 0.5, 0.9, 1.1, 2.0, 3.0, 5.0, 9.0];
const IDENTITY_ORDERS: [f64; 4] = [0.5, 2.0, 3.0, 9.0];
const UNSTABLE_THRESHOLD: f64 = 1e6;

pub const CHECK_NAMES: [&str; 9] = [
    "cross-entropy-limit",
    "monotonicity",
    "lkgan-identity",
    "generator-limit",
    "renyi-identity",
    "renyi-equilibrium",
    "renyi-kl-limit",
    "jr-jsd-limit",
    "condition-number",
];

/// Outcome of one named check: the worst case over its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteCheck {
    pub name: &'static str,
    pub cases: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Runs every check (or only `only`) against `tolerance`.
pub fn run_suite(tolerance: f64, only: Option<&str>) -> Result<Vec<SuiteCheck>> {
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(TheoremError::InvalidArgument(format!(
            "tolerance {tolerance} must be positive"
        )));
    }
    let names: Vec<&'static str> = match only {
        None => CHECK_NAMES.to_vec(),
        Some(name) => vec![*CHECK_NAMES
            .iter()
            .find(|n| **n == name)
            .ok_or_else(|| TheoremError::UnknownCheck(name.to_string()))?],
    };
    names
        .into_iter()
        .map(|name| {
            let cases = run_check(name)?;
            let worst = cases
                .iter()
                .copied()
                .max_by(|a, b| a.gap.total_cmp(&b.gap))
                .expect("every check has cases");
            Ok(SuiteCheck {
                name,
                cases: cases.len(),
                lhs: worst.lhs,
                rhs: worst.rhs,
                gap: worst.gap,
                tolerance,
                passed: worst.gap <= tolerance,
            })
        })
        .collect()
}

fn discrete_pairs() -> Vec<(Vec<f64>, Vec<f64>)> {
    vec![
        (vec![0.5, 0.5], vec![0.25, 0.75]),
        (vec![0.2, 0.3, 0.5], vec![0.4, 0.4, 0.2]),
        (vec![0.1, 0.2, 0.3, 0.4], vec![0.25, 0.25, 0.25, 0.25]),
    ]
}

fn continuous_pairs() -> Result<Vec<DensityPair>> {
    let hist_x = ContinuousDensity::histogram(vec![-1.0, 0.0, 1.0, 2.0], vec![0.2, 0.5, 0.3])?;
    let hist_g = ContinuousDensity::histogram(vec![-1.0, 0.5, 1.0, 2.0], vec![0.4, 0.1, 0.5])?;
    Ok(vec![
        DensityPair::gaussians(0.0, 1.0, 1.0, 1.0)?,
        DensityPair::gaussians(0.0, 1.0, 0.5, 2.0)?,
        DensityPair::new(hist_x.into(), hist_g.into())?,
    ])
}

fn all_pairs() -> Result<Vec<DensityPair>> {
    let mut pairs = continuous_pairs()?;
    for (p, q) in discrete_pairs() {
        pairs.push(DensityPair::discrete(p, q)?);
    }
    Ok(pairs)
}

/// Worst of the two one-sided deviations at α = 1 ± ε.
fn limit_case<F>(reference: f64, at: F) -> Result<IdentityCheck>
where
    F: Fn(Order) -> Result<f64>,
{
    let mut worst = IdentityCheck::new(reference, reference);
    for alpha in [1.0 - LIMIT_EPS, 1.0 + LIMIT_EPS] {
        let case = IdentityCheck::new(at(Order::renyi(alpha)?)?, reference);
        if case.gap > worst.gap {
            worst = case;
        }
    }
    Ok(worst)
}

fn run_check(name: &str) -> Result<Vec<IdentityCheck>> {
    let m = Measures::default();
    let mut out = Vec::new();
    match name {
        "cross-entropy-limit" => {
            for (p, q) in discrete_pairs() {
                let (p, q) = (Distribution::discrete(p)?, Distribution::discrete(q)?);
                let reference = m.shannon_cross_entropy(&p, &q)?;
                out.push(limit_case(reference, |a| Ok(m.renyi_cross_entropy(&p, &q, a)?))?);
            }
        }
        "renyi-kl-limit" => {
            for (p, q) in discrete_pairs() {
                let (p, q) = (Distribution::discrete(p)?, Distribution::discrete(q)?);
                let reference = m.kl_divergence(&p, &q)?;
                out.push(limit_case(reference, |a| Ok(m.renyi_divergence(&p, &q, a)?))?);
            }
        }
        "jr-jsd-limit" => {
            for (p, q) in discrete_pairs() {
                let (p, q) = (Distribution::discrete(p)?, Distribution::discrete(q)?);
                let reference = m.jensen_shannon(&p, &q)?;
                out.push(limit_case(reference, |a| Ok(m.jensen_renyi(&p, &q, a)?))?);
            }
        }
        "monotonicity" => {
            for (p, q) in discrete_pairs() {
                let (p, q) = (Distribution::discrete(p)?, Distribution::discrete(q)?);
                let values = ALPHA_GRID
                    .iter()
                    .map(|&a| Ok(m.renyi_cross_entropy(&p, &q, Order::renyi(a)?)?))
                    .collect::<Result<Vec<f64>>>()?;
                for w in values.windows(2) {
                    // lhs is the later value, rhs the earlier; only increases count.
                    out.push(IdentityCheck {
                        lhs: w[1],
                        rhs: w[0],
                        gap: (w[1] - w[0]).max(0.0),
                    });
                }
            }
        }
        "lkgan-identity" => {
            for pair in all_pairs()? {
                for k in [1.0, 2.0, 3.0] {
                    for params in [LkganParams::v1(k), LkganParams::v2(k)] {
                        let params = params.map_err(|e| TheoremError::InvalidArgument(e.to_string()))?;
                        out.push(verify_lkgan_identity(&pair, &params)?);
                    }
                }
            }
        }
        "renyi-identity" => {
            for pair in all_pairs()? {
                for a in IDENTITY_ORDERS {
                    out.push(verify_renyigan_identity(&pair, Order::renyi(a)?)?);
                }
            }
        }
        "renyi-equilibrium" => {
            let pairs = [
                DensityPair::gaussians(0.0, 1.0, 0.0, 1.0)?,
                DensityPair::discrete(vec![0.2, 0.3, 0.5], vec![0.2, 0.3, 0.5])?,
            ];
            for pair in &pairs {
                for a in IDENTITY_ORDERS {
                    let check = verify_renyigan_identity(pair, Order::renyi(a)?)?;
                    out.push(IdentityCheck::new(check.lhs, -2.0 * LN_2));
                }
            }
        }
        "generator-limit" => {
            for (p, q) in discrete_pairs() {
                let pair = DensityPair::discrete(p.clone(), q)?;
                let d_star = optimal_disc_renyi(&pair);
                let optimal: Vec<f64> = (0..p.len())
                    .map(|i| d_star.at(Point::Index(i)))
                    .collect::<Result<_>>()?;
                let half = vec![0.5; p.len()];
                for d in [&optimal, &half] {
                    let reference = population_gan_value(Weighting::Values(d), &pair)?;
                    out.push(limit_case(reference, |a| {
                        population_renyi_value(Weighting::Values(d), &pair, a)
                    })?);
                }
            }
        }
        "condition-number" => out.extend(condition_cases()?),
        other => return Err(TheoremError::UnknownCheck(other.to_string())),
    }
    Ok(out)
}

/// Sweeps `q(x₀)` from 1 down to 1e-12 for a uniform `p` on [0, 1] and a
/// sigmoid-shaped `q`. Stable orders must stay under
/// `p(x₀)·max(q)^{α−2}/∫p·q^{α−1}`; unstable orders must exceed 1e6.
pub(crate) fn condition_cases() -> Result<Vec<IdentityCheck>> {
    let x0 = 0.5;
    let p: Distribution = ContinuousDensity::evaluable(|_| 1.0, 0.0, 1.0)?.into();
    let base = |x: f64| 1.0 / (1.0 + (-(2.0 * x + 1.0)).exp());
    let q_max = base(1.0);
    let mut out = Vec::new();
    for a in [0.5, 1.5, 2.0, 3.0, 9.0] {
        let alpha = Order::renyi(a)?;
        let mut largest: f64 = 0.0;
        let mut bound: f64 = 0.0;
        for j in 0..=12 {
            let q0 = 10f64.powi(-j);
            let q = move |x: f64| if x == x0 { q0 } else { base(x) };
            let kappa = condition_number(&p, Weighting::Function(&q), alpha, Point::At(x0))?;
            largest = largest.max(kappa);
            // Same denominator as κ; the sweep never touches it.
            let denominator = kappa_denominator(&p, &q, a)?;
            bound = bound.max(q_max.max(q0).powf(a - 2.0) / denominator);
        }
        out.push(if a >= 2.0 {
            IdentityCheck {
                lhs: largest,
                rhs: bound,
                gap: (largest - bound - 1e-9).max(0.0),
            }
        } else {
            IdentityCheck {
                lhs: largest,
                rhs: UNSTABLE_THRESHOLD,
                gap: if largest > UNSTABLE_THRESHOLD {
                    0.0
                } else {
                    UNSTABLE_THRESHOLD - largest
                },
            }
        });
    }
    Ok(out)
}

fn kappa_denominator(p: &Distribution, q: &(dyn Fn(f64) -> f64 + Sync), a: f64) -> Result<f64> {
    let h = Measures::default().renyi_cross_entropy_functional(p, Weighting::Function(q), Order::renyi(a)?)?;
    Ok(((1.0 - a) * h).exp())
}
