//! Batch estimators of the LkGAN and RényiGAN objectives.
//!
//! Every loss is built on a [`ValueGraph`] from `m × 1` discriminator-output
//! nodes, so the result can be differentiated with respect to whatever
//! produced those outputs.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Mlp, NodeId, Unary, ValueGraph};
use crate::measures::{MeasureError, Order};

/// Discriminator outputs are clamped into `[CLAMP_LO, CLAMP_HI]` before logs.
pub const CLAMP_LO: f64 = 1e-7;
pub const CLAMP_HI: f64 = 1.0 - 1e-7;
/// Without clamping, a log argument at or below this is rejected.
pub const LOG_FLOOR: f64 = 1e-300;
pub const DEFAULT_PENALTY_COEFFICIENT: f64 = 5.0;
/// Scheduled orders never go below this.
pub const ALPHA_FLOOR: f64 = 1e-3;
/// Scheduled orders within `ALPHA_ONE_WINDOW` of 1 are moved to 1 ± `ALPHA_ONE_SHIFT`.
pub const ALPHA_ONE_WINDOW: f64 = 1e-6;
pub const ALPHA_ONE_SHIFT: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("real batch has {real} samples but fake batch has {fake}")]
    BatchLengthMismatch { real: usize, fake: usize },
    #[error("discriminator output {value} is not a probability")]
    NotAProbability { value: f64 },
    #[error("discriminator is saturated (log argument {value})")]
    SaturatedDiscriminator { value: f64 },
    #[error(transparent)]
    Order(#[from] MeasureError),
    #[error("invalid loss parameters: {0}")]
    InvalidParams(String),
    #[error("invalid alpha schedule: {0}")]
    InvalidInterval(String),
    #[error("gradient penalty is disabled")]
    PenaltyDisabled,
    #[error(transparent)]
    Autodiff(AutodiffError),
}

impl From<AutodiffError> for LossError {
    fn from(e: AutodiffError) -> Self {
        match e {
            AutodiffError::SaturatedDiscriminator { value } => LossError::SaturatedDiscriminator { value },
            AutodiffError::EmptyBatch => LossError::EmptyBatch,
            other => LossError::Autodiff(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLkgan", into = "RawLkgan")]
pub struct LkganParams {
    k: Order,
    a: f64,
    b: f64,
    c: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLkgan {
    k: f64,
    a: f64,
    b: f64,
    c: f64,
}

impl TryFrom<RawLkgan> for LkganParams {
    type Error = LossError;
    fn try_from(r: RawLkgan) -> Result<Self, LossError> {
        LkganParams::new(r.k, r.a, r.b, r.c)
    }
}

impl From<LkganParams> for RawLkgan {
    fn from(p: LkganParams) -> Self {
        RawLkgan {
            k: p.k(),
            a: p.a,
            b: p.b,
            c: p.c,
        }
    }
}

impl LkganParams {
    pub fn new(k: f64, a: f64, b: f64, c: f64) -> Result<Self, LossError> {
        let k = Order::vajda(k)?;
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(LossError::InvalidParams(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(Self { k, a, b, c })
    }

    /// a = 0.6, b = 0.4, c = 0.5
    pub fn v1(k: f64) -> Result<Self, LossError> {
        Self::new(k, 0.6, 0.4, 0.5)
    }

    /// a = 1, b = 0, c = 0.5
    pub fn v2(k: f64) -> Result<Self, LossError> {
        Self::new(k, 1.0, 0.0, 0.5)
    }

    /// a = 0, b = 1, c = 1
    pub fn v3(k: f64) -> Result<Self, LossError> {
        Self::new(k, 0.0, 1.0, 1.0)
    }

    pub fn k(&self) -> f64 {
        self.k.value()
    }

    pub fn order(&self) -> Order {
        self.k
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Whether `a − b = 2(c − b)`, the condition under which the optimal
    /// generator loss reduces to a Pearson-Vajda divergence.
    pub fn satisfies_divergence_constraint(&self) -> bool {
        ((self.a - self.b) - 2.0 * (self.c - self.b)).abs() <= 1e-12
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRenyigan", into = "RawRenyigan")]
pub struct RenyiganParams {
    alpha: Order,
    pub l1_normalized: bool,
    alpha_schedule: Option<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRenyigan {
    alpha: f64,
    #[serde(default)]
    l1_normalized: bool,
    #[serde(default)]
    alpha_schedule: Option<[f64; 2]>,
}

impl TryFrom<RawRenyigan> for RenyiganParams {
    type Error = LossError;
    fn try_from(r: RawRenyigan) -> Result<Self, LossError> {
        RenyiganParams::new(r.alpha, r.l1_normalized, r.alpha_schedule.map(|[a, b]| (a, b)))
    }
}

impl From<RenyiganParams> for RawRenyigan {
    fn from(p: RenyiganParams) -> Self {
        RawRenyigan {
            alpha: p.alpha.value(),
            l1_normalized: p.l1_normalized,
            alpha_schedule: p.alpha_schedule.map(|(a, b)| [a, b]),
        }
    }
}

impl RenyiganParams {
    pub fn new(alpha: f64, l1_normalized: bool, alpha_schedule: Option<(f64, f64)>) -> Result<Self, LossError> {
        let alpha = Order::renyi(alpha)?;
        if let Some((b1, b2)) = alpha_schedule {
            check_interval(b1, b2)?;
        }
        Ok(Self {
            alpha,
            l1_normalized,
            alpha_schedule,
        })
    }

    pub fn alpha(&self) -> Order {
        self.alpha
    }

    pub fn alpha_schedule(&self) -> Option<(f64, f64)> {
        self.alpha_schedule
    }

    /// The order in effect at `epoch`: the fixed α, or the scheduled one.
    pub fn alpha_at(&self, epoch: usize, total_epochs: usize) -> Result<Order, LossError> {
        match self.alpha_schedule {
            Some(s) => schedule_alpha(s, epoch, total_epochs),
            None => Ok(self.alpha),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    pub enabled: bool,
    #[serde(default = "default_coefficient")]
    pub coefficient: f64,
}

fn default_coefficient() -> f64 {
    DEFAULT_PENALTY_COEFFICIENT
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            coefficient: DEFAULT_PENALTY_COEFFICIENT,
        }
    }
}

impl PenaltyConfig {
    pub fn enabled(coefficient: f64) -> Self {
        Self {
            enabled: true,
            coefficient,
        }
    }

    pub fn validate(&self) -> Result<(), LossError> {
        if !(self.coefficient >= 0.0 && self.coefficient.is_finite()) {
            return Err(LossError::InvalidParams(format!(
                "penalty coefficient {} must be >= 0",
                self.coefficient
            )));
        }
        Ok(())
    }
}

fn batch_len(g: &ValueGraph, d: NodeId) -> Result<usize, LossError> {
    let v = g.value(d);
    if v.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    for &x in v.iter() {
        if !(0.0..=1.0).contains(&x) {
            return Err(LossError::NotAProbability { value: x });
        }
    }
    Ok(v.len())
}

fn same_len(g: &ValueGraph, real: NodeId, fake: NodeId) -> Result<(), LossError> {
    let (r, f) = (batch_len(g, real)?, batch_len(g, fake)?);
    if r != f {
        return Err(LossError::BatchLengthMismatch { real: r, fake: f });
    }
    Ok(())
}

/// Number of entries that clamping to `[CLAMP_LO, CLAMP_HI]` would change.
pub fn clamp_activations(values: &[f64]) -> usize {
    values.iter().filter(|&&v| !(CLAMP_LO..=CLAMP_HI).contains(&v)).count()
}

/// `log(d)` (or `log(1 − d)` when `complement`), optionally clamping `d` first.
fn guarded_log(g: &mut ValueGraph, d: NodeId, complement: bool, clamp: bool) -> Result<NodeId, LossError> {
    let src = if clamp { g.clamp(d, CLAMP_LO, CLAMP_HI)? } else { d };
    let arg = if complement {
        let neg = g.scale(src, -1.0)?;
        g.add_scalar(neg, 1.0)?
    } else {
        src
    };
    if !clamp {
        if let Some(&bad) = g.value(arg).iter().find(|&&v| v <= LOG_FLOOR) {
            return Err(LossError::SaturatedDiscriminator { value: bad });
        }
    }
    Ok(g.unary(arg, Unary::Log)?)
}

/// (1/m)·Σ[½(d_real − b)² + ½(d_fake − a)²]
pub fn lkgan_disc_loss(
    g: &mut ValueGraph,
    d_real: NodeId,
    d_fake: NodeId,
    p: &LkganParams,
) -> Result<NodeId, LossError> {
    same_len(g, d_real, d_fake)?;
    let half_sq_mean = |g: &mut ValueGraph, d: NodeId, target: f64| -> Result<NodeId, LossError> {
        let shifted = g.add_scalar(d, -target)?;
        let sq = g.unary(shifted, Unary::Square)?;
        let m = g.mean(sq)?;
        Ok(g.scale(m, 0.5)?)
    };
    let r = half_sq_mean(g, d_real, p.b)?;
    let f = half_sq_mean(g, d_fake, p.a)?;
    Ok(g.add(r, f)?)
}

/// (1/m)·Σ|d_fake − c|^k
pub fn lkgan_gen_loss(g: &mut ValueGraph, d_fake: NodeId, p: &LkganParams) -> Result<NodeId, LossError> {
    batch_len(g, d_fake)?;
    let shifted = g.add_scalar(d_fake, -p.c)?;
    let pow = g.unary(shifted, Unary::AbsPow(p.k()))?;
    Ok(g.mean(pow)?)
}

/// The real-sample term (1/m)·Σ|d_real − c|^k of the population generator
/// objective. It does not depend on the generator and is only logged.
pub fn lkgan_gen_real_term(d_real: &[f64], p: &LkganParams) -> Result<f64, LossError> {
    if d_real.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    Ok(d_real.iter().map(|d| (d - p.c).abs().powf(p.k())).sum::<f64>() / d_real.len() as f64)
}

/// −(1/m)·Σ[log d_real + log(1 − d_fake)]
pub fn gan_disc_loss(g: &mut ValueGraph, d_real: NodeId, d_fake: NodeId, clamp: bool) -> Result<NodeId, LossError> {
    same_len(g, d_real, d_fake)?;
    let lr = guarded_log(g, d_real, false, clamp)?;
    let lf = guarded_log(g, d_fake, true, clamp)?;
    let s = g.add(lr, lf)?;
    let m = g.mean(s)?;
    Ok(g.scale(m, -1.0)?)
}

/// (1/(α−1))·log[(1/m)·Σ(1 − d_fake)^{α−1}], or with `l1` the absolute value
/// of that plus log 2.
pub fn renyigan_gen_loss(
    g: &mut ValueGraph,
    d_fake: NodeId,
    alpha: Order,
    l1: bool,
    clamp: bool,
) -> Result<NodeId, LossError> {
    let a = Order::renyi(alpha.value())?.value();
    batch_len(g, d_fake)?;
    let log_one_minus = guarded_log(g, d_fake, true, clamp)?;
    // (1 − d)^{α−1} = exp((α−1)·log(1 − d)) keeps the graph in log space.
    let scaled = g.scale(log_one_minus, a - 1.0)?;
    let pow = g.unary(scaled, Unary::Exp)?;
    let mean = g.mean(pow)?;
    let log_mean = g.unary(mean, Unary::Log)?;
    let value = g.scale(log_mean, 1.0 / (a - 1.0))?;
    if l1 {
        let shifted = g.add_scalar(value, LN_2)?;
        Ok(g.unary(shifted, Unary::Abs)?)
    } else {
        Ok(value)
    }
}

/// (1/m)·Σ log(1 − d_fake), the α → 1 limit of [`renyigan_gen_loss`] and the
/// classical (saturating) generator objective; `l1` wraps it as |· + log 2|.
pub fn gan_gen_loss(g: &mut ValueGraph, d_fake: NodeId, l1: bool, clamp: bool) -> Result<NodeId, LossError> {
    batch_len(g, d_fake)?;
    let l = guarded_log(g, d_fake, true, clamp)?;
    let value = g.mean(l)?;
    if l1 {
        let shifted = g.add_scalar(value, LN_2)?;
        Ok(g.unary(shifted, Unary::Abs)?)
    } else {
        Ok(value)
    }
}

/// coefficient × (1/m)·Σ‖∇_x logit(D(x_i))‖² over the real batch, as a node
/// differentiable in the discriminator parameters `params`.
pub fn gradient_penalty(
    g: &mut ValueGraph,
    net: &Mlp,
    params: &[NodeId],
    real_batch: &ndarray::Array2<f64>,
    cfg: &PenaltyConfig,
) -> Result<NodeId, LossError> {
    if !cfg.enabled {
        return Err(LossError::PenaltyDisabled);
    }
    cfg.validate()?;
    let node = net.input_gradient_norm_sq_node(g, params, real_batch)?;
    Ok(g.scale(node, cfg.coefficient)?)
}

fn check_interval(b1: f64, b2: f64) -> Result<(), LossError> {
    if !(b1.is_finite() && b2.is_finite() && 0.0 <= b1 && b1 < b2) {
        return Err(LossError::InvalidInterval(format!("[{b1}, {b2}] needs 0 <= β₁ < β₂")));
    }
    Ok(())
}

/// Linear sweep from β₁ at epoch 0 to β₂ at the last epoch.
///
/// Values below [`ALPHA_FLOOR`] are raised to it, and values within
/// [`ALPHA_ONE_WINDOW`] of 1 move to 1 − [`ALPHA_ONE_SHIFT`] or
/// 1 + [`ALPHA_ONE_SHIFT`] on their own side (exactly 1 goes up).
pub fn schedule_alpha(schedule: (f64, f64), epoch: usize, total_epochs: usize) -> Result<Order, LossError> {
    let (b1, b2) = schedule;
    check_interval(b1, b2)?;
    if epoch >= total_epochs {
        return Err(LossError::InvalidInterval(format!(
            "epoch {epoch} is outside 0..{total_epochs}"
        )));
    }
    let frac = if total_epochs == 1 {
        0.0
    } else {
        epoch as f64 / (total_epochs - 1) as f64
    };
    let mut alpha = (b1 + frac * (b2 - b1)).max(ALPHA_FLOOR);
    if (alpha - 1.0).abs() < ALPHA_ONE_WINDOW {
        alpha = if alpha < 1.0 {
            1.0 - ALPHA_ONE_SHIFT
        } else {
            1.0 + ALPHA_ONE_SHIFT
        };
    }
    Ok(Order::renyi(alpha)?)
}
