//! Analytic Gaussian formulas.
//!
//! These are reference values for checking the quadrature backend. The
//! measure functions in the parent module never call into this module.

use std::f64::consts::{E, PI};

/// KL(N(m1, v1) ‖ N(m2, v2)).
pub fn gaussian_kl(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    0.5 * ((v2 / v1).ln() + (v1 + (m1 - m2).powi(2)) / v2 - 1.0)
}

/// Differential Shannon cross-entropy -∫ N(m1, v1) log N(m2, v2).
pub fn gaussian_cross_entropy(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    0.5 * (2.0 * PI * v2).ln() + (v1 + (m1 - m2).powi(2)) / (2.0 * v2)
}

/// Differential entropy of N(·, v).
pub fn gaussian_entropy(v: f64) -> f64 {
    0.5 * (2.0 * PI * E * v).ln()
}

/// Rényi entropy of order `alpha` of N(·, v).
pub fn gaussian_renyi_entropy(v: f64, alpha: f64) -> f64 {
    0.5 * (2.0 * PI * v).ln() + alpha.ln() / (2.0 * (alpha - 1.0))
}

/// D_α(N(m1, v1) ‖ N(m2, v2)), or `None` when the integral diverges
/// (α·v2 + (1 − α)·v1 <= 0).
pub fn gaussian_renyi_divergence(m1: f64, v1: f64, m2: f64, v2: f64, alpha: f64) -> Option<f64> {
    let mixed = alpha * v2 + (1.0 - alpha) * v1;
    if mixed <= 0.0 {
        return None;
    }
    let d = m1 - m2;
    Some(0.5 * (v2 / v1).ln() + (v2 / mixed).ln() / (2.0 * (alpha - 1.0)) + alpha * d * d / (2.0 * mixed))
}
