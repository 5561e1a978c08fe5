//! Reverse-mode automatic differentiation, dense MLPs and Adam.

mod adam;
mod graph;
mod nn;

pub use adam::{AdamConfig, AdamState};
pub use graph::{sigmoid, Gradients, NodeId, Unary, ValueGraph};
pub use nn::{
    Activation, InputGradNorm, Layer, Mlp, Trace, DEFAULT_HIDDEN, DEFAULT_LEAKY_SLOPE, INIT_STD, SATURATION_EPS,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("backward needs a 1x1 output, got shape {shape:?}")]
    NonScalarOutput { shape: (usize, usize) },
    #[error("node {0} is not on this graph")]
    UnknownNode(usize),
    #[error("node {0} is not a leaf")]
    NotALeaf(usize),
    #[error("node {0} does not support tangent propagation")]
    TangentUnsupported(usize),
    #[error("expected {expected} tangents, got {got}")]
    TangentLength { expected: usize, got: usize },
    #[error("reduction over an empty tensor")]
    EmptyTensor,
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("network is not a discriminator (scalar sigmoid output)")]
    NotADiscriminator,
    #[error("discriminator output {value} is saturated")]
    SaturatedDiscriminator { value: f64 },
    #[error("invalid optimizer settings: {0}")]
    InvalidOptimizer(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[cfg(test)]
mod tests;
