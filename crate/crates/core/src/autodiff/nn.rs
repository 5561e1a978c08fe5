//! Dense feed-forward networks on top of [`ValueGraph`].

use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use super::graph::{NodeId, Unary, ValueGraph};
use super::AutodiffError;

/// Standard deviation of the Gaussian used to initialize every parameter.
pub const INIT_STD: f64 = 0.01;
pub const DEFAULT_HIDDEN: usize = 64;
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;
/// A discriminator output this close to 0 or 1 has no usable logit.
pub const SATURATION_EPS: f64 = 1e-12;

const CHECKPOINT_FORMAT: &str = "renyigan-lab/mlp";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu { slope: f64 },
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    fn unary(self) -> Option<Unary> {
        match self {
            Activation::LeakyRelu { slope } => Some(Unary::LeakyRelu(slope)),
            Activation::Tanh => Some(Unary::Tanh),
            Activation::Sigmoid => Some(Unary::Sigmoid),
            Activation::Identity => None,
        }
    }

    fn apply(self, x: f64) -> f64 {
        self.unary().map_or(x, |f| f.eval(x))
    }
}

/// One dense layer: `act(x·W + b)` with `W` of shape `in × out` and `b` of
/// shape `1 × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Option<Array2<f64>>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// A forward pass recorded on a graph.
#[derive(Debug, Clone)]
pub struct Trace {
    pub input: NodeId,
    /// Parameter leaves in [`Mlp::params`] order.
    pub params: Vec<NodeId>,
    /// Last layer before its activation (the logit, for a discriminator).
    pub pre_output: NodeId,
    pub output: NodeId,
}

/// Squared input-gradient norms of a discriminator's logit, with the
/// parameter gradient of their batch mean.
#[derive(Debug, Clone)]
pub struct InputGradNorm {
    pub per_sample: Vec<f64>,
    pub mean: f64,
    /// ∇_θ of `mean`, in [`Mlp::params`] order.
    pub param_grads: Vec<Array2<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointLayer {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Option<Vec<f64>>,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    layers: Vec<CheckpointLayer>,
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
    Array2::from_shape_simple_fn((rows, cols), || normal.sample(rng))
}

impl Mlp {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self, AutodiffError> {
        if layers.is_empty() {
            return Err(AutodiffError::InvalidNetwork(
                "a network needs at least one layer".into(),
            ));
        }
        for (i, layer) in layers.iter().enumerate() {
            let out = layer.weight.ncols();
            if let Some(b) = &layer.bias {
                if b.dim() != (1, out) {
                    return Err(AutodiffError::InvalidNetwork(format!(
                        "layer {i}: bias shape {:?}, expected (1, {out})",
                        b.dim()
                    )));
                }
            }
            if let Some(next) = layers.get(i + 1) {
                if next.weight.nrows() != out {
                    return Err(AutodiffError::InvalidNetwork(format!(
                        "layer {} takes {} inputs but layer {i} produces {out}",
                        i + 1,
                        next.weight.nrows()
                    )));
                }
            }
        }
        Ok(Self { layers })
    }

    /// Fully connected network through `sizes`, every weight and bias drawn
    /// from N(0, 0.01²).
    pub fn random<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self, AutodiffError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(AutodiffError::InvalidNetwork(format!("bad layer sizes {sizes:?}")));
        }
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| Layer {
                weight: gaussian_matrix(sizes[i], sizes[i + 1], rng),
                bias: Some(gaussian_matrix(1, sizes[i + 1], rng)),
                activation: if i + 1 == n { output } else { hidden },
            })
            .collect();
        Self::from_layers(layers)
    }

    /// Three-layer leaky-ReLU network ending in a single sigmoid unit.
    pub fn discriminator<R: Rng + ?Sized>(input_dim: usize, hidden: usize, rng: &mut R) -> Result<Self, AutodiffError> {
        Self::random(
            &[input_dim, hidden, hidden, 1],
            Activation::LeakyRelu {
                slope: DEFAULT_LEAKY_SLOPE,
            },
            Activation::Sigmoid,
            rng,
        )
    }

    /// Three-layer leaky-ReLU network with the given output activation.
    pub fn generator<R: Rng + ?Sized>(
        latent_dim: usize,
        hidden: usize,
        output_dim: usize,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self, AutodiffError> {
        Self::random(
            &[latent_dim, hidden, hidden, output_dim],
            Activation::LeakyRelu {
                slope: DEFAULT_LEAKY_SLOPE,
            },
            output,
            rng,
        )
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].weight.ncols()
    }

    /// Scalar output squashed by a final sigmoid.
    pub fn is_discriminator(&self) -> bool {
        self.output_dim() == 1 && self.layers[self.layers.len() - 1].activation == Activation::Sigmoid
    }

    /// Parameters in layer order, weight before bias.
    pub fn params(&self) -> Vec<&Array2<f64>> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(&l.weight);
            if let Some(b) = &l.bias {
                out.push(b);
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.weight);
            if let Some(b) = &mut l.bias {
                out.push(b);
            }
        }
        out
    }

    pub fn param_shapes(&self) -> Vec<(usize, usize)> {
        self.params().iter().map(|p| p.dim()).collect()
    }

    fn check_batch(&self, batch: &Array2<f64>) -> Result<(), AutodiffError> {
        if batch.nrows() == 0 {
            return Err(AutodiffError::EmptyBatch);
        }
        if batch.ncols() != self.input_dim() {
            return Err(AutodiffError::ShapeMismatch {
                op: "mlp input",
                left: (batch.nrows(), self.input_dim()),
                right: batch.dim(),
            });
        }
        Ok(())
    }

    /// Plain evaluation without recording a graph.
    pub fn forward(&self, batch: &Array2<f64>) -> Result<Array2<f64>, AutodiffError> {
        self.check_batch(batch)?;
        let mut h = batch.clone();
        for l in &self.layers {
            let mut z = h.dot(&l.weight);
            if let Some(b) = &l.bias {
                z += b;
            }
            let act = l.activation;
            z.mapv_inplace(|x| act.apply(x));
            h = z;
        }
        Ok(h)
    }

    /// Adds this network's parameters to `g` as leaves.
    pub fn bind(&self, g: &mut ValueGraph) -> Vec<NodeId> {
        self.params().into_iter().map(|p| g.leaf(p.clone())).collect()
    }

    /// Records a forward pass of `input` through parameter leaves from
    /// [`Mlp::bind`].
    pub fn forward_on(&self, g: &mut ValueGraph, params: &[NodeId], input: NodeId) -> Result<Trace, AutodiffError> {
        self.check_batch(g.value(input))?;
        if params.len() != self.params().len() {
            return Err(AutodiffError::InvalidNetwork(format!(
                "{} parameter nodes for a network with {} parameters",
                params.len(),
                self.params().len()
            )));
        }
        let mut it = params.iter().copied();
        let mut h = input;
        let mut pre = input;
        for l in &self.layers {
            let w = it.next().expect("counted above");
            let mut z = g.matmul(h, w)?;
            if l.bias.is_some() {
                let b = it.next().expect("counted above");
                z = g.add_row(z, b)?;
            }
            pre = z;
            h = match l.activation.unary() {
                Some(f) => g.unary(z, f)?,
                None => z,
            };
        }
        Ok(Trace {
            input,
            params: params.to_vec(),
            pre_output: pre,
            output: h,
        })
    }

    /// Builds a fresh graph with the batch and all parameters as leaves.
    pub fn trace(&self, batch: &Array2<f64>) -> Result<(ValueGraph, Trace), AutodiffError> {
        let mut g = ValueGraph::new();
        let params = self.bind(&mut g);
        let input = g.leaf(batch.clone());
        let trace = self.forward_on(&mut g, &params, input)?;
        Ok((g, trace))
    }

    /// ‖∇_x logit(D(x))‖² for each row of `x` and the parameter gradient of
    /// its batch mean (forward-over-reverse).
    pub fn input_gradient_norm_sq(&self, x: &Array2<f64>) -> Result<InputGradNorm, AutodiffError> {
        if !self.is_discriminator() {
            return Err(AutodiffError::NotADiscriminator);
        }
        let (mut g, trace) = self.trace(x)?;
        for &d in g.value(trace.output).iter() {
            if d <= SATURATION_EPS || d >= 1.0 - SATURATION_EPS {
                return Err(AutodiffError::SaturatedDiscriminator { value: d });
            }
        }
        // Each logit depends on its own row only, so ∇_X of the summed
        // logits stacks the per-sample input gradients.
        let total = g.sum(trace.pre_output)?;
        let grads = g.backward(total)?;
        let gx = grads.wrt(trace.input);
        let m = x.nrows() as f64;
        let per_sample: Vec<f64> = gx.rows().into_iter().map(|r| r.dot(&r)).collect();
        let mean = per_sample.iter().sum::<f64>() / m;

        // ∇_θ Σ‖G_i‖² = 2·Σ G_ij ∂G_ij/∂θ = 2·d/dε ∇_θ L(θ, X + ε·G).
        let dot = g.tangents(&[(trace.input, gx)])?;
        let (_, grad_dot) = g.backward_with_tangents(total, &dot)?;
        let param_grads = trace.params.iter().map(|&p| grad_dot.wrt(p) * (2.0 / m)).collect();
        Ok(InputGradNorm {
            per_sample,
            mean,
            param_grads,
        })
    }

    /// [`Mlp::input_gradient_norm_sq`] as a scalar node on `g`, differentiable
    /// with respect to `params` (leaves from [`Mlp::bind`] on the same graph).
    pub fn input_gradient_norm_sq_node(
        &self,
        g: &mut ValueGraph,
        params: &[NodeId],
        x: &Array2<f64>,
    ) -> Result<NodeId, AutodiffError> {
        let r = self.input_gradient_norm_sq(x)?;
        if params.len() != r.param_grads.len() {
            return Err(AutodiffError::InvalidNetwork("parameter node count mismatch".into()));
        }
        g.fused_scalar(r.mean, params.iter().copied().zip(r.param_grads).collect())
    }

    /// Discriminator logits `log(D/(1 − D))` evaluated directly (no graph).
    pub fn logits(&self, x: &Array2<f64>) -> Result<Array2<f64>, AutodiffError> {
        let (g, trace) = self.trace(x)?;
        Ok(g.value(trace.pre_output).clone())
    }

    pub fn to_json(&self) -> Result<String, AutodiffError> {
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            layers: self
                .layers
                .iter()
                .map(|l| CheckpointLayer {
                    rows: l.weight.nrows(),
                    cols: l.weight.ncols(),
                    weights: l.weight.iter().copied().collect(),
                    bias: l.bias.as_ref().map(|b| b.iter().copied().collect()),
                    activation: l.activation,
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&ck)?)
    }

    pub fn from_json(text: &str) -> Result<Self, AutodiffError> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(AutodiffError::Checkpoint(format!("unknown format {:?}", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(AutodiffError::Checkpoint(format!("unsupported version {}", ck.version)));
        }
        let layers = ck
            .layers
            .into_iter()
            .map(|l| {
                let weight = Array2::from_shape_vec((l.rows, l.cols), l.weights)
                    .map_err(|e| AutodiffError::Checkpoint(e.to_string()))?;
                let bias = l
                    .bias
                    .map(|b| Array2::from_shape_vec((1, b.len()), b))
                    .transpose()
                    .map_err(|e| AutodiffError::Checkpoint(e.to_string()))?;
                Ok(Layer {
                    weight,
                    bias,
                    activation: l.activation,
                })
            })
            .collect::<Result<Vec<_>, AutodiffError>>()?;
        Self::from_layers(layers)
    }

    pub fn save(&self, path: &Path) -> Result<(), AutodiffError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, AutodiffError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn single(weight: Array2<f64>, bias: Option<Array2<f64>>, activation: Activation) -> Mlp {
        Mlp::from_layers(vec![Layer {
            weight,
            bias,
            activation,
        }])
        .unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let net = single(Array2::eye(2), Some(array![[0.0, 0.0]]), Activation::Identity);
        assert_eq!(net.forward(&array![[1.0, 2.0]]).unwrap(), array![[1.0, 2.0]]);
    }

    #[test]
    fn zero_sigmoid_unit_outputs_half() {
        let net = single(array![[0.0], [0.0], [0.0]], Some(array![[0.0]]), Activation::Sigmoid);
        let out = net.forward(&array![[5.0, -3.0, 1e3]]).unwrap();
        assert_eq!(out, array![[0.5]]);
    }

    #[test]
    fn leaky_relu_layer() {
        let net = single(Array2::eye(2), None, Activation::LeakyRelu { slope: 0.2 });
        assert_eq!(net.forward(&array![[-1.0, 3.0]]).unwrap(), array![[-0.2, 3.0]]);
    }

    #[test]
    fn graph_forward_matches_plain_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Mlp::discriminator(3, 8, &mut rng).unwrap();
        let x = array![[0.1, -0.2, 0.3], [1.0, 2.0, -1.0]];
        let (g, t) = net.trace(&x).unwrap();
        assert_eq!(g.value(t.output), &net.forward(&x).unwrap());
        assert!(net.is_discriminator());
    }

    #[test]
    fn shape_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Mlp::discriminator(3, 8, &mut rng).unwrap();
        assert!(matches!(
            net.forward(&array![[1.0, 2.0]]),
            Err(AutodiffError::ShapeMismatch { .. })
        ));
        assert!(matches!(
            net.forward(&Array2::zeros((0, 3))),
            Err(AutodiffError::EmptyBatch)
        ));
        let bad = Mlp::from_layers(vec![
            Layer {
                weight: Array2::zeros((2, 3)),
                bias: None,
                activation: Activation::Tanh,
            },
            Layer {
                weight: Array2::zeros((4, 1)),
                bias: None,
                activation: Activation::Sigmoid,
            },
        ]);
        assert!(matches!(bad, Err(AutodiffError::InvalidNetwork(_))));
    }

    #[test]
    fn initialization_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = Mlp::generator(8, 64, 2, Activation::Identity, &mut rng).unwrap();
        let all: Vec<f64> = net.params().iter().flat_map(|p| p.iter().copied()).collect();
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let sd = (all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-3 && (sd - INIT_STD).abs() < 1e-3, "{mean} {sd}");
        assert_eq!(net.layers().len(), 3);
    }

    #[test]
    fn constant_discriminator_has_zero_penalty() {
        let net = single(array![[0.0], [0.0]], Some(array![[0.0]]), Activation::Sigmoid);
        let r = net.input_gradient_norm_sq(&array![[1.0, 2.0], [-3.0, 0.5]]).unwrap();
        assert_eq!(r.mean, 0.0);
        assert!(r.param_grads.iter().all(|g| g.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn linear_logit_penalty_is_weight_norm() {
        let net = single(array![[3.0], [4.0]], None, Activation::Sigmoid);
        let x = array![[0.1, -0.2], [0.3, 0.05], [0.0, 0.0]];
        let r = net.input_gradient_norm_sq(&x).unwrap();
        for v in &r.per_sample {
            assert!((v - 25.0).abs() < 1e-12);
        }
        // ∇_w mean‖w‖² = 2w
        assert!((&r.param_grads[0] - &array![[6.0], [8.0]])
            .iter()
            .all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn saturated_discriminator_is_rejected() {
        let net = single(array![[100.0]], None, Activation::Sigmoid);
        assert!(matches!(
            net.input_gradient_norm_sq(&array![[1.0]]),
            Err(AutodiffError::SaturatedDiscriminator { .. })
        ));
        let gen = single(array![[1.0]], None, Activation::Identity);
        assert!(matches!(
            gen.input_gradient_norm_sq(&array![[1.0]]),
            Err(AutodiffError::NotADiscriminator)
        ));
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let net = Mlp::generator(8, 16, 2, Activation::Tanh, &mut rng).unwrap();
        let back = Mlp::from_json(&net.to_json().unwrap()).unwrap();
        for (a, b) in net.params().iter().zip(back.params()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert_eq!(net, back);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        net.save(&path).unwrap();
        assert_eq!(Mlp::load(&path).unwrap(), net);
    }

    #[test]
    fn checkpoint_header_is_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::discriminator(2, 4, &mut rng).unwrap();
        let text = net.to_json().unwrap().replace("\"version\": 1", "\"version\": 99");
        assert!(matches!(Mlp::from_json(&text), Err(AutodiffError::Checkpoint(_))));
    }
}
