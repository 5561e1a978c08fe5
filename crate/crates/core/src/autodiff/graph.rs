//! Tape-based reverse-mode differentiation over dense 2-D tensors.
//!
//! Besides the usual reverse sweep, the tape supports a forward tangent sweep
//! (Jacobian-vector product) and a combined reverse sweep that carries the
//! tangent of every adjoint. The latter gives directional second derivatives
//! of the form `d/dε ∇f(x + ε·v)`, which is all the gradient penalty needs.

use ndarray::{Array2, Axis};

use super::AutodiffError;

/// Index of a node on a [`ValueGraph`] tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Elementwise scalar functions with known first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Unary {
    LeakyRelu(f64),
    Tanh,
    Sigmoid,
    Log,
    Exp,
    Square,
    Abs,
    /// `|x|^k`
    AbsPow(f64),
    /// `x^p`, defined for `x > 0` (and `x = 0` when `p >= 1`).
    Pow(f64),
}

impl Unary {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Unary::LeakyRelu(s) => {
                if x >= 0.0 {
                    x
                } else {
                    s * x
                }
            }
            Unary::Tanh => x.tanh(),
            Unary::Sigmoid => sigmoid(x),
            Unary::Log => x.ln(),
            Unary::Exp => x.exp(),
            Unary::Square => x * x,
            Unary::Abs => x.abs(),
            Unary::AbsPow(k) => x.abs().powf(k),
            Unary::Pow(p) => x.powf(p),
        }
    }

    /// First derivative. Kinks use the conventions leaky_relu'(0) = 1 and
    /// d|x|/dx at 0 = 0.
    pub fn d1(self, x: f64) -> f64 {
        match self {
            Unary::LeakyRelu(s) => {
                if x >= 0.0 {
                    1.0
                } else {
                    s
                }
            }
            Unary::Tanh => 1.0 - x.tanh().powi(2),
            Unary::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Unary::Log => x.recip(),
            Unary::Exp => x.exp(),
            Unary::Square => 2.0 * x,
            Unary::Abs => sign(x),
            Unary::AbsPow(k) => {
                if x == 0.0 {
                    if k >= 1.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    k * x.abs().powf(k - 1.0) * sign(x)
                }
            }
            Unary::Pow(p) => p * x.powf(p - 1.0),
        }
    }

    pub fn d2(self, x: f64) -> f64 {
        match self {
            Unary::LeakyRelu(_) | Unary::Abs => 0.0,
            Unary::Tanh => {
                let t = x.tanh();
                -2.0 * t * (1.0 - t * t)
            }
            Unary::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s) * (1.0 - 2.0 * s)
            }
            Unary::Log => -(x * x).recip(),
            Unary::Exp => x.exp(),
            Unary::Square => 2.0,
            Unary::AbsPow(k) => {
                if x == 0.0 {
                    if k == 2.0 {
                        2.0
                    } else if k == 1.0 || k > 2.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    k * (k - 1.0) * x.abs().powf(k - 2.0)
                }
            }
            Unary::Pow(p) => p * (p - 1.0) * x.powf(p - 2.0),
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Logistic sigmoid, evaluated without overflow for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    /// `a + row`, with the 1×n `row` broadcast over the rows of `a`.
    AddRow(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    AddScalar(NodeId),
    Unary(NodeId, Unary),
    Mean(NodeId),
    Sum(NodeId),
    Clamp(NodeId, f64, f64),
    /// Precomputed 1×1 value with fixed partial derivatives.
    Fused(Vec<(NodeId, Array2<f64>)>),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Array2<f64>,
}

/// Append-only computation tape. Inputs always precede outputs, so the tape
/// order is a topological order.
#[derive(Debug, Clone, Default)]
pub struct ValueGraph {
    nodes: Vec<Node>,
}

/// Result of a reverse sweep: one adjoint per node of the tape.
#[derive(Debug, Clone)]
pub struct Gradients {
    adjoints: Vec<Option<Array2<f64>>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// Gradient with respect to `id`; exact zeros if `id` does not influence
    /// the output.
    pub fn wrt(&self, id: NodeId) -> Array2<f64> {
        match &self.adjoints[id.0] {
            Some(g) => g.clone(),
            None => Array2::zeros(self.shapes[id.0]),
        }
    }
}

fn shape(a: &Array2<f64>) -> (usize, usize) {
    a.dim()
}

fn accumulate(slot: &mut Option<Array2<f64>>, delta: Array2<f64>) {
    match slot {
        Some(existing) => *existing += &delta,
        None => *slot = Some(delta),
    }
}

fn scalar(v: f64) -> Array2<f64> {
    Array2::from_elem((1, 1), v)
}

impl ValueGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Array2<f64>) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    fn node(&self, id: NodeId) -> Result<&Node, AutodiffError> {
        self.nodes.get(id.0).ok_or(AutodiffError::UnknownNode(id.0))
    }

    fn mismatch(op: &'static str, a: (usize, usize), b: (usize, usize)) -> AutodiffError {
        AutodiffError::ShapeMismatch { op, left: a, right: b }
    }

    pub fn leaf(&mut self, value: Array2<f64>) -> NodeId {
        self.push(Op::Leaf, value)
    }

    pub fn scalar_leaf(&mut self, value: f64) -> NodeId {
        self.leaf(scalar(value))
    }

    pub fn value(&self, id: NodeId) -> &Array2<f64> {
        &self.nodes[id.0].value
    }

    /// The single entry of a 1×1 node.
    pub fn scalar_value(&self, id: NodeId) -> Result<f64, AutodiffError> {
        let v = &self.node(id)?.value;
        if v.dim() != (1, 1) {
            return Err(AutodiffError::NonScalarOutput { shape: v.dim() });
        }
        Ok(v[[0, 0]])
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let (va, vb) = (&self.node(a)?.value, &self.node(b)?.value);
        if va.ncols() != vb.nrows() {
            return Err(Self::mismatch("matmul", shape(va), shape(vb)));
        }
        let v = va.dot(vb);
        Ok(self.push(Op::MatMul(a, b), v))
    }

    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId, AutodiffError> {
        let (va, vr) = (&self.node(a)?.value, &self.node(row)?.value);
        if vr.nrows() != 1 || vr.ncols() != va.ncols() {
            return Err(Self::mismatch("add_row", shape(va), shape(vr)));
        }
        let v = va + vr;
        Ok(self.push(Op::AddRow(a, row), v))
    }

    fn same_shape(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<(), AutodiffError> {
        let (sa, sb) = (shape(&self.node(a)?.value), shape(&self.node(b)?.value));
        if sa != sb {
            return Err(Self::mismatch(op, sa, sb));
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.same_shape("add", a, b)?;
        let v = &self.nodes[a.0].value + &self.nodes[b.0].value;
        Ok(self.push(Op::Add(a, b), v))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.same_shape("sub", a, b)?;
        let v = &self.nodes[a.0].value - &self.nodes[b.0].value;
        Ok(self.push(Op::Sub(a, b), v))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.same_shape("mul", a, b)?;
        let v = &self.nodes[a.0].value * &self.nodes[b.0].value;
        Ok(self.push(Op::Mul(a, b), v))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> Result<NodeId, AutodiffError> {
        let v = &self.node(a)?.value * c;
        Ok(self.push(Op::Scale(a, c), v))
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> Result<NodeId, AutodiffError> {
        let v = &self.node(a)?.value + c;
        Ok(self.push(Op::AddScalar(a), v))
    }

    pub fn unary(&mut self, a: NodeId, f: Unary) -> Result<NodeId, AutodiffError> {
        let v = self.node(a)?.value.mapv(|x| f.eval(x));
        Ok(self.push(Op::Unary(a, f), v))
    }

    pub fn mean(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let va = &self.node(a)?.value;
        if va.is_empty() {
            return Err(AutodiffError::EmptyTensor);
        }
        let v = scalar(va.sum() / va.len() as f64);
        Ok(self.push(Op::Mean(a), v))
    }

    pub fn sum(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let v = scalar(self.node(a)?.value.sum());
        Ok(self.push(Op::Sum(a), v))
    }

    /// Elementwise clamp to `[lo, hi]`; the derivative is 0 where clamping
    /// took effect.
    pub fn clamp(&mut self, a: NodeId, lo: f64, hi: f64) -> Result<NodeId, AutodiffError> {
        let v = self.node(a)?.value.mapv(|x| x.clamp(lo, hi));
        Ok(self.push(Op::Clamp(a, lo, hi), v))
    }

    /// A scalar node whose value and partial derivatives were computed
    /// elsewhere. Reverse sweeps propagate through it; tangent sweeps do not.
    pub fn fused_scalar(&mut self, value: f64, partials: Vec<(NodeId, Array2<f64>)>) -> Result<NodeId, AutodiffError> {
        for (id, g) in &partials {
            let s = shape(&self.node(*id)?.value);
            if s != g.dim() {
                return Err(Self::mismatch("fused_scalar", s, g.dim()));
            }
        }
        Ok(self.push(Op::Fused(partials), scalar(value)))
    }

    fn check_output(&self, out: NodeId) -> Result<(), AutodiffError> {
        let s = shape(&self.node(out)?.value);
        if s != (1, 1) {
            return Err(AutodiffError::NonScalarOutput { shape: s });
        }
        Ok(())
    }

    fn shapes(&self) -> Vec<(usize, usize)> {
        self.nodes.iter().map(|n| n.value.dim()).collect()
    }

    /// Reverse sweep from a 1×1 output.
    pub fn backward(&self, out: NodeId) -> Result<Gradients, AutodiffError> {
        self.check_output(out)?;
        let mut adj: Vec<Option<Array2<f64>>> = vec![None; out.0 + 1];
        adj[out.0] = Some(scalar(1.0));
        for i in (0..=out.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    accumulate(&mut adj[a.0], g.dot(&vb.t()));
                    accumulate(&mut adj[b.0], va.t().dot(&g));
                }
                Op::AddRow(a, r) => {
                    accumulate(&mut adj[r.0], g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    accumulate(&mut adj[a.0], g.clone());
                }
                Op::Add(a, b) => {
                    accumulate(&mut adj[a.0], g.clone());
                    accumulate(&mut adj[b.0], g.clone());
                }
                Op::Sub(a, b) => {
                    accumulate(&mut adj[a.0], g.clone());
                    accumulate(&mut adj[b.0], -&g);
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    accumulate(&mut adj[a.0], &g * vb);
                    accumulate(&mut adj[b.0], &g * va);
                }
                Op::Scale(a, c) => accumulate(&mut adj[a.0], &g * *c),
                Op::AddScalar(a) => accumulate(&mut adj[a.0], g.clone()),
                Op::Unary(a, f) => {
                    let va = &self.nodes[a.0].value;
                    let mut d = va.mapv(|x| f.d1(x));
                    d *= &g;
                    accumulate(&mut adj[a.0], d);
                }
                Op::Mean(a) => {
                    let va = &self.nodes[a.0].value;
                    let s = g[[0, 0]] / va.len() as f64;
                    accumulate(&mut adj[a.0], Array2::from_elem(va.dim(), s));
                }
                Op::Sum(a) => {
                    let va = &self.nodes[a.0].value;
                    accumulate(&mut adj[a.0], Array2::from_elem(va.dim(), g[[0, 0]]));
                }
                Op::Clamp(a, lo, hi) => {
                    let va = &self.nodes[a.0].value;
                    let mut d = va.mapv(|x| if x >= *lo && x <= *hi { 1.0 } else { 0.0 });
                    d *= &g;
                    accumulate(&mut adj[a.0], d);
                }
                Op::Fused(partials) => {
                    let s = g[[0, 0]];
                    for (id, p) in partials {
                        accumulate(&mut adj[id.0], p * s);
                    }
                }
            }
            adj[i] = Some(g);
        }
        adj.resize(self.nodes.len(), None);
        Ok(Gradients {
            adjoints: adj,
            shapes: self.shapes(),
        })
    }

    /// Forward tangent sweep. `seeds` gives the tangent of selected leaves;
    /// all other leaves have zero tangent.
    pub fn tangents(&self, seeds: &[(NodeId, Array2<f64>)]) -> Result<Vec<Array2<f64>>, AutodiffError> {
        let mut dot: Vec<Array2<f64>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            dot.push(Array2::zeros(node.value.dim()));
        }
        for (id, t) in seeds {
            let node = self.node(*id)?;
            if !matches!(node.op, Op::Leaf) {
                return Err(AutodiffError::NotALeaf(id.0));
            }
            if t.dim() != node.value.dim() {
                return Err(Self::mismatch("tangent seed", node.value.dim(), t.dim()));
            }
            dot[id.0] = t.clone();
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let d = match &node.op {
                Op::Leaf => continue,
                Op::MatMul(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    dot[a.0].dot(vb) + va.dot(&dot[b.0])
                }
                Op::AddRow(a, r) => &dot[a.0] + &dot[r.0],
                Op::Add(a, b) => &dot[a.0] + &dot[b.0],
                Op::Sub(a, b) => &dot[a.0] - &dot[b.0],
                Op::Mul(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    &dot[a.0] * vb + va * &dot[b.0]
                }
                Op::Scale(a, c) => &dot[a.0] * *c,
                Op::AddScalar(a) => dot[a.0].clone(),
                Op::Unary(a, f) => {
                    let va = &self.nodes[a.0].value;
                    va.mapv(|x| f.d1(x)) * &dot[a.0]
                }
                Op::Mean(a) => scalar(dot[a.0].sum() / dot[a.0].len() as f64),
                Op::Sum(a) => scalar(dot[a.0].sum()),
                Op::Clamp(a, lo, hi) => {
                    let va = &self.nodes[a.0].value;
                    va.mapv(|x| if x >= *lo && x <= *hi { 1.0 } else { 0.0 }) * &dot[a.0]
                }
                Op::Fused(_) => return Err(AutodiffError::TangentUnsupported(i)),
            };
            dot[i] = d;
        }
        Ok(dot)
    }

    /// Reverse sweep that also propagates the tangent of every adjoint.
    ///
    /// With tangents `dot` from [`ValueGraph::tangents`] seeded by a
    /// direction `v`, the second return value holds, per node,
    /// `d/dε (∂out/∂node)` evaluated along `v`.
    pub fn backward_with_tangents(
        &self,
        out: NodeId,
        dot: &[Array2<f64>],
    ) -> Result<(Gradients, Gradients), AutodiffError> {
        self.check_output(out)?;
        if dot.len() != self.nodes.len() {
            return Err(AutodiffError::TangentLength {
                expected: self.nodes.len(),
                got: dot.len(),
            });
        }
        let n = out.0 + 1;
        let mut adj: Vec<Option<Array2<f64>>> = vec![None; n];
        let mut adj_dot: Vec<Option<Array2<f64>>> = vec![None; n];
        adj[out.0] = Some(scalar(1.0));
        adj_dot[out.0] = Some(scalar(0.0));
        for i in (0..n).rev() {
            let Some(g) = adj[i].take() else { continue };
            let gd = adj_dot[i].take().unwrap_or_else(|| Array2::zeros(g.dim()));
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let (da, db) = (&dot[a.0], &dot[b.0]);
                    accumulate(&mut adj[a.0], g.dot(&vb.t()));
                    accumulate(&mut adj_dot[a.0], gd.dot(&vb.t()) + g.dot(&db.t()));
                    accumulate(&mut adj[b.0], va.t().dot(&g));
                    accumulate(&mut adj_dot[b.0], va.t().dot(&gd) + da.t().dot(&g));
                }
                Op::AddRow(a, r) => {
                    accumulate(&mut adj[r.0], g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    accumulate(&mut adj_dot[r.0], gd.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    accumulate(&mut adj[a.0], g.clone());
                    accumulate(&mut adj_dot[a.0], gd.clone());
                }
                Op::Add(a, b) => {
                    accumulate(&mut adj[a.0], g.clone());
                    accumulate(&mut adj_dot[a.0], gd.clone());
                    accumulate(&mut adj[b.0], g.clone());
                    accumulate(&mut adj_dot[b.0], gd.clone());
                }
                Op::Sub(a, b) => {
                    accumulate(&mut adj[a.0], g.clone());
                    accumulate(&mut adj_dot[a.0], gd.clone());
                    accumulate(&mut adj[b.0], -&g);
                    accumulate(&mut adj_dot[b.0], -&gd);
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let (da, db) = (&dot[a.0], &dot[b.0]);
                    accumulate(&mut adj[a.0], &g * vb);
                    accumulate(&mut adj_dot[a.0], &gd * vb + &g * db);
                    accumulate(&mut adj[b.0], &g * va);
                    accumulate(&mut adj_dot[b.0], &gd * va + &g * da);
                }
                Op::Scale(a, c) => {
                    accumulate(&mut adj[a.0], &g * *c);
                    accumulate(&mut adj_dot[a.0], &gd * *c);
                }
                Op::AddScalar(a) => {
                    accumulate(&mut adj[a.0], g.clone());
                    accumulate(&mut adj_dot[a.0], gd.clone());
                }
                Op::Unary(a, f) => {
                    let va = &self.nodes[a.0].value;
                    let d1 = va.mapv(|x| f.d1(x));
                    let d2 = va.mapv(|x| f.d2(x));
                    accumulate(&mut adj[a.0], &g * &d1);
                    // Zero tangents must not meet an infinite f'' at a kink.
                    let curvature = ndarray::Zip::from(&g)
                        .and(&d2)
                        .and(&dot[a.0])
                        .map_collect(|&g, &d2, &t| if t == 0.0 || g == 0.0 { 0.0 } else { g * d2 * t });
                    accumulate(&mut adj_dot[a.0], &gd * &d1 + curvature);
                }
                Op::Mean(a) => {
                    let va = &self.nodes[a.0].value;
                    let m = va.len() as f64;
                    accumulate(&mut adj[a.0], Array2::from_elem(va.dim(), g[[0, 0]] / m));
                    accumulate(&mut adj_dot[a.0], Array2::from_elem(va.dim(), gd[[0, 0]] / m));
                }
                Op::Sum(a) => {
                    let va = &self.nodes[a.0].value;
                    accumulate(&mut adj[a.0], Array2::from_elem(va.dim(), g[[0, 0]]));
                    accumulate(&mut adj_dot[a.0], Array2::from_elem(va.dim(), gd[[0, 0]]));
                }
                Op::Clamp(a, lo, hi) => {
                    let va = &self.nodes[a.0].value;
                    let mask = va.mapv(|x| if x >= *lo && x <= *hi { 1.0 } else { 0.0 });
                    accumulate(&mut adj[a.0], &g * &mask);
                    accumulate(&mut adj_dot[a.0], &gd * &mask);
                }
                Op::Fused(_) => return Err(AutodiffError::TangentUnsupported(i)),
            }
            adj[i] = Some(g);
            adj_dot[i] = Some(gd);
        }
        adj.resize(self.nodes.len(), None);
        adj_dot.resize(self.nodes.len(), None);
        let shapes = self.shapes();
        Ok((
            Gradients {
                adjoints: adj,
                shapes: shapes.clone(),
            },
            Gradients {
                adjoints: adj_dot,
                shapes,
            },
        ))
    }
}
