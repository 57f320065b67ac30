//! Reverse-mode automatic differentiation.
//!
//! [`GradTape`] records primitive operations in execution order; the backward
//! pass replays them in exact reverse order, accumulating adjoints additively
//! over fan-out. Every primitive has a hand-coded adjoint; there is no
//! expression compiler. Values are computed eagerly, so the tape doubles as
//! the forward evaluator.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{self, Tensor};

/// Handle to a value recorded on a [`GradTape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

/// Clamp applied to predicted probabilities inside the BCE primitive.
pub const BCE_PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Constant,
    MatMul { a: NodeId, b: NodeId },
    MatVec { w: NodeId, x: NodeId },
    Add { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    Scale { x: NodeId, c: f64 },
    AddScalar { x: NodeId },
    AddConst { x: NodeId },
    Relu { x: NodeId },
    Tanh { x: NodeId },
    Sigmoid { x: NodeId },
    Softmax { x: NodeId },
    Dropout { x: NodeId, factors: Option<Vec<f64>> },
    Concat { parts: Vec<NodeId> },
    MeanRows { x: NodeId },
    Dot { u: NodeId, v: NodeId },
    Cosine { u: NodeId, v: NodeId },
    Select { x: NodeId, index: usize },
    ScaleByScalar { v: NodeId, s: NodeId },
    Sum { x: NodeId },
    Mean { x: NodeId },
    Bce { preds: NodeId, labels: Vec<f64> },
}

struct Node {
    value: Tensor,
    needs_grad: bool,
    op: Op,
}

/// Ordered record of primitive operations with enough context to replay
/// adjoints. Single-threaded per training step.
#[derive(Default)]
pub struct GradTape {
    nodes: Vec<Node>,
}

/// Adjoints produced by [`GradTape::backward`], indexed by [`NodeId`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads[id.0].as_ref()
    }

    /// Gradient for `id`, or zeros of the given shape when no gradient
    /// reached it.
    pub fn get_or_zeros(&self, id: NodeId, shape: &[usize]) -> Tensor {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(shape.to_vec()),
        }
    }
}

impl GradTape {
    pub fn new() -> Self {
        GradTape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Value of a recorded node.
    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Tensor, needs_grad: bool, op: Op) -> NodeId {
        self.nodes.push(Node {
            value,
            needs_grad,
            op,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].needs_grad
    }

    /// Register a trainable tensor; gradients accumulate here.
    pub fn leaf(&mut self, t: Tensor) -> NodeId {
        self.push(t, true, Op::Leaf)
    }

    /// Register a non-trainable tensor (inputs, labels, fixed biases).
    pub fn constant(&mut self, t: Tensor) -> NodeId {
        self.push(t, false, Op::Constant)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = tensor::matmul(self.value(a), self.value(b))?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(v, needs, Op::MatMul { a, b }))
    }

    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> Result<NodeId> {
        let v = tensor::matvec(self.value(w), self.value(x))?;
        let needs = self.needs(w) || self.needs(x);
        Ok(self.push(v, needs, Op::MatVec { w, x }))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = tensor::add(self.value(a), self.value(b))?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(v, needs, Op::Add { a, b }))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = tensor::mul(self.value(a), self.value(b))?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(v, needs, Op::Mul { a, b }))
    }

    /// `c * x` for a fixed scalar `c`.
    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        let v = self.value(x).map(|e| c * e);
        let needs = self.needs(x);
        self.push(v, needs, Op::Scale { x, c })
    }

    /// `x + c` elementwise for a fixed scalar `c`.
    pub fn add_scalar(&mut self, x: NodeId, c: f64) -> NodeId {
        let v = self.value(x).map(|e| e + c);
        let needs = self.needs(x);
        self.push(v, needs, Op::AddScalar { x })
    }

    /// `x + c` for a fixed tensor of the same length (e.g. attention logit
    /// biases).
    pub fn add_const(&mut self, x: NodeId, c: &[f64]) -> Result<NodeId> {
        let xv = self.value(x);
        if xv.len() != c.len() {
            return Err(Error::ShapeMismatch {
                op: "add_const",
                left: xv.shape().to_vec(),
                right: vec![c.len()],
            });
        }
        let data: Vec<f64> = xv.data().iter().zip(c).map(|(a, b)| a + b).collect();
        let v = Tensor::new(xv.shape().to_vec(), data)?;
        let needs = self.needs(x);
        Ok(self.push(v, needs, Op::AddConst { x }))
    }

    /// Elementwise `max(0, x)`; the subgradient at exactly 0 is 0.
    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let v = tensor::relu(self.value(x));
        let needs = self.needs(x);
        self.push(v, needs, Op::Relu { x })
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let v = tensor::tanh(self.value(x));
        let needs = self.needs(x);
        self.push(v, needs, Op::Tanh { x })
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let v = tensor::sigmoid(self.value(x));
        let needs = self.needs(x);
        self.push(v, needs, Op::Sigmoid { x })
    }

    pub fn softmax(&mut self, x: NodeId) -> Result<NodeId> {
        let v = tensor::softmax(self.value(x))?;
        let needs = self.needs(x);
        Ok(self.push(v, needs, Op::Softmax { x }))
    }

    /// Inverted dropout; the sampled mask is recorded for the backward pass.
    pub fn dropout(
        &mut self,
        x: NodeId,
        rate: f64,
        training: bool,
        rng: &mut Rng,
    ) -> Result<NodeId> {
        let xv = self.value(x);
        let factors = tensor::dropout_factors(xv.len(), rate, training, rng)?;
        let v = match &factors {
            None => xv.clone(),
            Some(f) => {
                let data = xv.data().iter().zip(f).map(|(a, s)| a * s).collect();
                Tensor::new(xv.shape().to_vec(), data)?
            }
        };
        let needs = self.needs(x);
        Ok(self.push(v, needs, Op::Dropout { x, factors }))
    }

    /// Concatenate rank-1 nodes in order.
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let tensors: Vec<&Tensor> = parts.iter().map(|&p| self.value(p)).collect();
        let v = tensor::concat(&tensors)?;
        let needs = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(
            v,
            needs,
            Op::Concat {
                parts: parts.to_vec(),
            },
        ))
    }

    pub fn mean_rows(&mut self, x: NodeId) -> Result<NodeId> {
        let v = tensor::mean_rows(self.value(x))?;
        let needs = self.needs(x);
        Ok(self.push(v, needs, Op::MeanRows { x }))
    }

    /// Dot product of two vectors, as a `[1]` node.
    pub fn dot(&mut self, u: NodeId, v: NodeId) -> Result<NodeId> {
        let s = tensor::dot(self.value(u), self.value(v))?;
        let needs = self.needs(u) || self.needs(v);
        Ok(self.push(Tensor::scalar(s), needs, Op::Dot { u, v }))
    }

    /// Cosine similarity as a `[1]` node; the zero-norm guard returns 0 with
    /// a zero gradient.
    pub fn cosine(&mut self, u: NodeId, v: NodeId) -> Result<NodeId> {
        let s = tensor::cosine(self.value(u), self.value(v))?;
        let needs = self.needs(u) || self.needs(v);
        Ok(self.push(Tensor::scalar(s), needs, Op::Cosine { u, v }))
    }

    /// Extract entry `index` of a vector as a `[1]` node.
    pub fn select(&mut self, x: NodeId, index: usize) -> Result<NodeId> {
        let xv = self.value(x);
        if !xv.is_vector() || index >= xv.len() {
            return Err(Error::InvalidInput(format!(
                "select index {index} out of range for shape {:?}",
                xv.shape()
            )));
        }
        let v = Tensor::scalar(xv.data()[index]);
        let needs = self.needs(x);
        Ok(self.push(v, needs, Op::Select { x, index }))
    }

    /// `s * v` where `s` is a `[1]` node and `v` a vector node.
    pub fn scale_by_scalar(&mut self, v: NodeId, s: NodeId) -> Result<NodeId> {
        let sv = self.value(s);
        if !sv.is_scalar() {
            return Err(Error::InvalidInput(format!(
                "scale_by_scalar needs a [1] scalar node, got {:?}",
                sv.shape()
            )));
        }
        let c = sv.item();
        let out = self.value(v).map(|e| c * e);
        let needs = self.needs(v) || self.needs(s);
        Ok(self.push(out, needs, Op::ScaleByScalar { v, s }))
    }

    /// Sum of all entries as a `[1]` node.
    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let s: f64 = self.value(x).data().iter().sum();
        let needs = self.needs(x);
        self.push(Tensor::scalar(s), needs, Op::Sum { x })
    }

    /// Mean of all entries as a `[1]` node.
    pub fn mean(&mut self, x: NodeId) -> NodeId {
        let xv = self.value(x);
        let s: f64 = xv.data().iter().sum::<f64>() / xv.len() as f64;
        let needs = self.needs(x);
        self.push(Tensor::scalar(s), needs, Op::Mean { x })
    }

    /// Mean binary cross-entropy of a prediction vector against fixed 0/1
    /// labels, as a `[1]` node. Predictions are clamped to
    /// `[BCE_PROB_EPS, 1 - BCE_PROB_EPS]`.
    pub fn bce(&mut self, preds: NodeId, labels: &[f64]) -> Result<NodeId> {
        let pv = self.value(preds);
        if !pv.is_vector() || pv.len() != labels.len() || labels.is_empty() {
            return Err(Error::InvalidInput(format!(
                "bce needs equal-length non-empty preds/labels, got {} vs {}",
                pv.len(),
                labels.len()
            )));
        }
        let loss = bce_value(pv.data(), labels);
        let needs = self.needs(preds);
        Ok(self.push(
            Tensor::scalar(loss),
            needs,
            Op::Bce {
                preds,
                labels: labels.to_vec(),
            },
        ))
    }

    /// Reverse pass from a scalar output. Returns the adjoint of every node
    /// that influences `out` and requires a gradient.
    pub fn backward(&self, out: NodeId) -> Result<Gradients> {
        if !self.value(out).is_scalar() {
            return Err(Error::InvalidInput(format!(
                "backward requires a scalar output, got shape {:?}",
                self.value(out).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[out.0] = Some(Tensor::scalar(1.0));

        for i in (0..=out.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if !self.nodes[i].needs_grad {
                continue;
            }
            self.push_adjoints(i, &g, &mut grads);
            // leaves keep their accumulated gradient
            if matches!(self.nodes[i].op, Op::Leaf) {
                grads[i] = Some(g);
            }
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], id: NodeId, delta: Tensor) {
        if !self.needs(id) {
            return;
        }
        match &mut grads[id.0] {
            Some(g) => g.add_assign(&delta),
            slot @ None => *slot = Some(delta),
        }
    }

    fn push_adjoints(&self, i: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        match &self.nodes[i].op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul { a, b } => {
                let av = self.value(*a);
                let bv = self.value(*b);
                let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                if self.needs(*a) {
                    // dA = g . B^T
                    let mut da = vec![0.0; m * k];
                    for r in 0..m {
                        for p in 0..k {
                            let mut s = 0.0;
                            for c in 0..n {
                                s += g.data()[r * n + c] * bv.data()[p * n + c];
                            }
                            da[r * k + p] = s;
                        }
                    }
                    self.accumulate(grads, *a, Tensor::matrix(m, k, da).unwrap());
                }
                if self.needs(*b) {
                    // dB = A^T . g
                    let mut db = vec![0.0; k * n];
                    for p in 0..k {
                        for c in 0..n {
                            let mut s = 0.0;
                            for r in 0..m {
                                s += av.data()[r * k + p] * g.data()[r * n + c];
                            }
                            db[p * n + c] = s;
                        }
                    }
                    self.accumulate(grads, *b, Tensor::matrix(k, n, db).unwrap());
                }
            }
            Op::MatVec { w, x } => {
                let wv = self.value(*w);
                let xv = self.value(*x);
                let (m, k) = (wv.rows(), wv.cols());
                if self.needs(*w) {
                    let mut dw = vec![0.0; m * k];
                    for r in 0..m {
                        let gr = g.data()[r];
                        if gr == 0.0 {
                            continue;
                        }
                        for c in 0..k {
                            dw[r * k + c] = gr * xv.data()[c];
                        }
                    }
                    self.accumulate(grads, *w, Tensor::matrix(m, k, dw).unwrap());
                }
                if self.needs(*x) {
                    let mut dx = vec![0.0; k];
                    for r in 0..m {
                        let gr = g.data()[r];
                        if gr == 0.0 {
                            continue;
                        }
                        for c in 0..k {
                            dx[c] += gr * wv.data()[r * k + c];
                        }
                    }
                    self.accumulate(grads, *x, Tensor::vector(dx));
                }
            }
            Op::Add { a, b } => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Mul { a, b } => {
                if self.needs(*a) {
                    let bv = self.value(*b);
                    let d = g
                        .data()
                        .iter()
                        .zip(bv.data())
                        .map(|(x, y)| x * y)
                        .collect();
                    self.accumulate(grads, *a, Tensor::new(g.shape().to_vec(), d).unwrap());
                }
                if self.needs(*b) {
                    let av = self.value(*a);
                    let d = g
                        .data()
                        .iter()
                        .zip(av.data())
                        .map(|(x, y)| x * y)
                        .collect();
                    self.accumulate(grads, *b, Tensor::new(g.shape().to_vec(), d).unwrap());
                }
            }
            Op::Scale { x, c } => {
                self.accumulate(grads, *x, g.map(|e| c * e));
            }
            Op::AddScalar { x } | Op::AddConst { x } => {
                self.accumulate(grads, *x, g.clone());
            }
            Op::Relu { x } => {
                let xv = self.value(*x);
                let d = g
                    .data()
                    .iter()
                    .zip(xv.data())
                    .map(|(gv, &v)| if v > 0.0 { *gv } else { 0.0 })
                    .collect();
                self.accumulate(grads, *x, Tensor::new(g.shape().to_vec(), d).unwrap());
            }
            Op::Tanh { x } => {
                let yv = &self.nodes[i].value;
                let d = g
                    .data()
                    .iter()
                    .zip(yv.data())
                    .map(|(gv, y)| gv * (1.0 - y * y))
                    .collect();
                self.accumulate(grads, *x, Tensor::new(g.shape().to_vec(), d).unwrap());
            }
            Op::Sigmoid { x } => {
                let yv = &self.nodes[i].value;
                let d = g
                    .data()
                    .iter()
                    .zip(yv.data())
                    .map(|(gv, y)| gv * y * (1.0 - y))
                    .collect();
                self.accumulate(grads, *x, Tensor::new(g.shape().to_vec(), d).unwrap());
            }
            Op::Softmax { x } => {
                let yv = &self.nodes[i].value;
                let inner: f64 = g.data().iter().zip(yv.data()).map(|(gv, y)| gv * y).sum();
                let d = g
                    .data()
                    .iter()
                    .zip(yv.data())
                    .map(|(gv, y)| y * (gv - inner))
                    .collect();
                self.accumulate(grads, *x, Tensor::new(g.shape().to_vec(), d).unwrap());
            }
            Op::Dropout { x, factors } => {
                let d = match factors {
                    None => g.clone(),
                    Some(f) => {
                        let data = g.data().iter().zip(f).map(|(gv, s)| gv * s).collect();
                        Tensor::new(g.shape().to_vec(), data).unwrap()
                    }
                };
                self.accumulate(grads, *x, d);
            }
            Op::Concat { parts } => {
                let mut offset = 0;
                for &p in parts {
                    let len = self.value(p).len();
                    if self.needs(p) {
                        let slice = g.data()[offset..offset + len].to_vec();
                        self.accumulate(grads, p, Tensor::vector(slice));
                    }
                    offset += len;
                }
            }
            Op::MeanRows { x } => {
                let xv = self.value(*x);
                let (m, n) = (xv.rows(), xv.cols());
                let mut d = vec![0.0; m * n];
                for r in 0..m {
                    for c in 0..n {
                        d[r * n + c] = g.data()[c] / m as f64;
                    }
                }
                self.accumulate(grads, *x, Tensor::matrix(m, n, d).unwrap());
            }
            Op::Dot { u, v } => {
                let gs = g.item();
                if self.needs(*u) {
                    self.accumulate(grads, *u, self.value(*v).map(|e| gs * e));
                }
                if self.needs(*v) {
                    self.accumulate(grads, *v, self.value(*u).map(|e| gs * e));
                }
            }
            Op::Cosine { u, v } => {
                let uv = self.value(*u);
                let vv = self.value(*v);
                let nu = uv.data().iter().map(|a| a * a).sum::<f64>().sqrt();
                let nv = vv.data().iter().map(|a| a * a).sum::<f64>().sqrt();
                if nu < tensor::COSINE_NORM_EPS || nv < tensor::COSINE_NORM_EPS {
                    return; // guard branch: zero gradient
                }
                let c = self.nodes[i].value.item();
                let gs = g.item();
                if self.needs(*u) {
                    let d: Vec<f64> = uv
                        .data()
                        .iter()
                        .zip(vv.data())
                        .map(|(&ue, &ve)| gs * (ve / (nu * nv) - c * ue / (nu * nu)))
                        .collect();
                    self.accumulate(grads, *u, Tensor::vector(d));
                }
                if self.needs(*v) {
                    let d: Vec<f64> = uv
                        .data()
                        .iter()
                        .zip(vv.data())
                        .map(|(&ue, &ve)| gs * (ue / (nu * nv) - c * ve / (nv * nv)))
                        .collect();
                    self.accumulate(grads, *v, Tensor::vector(d));
                }
            }
            Op::Select { x, index } => {
                let mut d = vec![0.0; self.value(*x).len()];
                d[*index] = g.item();
                self.accumulate(grads, *x, Tensor::vector(d));
            }
            Op::ScaleByScalar { v, s } => {
                let c = self.value(*s).item();
                if self.needs(*v) {
                    self.accumulate(grads, *v, g.map(|e| c * e));
                }
                if self.needs(*s) {
                    let vv = self.value(*v);
                    let ds: f64 = g.data().iter().zip(vv.data()).map(|(a, b)| a * b).sum();
                    self.accumulate(grads, *s, Tensor::scalar(ds));
                }
            }
            Op::Sum { x } => {
                let gs = g.item();
                let xv = self.value(*x);
                self.accumulate(
                    grads,
                    *x,
                    Tensor::new(xv.shape().to_vec(), vec![gs; xv.len()]).unwrap(),
                );
            }
            Op::Mean { x } => {
                let xv = self.value(*x);
                let gs = g.item() / xv.len() as f64;
                self.accumulate(
                    grads,
                    *x,
                    Tensor::new(xv.shape().to_vec(), vec![gs; xv.len()]).unwrap(),
                );
            }
            Op::Bce { preds, labels } => {
                let pv = self.value(*preds);
                let n = labels.len() as f64;
                let gs = g.item();
                let d: Vec<f64> = pv
                    .data()
                    .iter()
                    .zip(labels)
                    .map(|(&p, &y)| {
                        if p <= BCE_PROB_EPS || p >= 1.0 - BCE_PROB_EPS {
                            0.0 // clamped: flat
                        } else {
                            -gs / n * (y / p - (1.0 - y) / (1.0 - p))
                        }
                    })
                    .collect();
                self.accumulate(grads, *preds, Tensor::vector(d));
            }
        }
    }
}

pub(crate) fn bce_value(preds: &[f64], labels: &[f64]) -> f64 {
    let n = labels.len() as f64;
    let mut total = 0.0;
    for (&p, &y) in preds.iter().zip(labels) {
        let p = p.clamp(BCE_PROB_EPS, 1.0 - BCE_PROB_EPS);
        total += -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
    }
    total / n
}

/// Compare the analytic gradient of a scalar function against central finite
/// differences.
///
/// `f` must rebuild the computation on the provided tape from the leaf ids it
/// is given, deterministically (dropout in eval mode or with a frozen mask).
/// Returns the maximum over all coordinates of
/// `|analytic - numeric| / max(1e-8, |analytic| + |numeric|)`.
pub fn grad_check<F>(
    mut f: F,
    params: &[Tensor],
    eps: f64,
) -> Result<f64>
where
    F: FnMut(&mut GradTape, &[NodeId]) -> Result<NodeId>,
{
    if eps <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "grad_check eps must be positive, got {eps}"
        )));
    }

    let eval = |f: &mut F, tensors: &[Tensor]| -> Result<(GradTape, NodeId)> {
        let mut tape = GradTape::new();
        let ids: Vec<NodeId> = tensors.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = f(&mut tape, &ids)?;
        let v = tape.value(out);
        if !v.is_scalar() {
            return Err(Error::InvalidInput(format!(
                "grad_check target must be scalar, got {:?}",
                v.shape()
            )));
        }
        if !v.item().is_finite() {
            return Err(Error::NonFinite(format!(
                "grad_check objective evaluated to {}",
                v.item()
            )));
        }
        Ok((tape, out))
    };

    let (tape, out) = eval(&mut f, params)?;
    let ids: Vec<NodeId> = (0..params.len()).map(NodeId).collect();
    let grads = tape.backward(out)?;
    let analytic: Vec<Tensor> = ids
        .iter()
        .zip(params)
        .map(|(&id, p)| grads.get_or_zeros(id, p.shape()))
        .collect();

    let mut worst = 0.0f64;
    let mut work: Vec<Tensor> = params.to_vec();
    for t in 0..params.len() {
        for c in 0..params[t].len() {
            let orig = work[t].data()[c];
            work[t].data_mut()[c] = orig + eps;
            let (tape_p, out_p) = eval(&mut f, &work)?;
            let fp = tape_p.value(out_p).item();
            work[t].data_mut()[c] = orig - eps;
            let (tape_m, out_m) = eval(&mut f, &work)?;
            let fm = tape_m.value(out_m).item();
            work[t].data_mut()[c] = orig;

            let numeric = (fp - fm) / (2.0 * eps);
            let a = analytic[t].data()[c];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            if rel > worst {
                worst = rel;
            }
        }
    }
    Ok(worst)
}
