//! The dual-space architecture: projection heads, similarity scores, feature
//! fusion, the graph transformer stack, pooling, and the MLP classifier.
//!
//! Forward evaluation happens on a [`GradTape`] so the same code path serves
//! training (backward pass) and inference (values only).

use serde::{Deserialize, Serialize};

use crate::data::{EmbeddingTable, LabeledPair};
use crate::error::{Error, Result};
use crate::graph::{self, PairGraph, PairNode};
use crate::rng::{Rng, Stream};
use crate::tape::{GradTape, NodeId};
use crate::tensor::{self, Tensor};

/// Training or evaluation mode; dropout is active only in training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

impl Mode {
    pub fn is_training(self) -> bool {
        matches!(self, Mode::Train)
    }
}

/// Every architecture and optimization hyperparameter. All fields are
/// config-overridable and recorded in checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Input embedding width.
    pub d: usize,
    /// Projection width of each space.
    pub d_prime: usize,
    /// Fused node-feature width; must be divisible by `H`.
    pub fused_dim: usize,
    /// Classifier hidden width.
    pub hidden_dim: usize,
    /// Attention heads per transformer layer.
    #[serde(rename = "H")]
    pub heads: usize,
    /// Transformer layer count.
    #[serde(rename = "L_layers")]
    pub layers: usize,
    /// Edge similarity threshold for graph rule 2.
    pub tau: f64,
    /// Contrastive loss weight.
    pub lambda_w: f64,
    /// Synonym margin.
    pub m_syn: f64,
    /// Antonym margin.
    pub m_ant: f64,
    pub dropout_rate: f64,
    /// Learning rate.
    pub lr: f64,
    pub seed: u64,
    /// Weight of transitivity-closure edges, in (0, 1].
    pub trans_weight: f64,
    /// Ablation: drop the antonym head; fusion consumes `[s1; s2]` only.
    pub single_space: bool,
    /// Ablation: skip the transformer layers entirely.
    pub no_graph: bool,
}

impl HyperParams {
    /// Defaults for a given input embedding width.
    pub fn for_input_dim(d: usize) -> Self {
        let d_prime = 128;
        let fused_dim = 2 * d_prime;
        HyperParams {
            d,
            d_prime,
            fused_dim,
            hidden_dim: fused_dim / 2,
            heads: 4,
            layers: 2,
            tau: 0.9,
            lambda_w: 1.0,
            m_syn: 0.8,
            m_ant: 0.2,
            dropout_rate: 0.1,
            lr: 1e-3,
            seed: 42,
            trans_weight: 0.5,
            single_space: false,
            no_graph: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.d == 0 || self.d_prime == 0 || self.fused_dim == 0 || self.hidden_dim == 0 {
            return bad("d, d_prime, fused_dim, hidden_dim must be positive".into());
        }
        if self.heads == 0 {
            return bad("H must be positive".into());
        }
        // layers == 0 is legal: the stack degenerates to the no-graph path
        if self.fused_dim % self.heads != 0 {
            return bad(format!(
                "fused_dim {} must be divisible by H {}",
                self.fused_dim, self.heads
            ));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad(format!("tau must be in [0, 1], got {}", self.tau));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!(
                "dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            ));
        }
        if self.m_ant >= self.m_syn {
            return bad(format!(
                "m_ant {} must be below m_syn {}",
                self.m_ant, self.m_syn
            ));
        }
        if !(self.lambda_w >= 0.0 && self.lambda_w.is_finite()) {
            return bad(format!("lambda_w must be finite and >= 0, got {}", self.lambda_w));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be finite and >= 0, got {}", self.lr));
        }
        if !(self.trans_weight > 0.0 && self.trans_weight <= 1.0) {
            return bad(format!(
                "trans_weight must be in (0, 1], got {}",
                self.trans_weight
            ));
        }
        Ok(())
    }

    /// Per-head feature width.
    pub fn head_dim(&self) -> usize {
        self.fused_dim / self.heads
    }

    /// Width of the concatenation entering the fusion map.
    pub fn fuse_input_dim(&self) -> usize {
        if self.single_space {
            2 * self.d_prime
        } else {
            4 * self.d_prime
        }
    }
}

/// Per-head attention maps.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub w_q: Tensor,
    pub w_k: Tensor,
    pub w_v: Tensor,
}

/// One transformer layer: its heads plus the output map.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub heads: Vec<HeadParams>,
    pub w_o: Tensor,
}

/// Every trainable array of the architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w_syn: Tensor,
    pub b_syn: Tensor,
    pub w_ant: Option<Tensor>,
    pub b_ant: Option<Tensor>,
    pub w_fuse: Tensor,
    pub b_fuse: Tensor,
    pub layers: Vec<LayerParams>,
    pub w_hidden: Tensor,
    pub b_hidden: Tensor,
    pub w_out: Tensor,
    pub b_out: Tensor,
}

impl ModelParams {
    /// Xavier-initialized matrices and zero biases, drawn in a fixed order
    /// from the init stream of `hp.seed`.
    pub fn init(hp: &HyperParams) -> Result<Self> {
        hp.validate()?;
        let mut rng = Rng::seeded(hp.seed, Stream::Init);
        let w_syn = tensor::xavier_init(hp.d_prime, hp.d, &mut rng);
        let b_syn = Tensor::zeros(vec![hp.d_prime]);
        let (w_ant, b_ant) = if hp.single_space {
            (None, None)
        } else {
            (
                Some(tensor::xavier_init(hp.d_prime, hp.d, &mut rng)),
                Some(Tensor::zeros(vec![hp.d_prime])),
            )
        };
        let w_fuse = tensor::xavier_init(hp.fused_dim, hp.fuse_input_dim(), &mut rng);
        let b_fuse = Tensor::zeros(vec![hp.fused_dim]);
        let layer_count = if hp.no_graph { 0 } else { hp.layers };
        let mut layers = Vec::with_capacity(layer_count);
        for _ in 0..layer_count {
            let mut heads = Vec::with_capacity(hp.heads);
            for _ in 0..hp.heads {
                heads.push(HeadParams {
                    w_q: tensor::xavier_init(hp.head_dim(), hp.fused_dim, &mut rng),
                    w_k: tensor::xavier_init(hp.head_dim(), hp.fused_dim, &mut rng),
                    w_v: tensor::xavier_init(hp.head_dim(), hp.fused_dim, &mut rng),
                });
            }
            let w_o = tensor::xavier_init(hp.fused_dim, hp.fused_dim, &mut rng);
            layers.push(LayerParams { heads, w_o });
        }
        let w_hidden = tensor::xavier_init(hp.hidden_dim, hp.fused_dim, &mut rng);
        let b_hidden = Tensor::zeros(vec![hp.hidden_dim]);
        let w_out = tensor::xavier_init(1, hp.hidden_dim, &mut rng);
        let b_out = Tensor::zeros(vec![1]);
        Ok(ModelParams {
            w_syn,
            b_syn,
            w_ant,
            b_ant,
            w_fuse,
            b_fuse,
            layers,
            w_hidden,
            b_hidden,
            w_out,
            b_out,
        })
    }

    /// Named views of every array, in the canonical (init, checkpoint, SGD)
    /// order.
    pub fn arrays(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = vec![
            ("w_syn".into(), &self.w_syn),
            ("b_syn".into(), &self.b_syn),
        ];
        if let (Some(w), Some(b)) = (&self.w_ant, &self.b_ant) {
            out.push(("w_ant".into(), w));
            out.push(("b_ant".into(), b));
        }
        out.push(("w_fuse".into(), &self.w_fuse));
        out.push(("b_fuse".into(), &self.b_fuse));
        for (l, layer) in self.layers.iter().enumerate() {
            for (h, head) in layer.heads.iter().enumerate() {
                out.push((format!("layer{l}.head{h}.w_q"), &head.w_q));
                out.push((format!("layer{l}.head{h}.w_k"), &head.w_k));
                out.push((format!("layer{l}.head{h}.w_v"), &head.w_v));
            }
            out.push((format!("layer{l}.w_o"), &layer.w_o));
        }
        out.push(("w_hidden".into(), &self.w_hidden));
        out.push(("b_hidden".into(), &self.b_hidden));
        out.push(("w_out".into(), &self.w_out));
        out.push(("b_out".into(), &self.b_out));
        out
    }

    /// Mutable views in the same order as [`ModelParams::arrays`].
    pub fn arrays_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out: Vec<(String, &mut Tensor)> = vec![
            ("w_syn".into(), &mut self.w_syn),
            ("b_syn".into(), &mut self.b_syn),
        ];
        if let (Some(w), Some(b)) = (&mut self.w_ant, &mut self.b_ant) {
            out.push(("w_ant".into(), w));
            out.push(("b_ant".into(), b));
        }
        out.push(("w_fuse".into(), &mut self.w_fuse));
        out.push(("b_fuse".into(), &mut self.b_fuse));
        for (l, layer) in self.layers.iter_mut().enumerate() {
            for (h, head) in layer.heads.iter_mut().enumerate() {
                out.push((format!("layer{l}.head{h}.w_q"), &mut head.w_q));
                out.push((format!("layer{l}.head{h}.w_k"), &mut head.w_k));
                out.push((format!("layer{l}.head{h}.w_v"), &mut head.w_v));
            }
            out.push((format!("layer{l}.w_o"), &mut layer.w_o));
        }
        out.push(("w_hidden".into(), &mut self.w_hidden));
        out.push(("b_hidden".into(), &mut self.b_hidden));
        out.push(("w_out".into(), &mut self.w_out));
        out.push(("b_out".into(), &mut self.b_out));
        out
    }

    /// Check that every array has the shape `hp` implies.
    pub fn validate_shapes(&self, hp: &HyperParams) -> Result<()> {
        let expect = expected_shapes(hp);
        let got = self.arrays();
        if got.len() != expect.len() {
            return Err(Error::Checkpoint(format!(
                "parameter count {} does not match config ({} expected)",
                got.len(),
                expect.len()
            )));
        }
        for ((name, t), (ename, eshape)) in got.iter().zip(&expect) {
            if name != ename || t.shape() != eshape.as_slice() {
                return Err(Error::Checkpoint(format!(
                    "array {name} has shape {:?}, config expects {ename} {:?}",
                    t.shape(),
                    eshape
                )));
            }
        }
        Ok(())
    }
}

/// `(name, shape)` of every array implied by a config, in canonical order.
pub fn expected_shapes(hp: &HyperParams) -> Vec<(String, Vec<usize>)> {
    let mut out: Vec<(String, Vec<usize>)> = vec![
        ("w_syn".into(), vec![hp.d_prime, hp.d]),
        ("b_syn".into(), vec![hp.d_prime]),
    ];
    if !hp.single_space {
        out.push(("w_ant".into(), vec![hp.d_prime, hp.d]));
        out.push(("b_ant".into(), vec![hp.d_prime]));
    }
    out.push(("w_fuse".into(), vec![hp.fused_dim, hp.fuse_input_dim()]));
    out.push(("b_fuse".into(), vec![hp.fused_dim]));
    let layer_count = if hp.no_graph { 0 } else { hp.layers };
    for l in 0..layer_count {
        for h in 0..hp.heads {
            out.push((format!("layer{l}.head{h}.w_q"), vec![hp.head_dim(), hp.fused_dim]));
            out.push((format!("layer{l}.head{h}.w_k"), vec![hp.head_dim(), hp.fused_dim]));
            out.push((format!("layer{l}.head{h}.w_v"), vec![hp.head_dim(), hp.fused_dim]));
        }
        out.push((format!("layer{l}.w_o"), vec![hp.fused_dim, hp.fused_dim]));
    }
    out.push(("w_hidden".into(), vec![hp.hidden_dim, hp.fused_dim]));
    out.push(("b_hidden".into(), vec![hp.hidden_dim]));
    out.push(("w_out".into(), vec![1, hp.hidden_dim]));
    out.push(("b_out".into(), vec![1]));
    out
}

/// Tape handles for one attention head.
#[derive(Debug, Clone, Copy)]
pub struct BoundHead {
    pub w_q: NodeId,
    pub w_k: NodeId,
    pub w_v: NodeId,
}

/// Tape handles for one transformer layer.
#[derive(Debug, Clone)]
pub struct BoundLayer {
    pub heads: Vec<BoundHead>,
    pub w_o: NodeId,
}

/// Model parameters registered as leaves on a tape, in canonical order.
#[derive(Debug, Clone)]
pub struct BoundParams {
    pub w_syn: NodeId,
    pub b_syn: NodeId,
    pub w_ant: Option<NodeId>,
    pub b_ant: Option<NodeId>,
    pub w_fuse: NodeId,
    pub b_fuse: NodeId,
    pub layers: Vec<BoundLayer>,
    pub w_hidden: NodeId,
    pub b_hidden: NodeId,
    pub w_out: NodeId,
    pub b_out: NodeId,
    order: Vec<NodeId>,
}

impl BoundParams {
    /// Leaf ids aligned with [`ModelParams::arrays`].
    pub fn ordered_ids(&self) -> &[NodeId] {
        &self.order
    }

    /// Rebuild the structured view from ids in canonical order (the inverse
    /// of [`ModelParams::arrays`] flattening). Used by gradient checking,
    /// where the checker owns the leaves.
    pub fn from_ordered(hp: &HyperParams, ids: &[NodeId]) -> Result<Self> {
        let expected = expected_shapes(hp);
        if ids.len() != expected.len() {
            return Err(Error::InvalidInput(format!(
                "{} leaf ids for {} parameter arrays",
                ids.len(),
                expected.len()
            )));
        }
        let mut it = ids.iter().copied();
        let mut next = move || it.next().expect("length checked");
        let w_syn = next();
        let b_syn = next();
        let (w_ant, b_ant) = if hp.single_space {
            (None, None)
        } else {
            (Some(next()), Some(next()))
        };
        let w_fuse = next();
        let b_fuse = next();
        let layer_count = if hp.no_graph { 0 } else { hp.layers };
        let mut layers = Vec::with_capacity(layer_count);
        for _ in 0..layer_count {
            let mut heads = Vec::with_capacity(hp.heads);
            for _ in 0..hp.heads {
                heads.push(BoundHead {
                    w_q: next(),
                    w_k: next(),
                    w_v: next(),
                });
            }
            let w_o = next();
            layers.push(BoundLayer { heads, w_o });
        }
        Ok(BoundParams {
            w_syn,
            b_syn,
            w_ant,
            b_ant,
            w_fuse,
            b_fuse,
            layers,
            w_hidden: next(),
            b_hidden: next(),
            w_out: next(),
            b_out: next(),
            order: ids.to_vec(),
        })
    }
}

/// Register every parameter array as a tape leaf.
pub fn bind_params(tape: &mut GradTape, params: &ModelParams) -> BoundParams {
    let mut order = Vec::new();
    let mut leaf = |tape: &mut GradTape, t: &Tensor| {
        let id = tape.leaf(t.clone());
        order.push(id);
        id
    };
    let w_syn = leaf(tape, &params.w_syn);
    let b_syn = leaf(tape, &params.b_syn);
    let (w_ant, b_ant) = match (&params.w_ant, &params.b_ant) {
        (Some(w), Some(b)) => (Some(leaf(tape, w)), Some(leaf(tape, b))),
        _ => (None, None),
    };
    let w_fuse = leaf(tape, &params.w_fuse);
    let b_fuse = leaf(tape, &params.b_fuse);
    let layers = params
        .layers
        .iter()
        .map(|l| BoundLayer {
            heads: l
                .heads
                .iter()
                .map(|h| BoundHead {
                    w_q: leaf(tape, &h.w_q),
                    w_k: leaf(tape, &h.w_k),
                    w_v: leaf(tape, &h.w_v),
                })
                .collect(),
            w_o: leaf(tape, &l.w_o),
        })
        .collect();
    let w_hidden = leaf(tape, &params.w_hidden);
    let b_hidden = leaf(tape, &params.b_hidden);
    let w_out = leaf(tape, &params.w_out);
    let b_out = leaf(tape, &params.b_out);
    BoundParams {
        w_syn,
        b_syn,
        w_ant,
        b_ant,
        w_fuse,
        b_fuse,
        layers,
        w_hidden,
        b_hidden,
        w_out,
        b_out,
        order,
    }
}

/// A pair's projected representations and similarity diagnostics.
#[derive(Debug, Clone)]
pub struct PairForward {
    pub s1: NodeId,
    pub s2: NodeId,
    pub a1: Option<NodeId>,
    pub a2: Option<NodeId>,
    /// Cosine similarity of the synonym-space projections.
    pub sim_syn: f64,
    /// Cosine similarity of the antonym-space projections; absent in
    /// single-space mode.
    pub sim_ant: Option<f64>,
    /// Fused node feature; set by [`fuse`].
    pub fused: Option<NodeId>,
}

/// Project a pair's embeddings into both spaces:
/// `s_i = dropout(relu(W_syn h_i + b_syn))` and the antonym analogue.
pub fn project_dual(
    tape: &mut GradTape,
    bound: &BoundParams,
    hp: &HyperParams,
    h1: &[f64],
    h2: &[f64],
    mode: Mode,
    rng: &mut Rng,
) -> Result<PairForward> {
    if h1.len() != hp.d || h2.len() != hp.d {
        return Err(Error::ShapeMismatch {
            op: "project_dual",
            left: vec![h1.len(), h2.len()],
            right: vec![hp.d],
        });
    }
    let training = mode.is_training();
    let project = |tape: &mut GradTape, w: NodeId, b: NodeId, h: &[f64], rng: &mut Rng| -> Result<NodeId> {
        let input = tape.constant(Tensor::vector(h.to_vec()));
        let pre = tape.matvec(w, input)?;
        let pre = tape.add(pre, b)?;
        let act = tape.relu(pre);
        tape.dropout(act, hp.dropout_rate, training, rng)
    };
    let s1 = project(tape, bound.w_syn, bound.b_syn, h1, rng)?;
    let s2 = project(tape, bound.w_syn, bound.b_syn, h2, rng)?;
    let (a1, a2) = match (bound.w_ant, bound.b_ant) {
        (Some(w), Some(b)) => (
            Some(project(tape, w, b, h1, rng)?),
            Some(project(tape, w, b, h2, rng)?),
        ),
        _ => (None, None),
    };
    let sim_syn = tensor::cosine(tape.value(s1), tape.value(s2))?;
    let sim_ant = match (a1, a2) {
        (Some(x), Some(y)) => Some(tensor::cosine(tape.value(x), tape.value(y))?),
        _ => None,
    };
    Ok(PairForward {
        s1,
        s2,
        a1,
        a2,
        sim_syn,
        sim_ant,
        fused: None,
    })
}

/// Fused node feature `W_f [s1; s2; a1; a2] + b_f` (antonym parts omitted in
/// single-space mode). Stores the result in the forward record and returns it.
pub fn fuse(tape: &mut GradTape, bound: &BoundParams, pf: &mut PairForward) -> Result<NodeId> {
    let mut parts = vec![pf.s1, pf.s2];
    if let (Some(a1), Some(a2)) = (pf.a1, pf.a2) {
        parts.push(a1);
        parts.push(a2);
    }
    let cat = tape.concat(&parts)?;
    let mapped = tape.matvec(bound.w_fuse, cat)?;
    let fused = tape.add(mapped, bound.b_fuse)?;
    pf.fused = Some(fused);
    Ok(fused)
}

/// One graph-transformer layer: per node, scaled dot-product multi-head
/// attention over its neighbors plus itself (edge weights enter as additive
/// `ln w` logit biases), concatenated heads mapped by `W_O`, then ReLU and
/// dropout.
pub fn transformer_conv_layer(
    tape: &mut GradTape,
    layer: &BoundLayer,
    hp: &HyperParams,
    nodes: &[NodeId],
    graph: &PairGraph,
    mode: Mode,
    rng: &mut Rng,
) -> Result<Vec<NodeId>> {
    Ok(transformer_conv_layer_with_attention(tape, layer, hp, nodes, graph, mode, rng)?.0)
}

/// [`transformer_conv_layer`] that also returns the attention-coefficient
/// nodes, indexed `[node][head]`, for diagnostics and invariant checks.
pub fn transformer_conv_layer_with_attention(
    tape: &mut GradTape,
    layer: &BoundLayer,
    hp: &HyperParams,
    nodes: &[NodeId],
    graph: &PairGraph,
    mode: Mode,
    rng: &mut Rng,
) -> Result<(Vec<NodeId>, Vec<Vec<NodeId>>)> {
    let n = nodes.len();
    if graph.n_nodes() != n {
        return Err(Error::Graph(format!(
            "graph has {} nodes, feature list has {n}",
            graph.n_nodes()
        )));
    }
    if let Some(e) = graph
        .edges()
        .iter()
        .find(|e| e.src >= n || e.dst >= n)
    {
        return Err(Error::Graph(format!(
            "edge {} -> {} references a node outside 0..{n}",
            e.src, e.dst
        )));
    }

    let scale = 1.0 / (hp.head_dim() as f64).sqrt();
    let training = mode.is_training();

    // Ego attention sets: sorted neighbors plus self (self-loop weight 1).
    let egos: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let mut set = graph.neighbors(i);
            set.push((i, 1.0));
            set.sort_by_key(|&(j, _)| j);
            set
        })
        .collect();

    let mut outputs = Vec::with_capacity(n);
    let mut attention = Vec::with_capacity(n);
    // per-head caches of W_K x_j / W_V x_j, filled lazily
    let mut keys: Vec<Vec<Option<NodeId>>> = vec![vec![None; n]; layer.heads.len()];
    let mut values: Vec<Vec<Option<NodeId>>> = vec![vec![None; n]; layer.heads.len()];

    for i in 0..n {
        let mut head_outputs = Vec::with_capacity(layer.heads.len());
        let mut head_attention = Vec::with_capacity(layer.heads.len());
        for (h, head) in layer.heads.iter().enumerate() {
            let q = tape.matvec(head.w_q, nodes[i])?;
            let mut logit_nodes = Vec::with_capacity(egos[i].len());
            let mut bias = Vec::with_capacity(egos[i].len());
            for &(j, w) in &egos[i] {
                let k = match keys[h][j] {
                    Some(id) => id,
                    None => {
                        let id = tape.matvec(head.w_k, nodes[j])?;
                        keys[h][j] = Some(id);
                        id
                    }
                };
                logit_nodes.push(tape.dot(q, k)?);
                bias.push(w.ln());
            }
            let logits = tape.concat(&logit_nodes)?;
            let logits = tape.scale(logits, scale);
            let logits = tape.add_const(logits, &bias)?;
            let attn = tape.softmax(logits)?;
            head_attention.push(attn);

            let mut acc: Option<NodeId> = None;
            for (t, &(j, _)) in egos[i].iter().enumerate() {
                let v = match values[h][j] {
                    Some(id) => id,
                    None => {
                        let id = tape.matvec(head.w_v, nodes[j])?;
                        values[h][j] = Some(id);
                        id
                    }
                };
                let coeff = tape.select(attn, t)?;
                let term = tape.scale_by_scalar(v, coeff)?;
                acc = Some(match acc {
                    None => term,
                    Some(a) => tape.add(a, term)?,
                });
            }
            head_outputs.push(acc.expect("ego set always contains self"));
        }
        let cat = tape.concat(&head_outputs)?;
        let mixed = tape.matvec(layer.w_o, cat)?;
        let act = tape.relu(mixed);
        outputs.push(tape.dropout(act, hp.dropout_rate, training, rng)?);
        attention.push(head_attention);
    }
    Ok((outputs, attention))
}

/// Mean of a set of node-feature vectors.
pub fn global_mean_pool(tape: &mut GradTape, nodes: &[NodeId]) -> Result<NodeId> {
    if nodes.is_empty() {
        return Err(Error::InvalidInput("mean pool over an empty graph".into()));
    }
    let mut acc = nodes[0];
    for &id in &nodes[1..] {
        acc = tape.add(acc, id)?;
    }
    Ok(tape.scale(acc, 1.0 / nodes.len() as f64))
}

/// Classifier head: `sigmoid(W_2 dropout(relu(W_1 x + b_1)) + b_2)` as a `[1]`
/// probability node.
pub fn classify(
    tape: &mut GradTape,
    bound: &BoundParams,
    hp: &HyperParams,
    x: NodeId,
    mode: Mode,
    rng: &mut Rng,
) -> Result<NodeId> {
    let pre = tape.matvec(bound.w_hidden, x)?;
    let pre = tape.add(pre, bound.b_hidden)?;
    let act = tape.relu(pre);
    let act = tape.dropout(act, hp.dropout_rate, mode.is_training(), rng)?;
    let logit = tape.matvec(bound.w_out, act)?;
    let logit = tape.add(logit, bound.b_out)?;
    Ok(tape.sigmoid(logit))
}

/// Everything produced by a batch forward pass.
#[derive(Debug)]
pub struct BatchForward {
    pub forwards: Vec<PairForward>,
    pub graph: PairGraph,
    /// Final per-node features after the transformer stack.
    pub node_features: Vec<NodeId>,
    /// Per-pair probability nodes.
    pub pred_nodes: Vec<NodeId>,
    /// All predictions concatenated into an `[N]` vector node.
    pub preds: NodeId,
}

/// Node fingerprints (per-space mean of the pair's projections) used by graph
/// rule 2.
pub fn node_fingerprints(tape: &GradTape, batch: &[LabeledPair], forwards: &[PairForward]) -> Result<Vec<PairNode>> {
    if batch.len() != forwards.len() {
        return Err(Error::InvalidInput(format!(
            "batch has {} pairs but {} forwards",
            batch.len(),
            forwards.len()
        )));
    }
    let mean2 = |a: &Tensor, b: &Tensor| -> Vec<f64> {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| 0.5 * (x + y))
            .collect()
    };
    Ok(batch
        .iter()
        .zip(forwards)
        .map(|(pair, pf)| PairNode {
            w1: pair.w1.clone(),
            w2: pair.w2.clone(),
            syn_fp: mean2(tape.value(pf.s1), tape.value(pf.s2)),
            ant_fp: match (pf.a1, pf.a2) {
                (Some(a1), Some(a2)) => Some(mean2(tape.value(a1), tape.value(a2))),
                _ => None,
            },
        })
        .collect())
}

/// Full forward pass over a batch: projections, fusion, graph construction,
/// transformer stack, and per-node classification.
///
/// A single-pair batch pools its one-node graph before classifying (an
/// identical computation). With `no_graph` the transformer stack is skipped
/// and node features stay at the fused vectors.
pub fn forward_batch(
    tape: &mut GradTape,
    bound: &BoundParams,
    hp: &HyperParams,
    batch: &[LabeledPair],
    table: &EmbeddingTable,
    mode: Mode,
    rng: &mut Rng,
) -> Result<BatchForward> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let mut forwards = Vec::with_capacity(batch.len());
    for pair in batch {
        let h1 = table.get(&pair.w1).ok_or_else(|| Error::Vocabulary {
            token: pair.w1.clone(),
            language: table.language().to_string(),
        })?;
        let h2 = table.get(&pair.w2).ok_or_else(|| Error::Vocabulary {
            token: pair.w2.clone(),
            language: table.language().to_string(),
        })?;
        let mut pf = project_dual(tape, bound, hp, h1, h2, mode, rng)?;
        fuse(tape, bound, &mut pf)?;
        forwards.push(pf);
    }

    let mut features: Vec<NodeId> = forwards
        .iter()
        .map(|pf| pf.fused.expect("fused set above"))
        .collect();

    let graph = if hp.no_graph {
        PairGraph::empty(batch.len())
    } else {
        let nodes = node_fingerprints(tape, batch, &forwards)?;
        let g = graph::build_graph(&nodes, hp.tau, hp.trans_weight)?;
        for layer in &bound.layers {
            features = transformer_conv_layer(tape, layer, hp, &features, &g, mode, rng)?;
        }
        g
    };

    let pred_nodes: Vec<NodeId> = if batch.len() == 1 {
        let pooled = global_mean_pool(tape, &features)?;
        vec![classify(tape, bound, hp, pooled, mode, rng)?]
    } else {
        features
            .iter()
            .map(|&x| classify(tape, bound, hp, x, mode, rng))
            .collect::<Result<_>>()?
    };
    let preds = tape.concat(&pred_nodes)?;

    Ok(BatchForward {
        forwards,
        graph,
        node_features: features,
        pred_nodes,
        preds,
    })
}
