//! Batch-level word-pair graphs.
//!
//! Each node is one word pair of the batch. Edges come from three rules:
//!
//! 1. Word overlap: pairs sharing a surface token (weight 1).
//! 2. Similarity: node fingerprints (the mean of a pair's two projected
//!    vectors, per space) with cosine similarity strictly above `tau` in
//!    either space (weight 1).
//! 3. Transitivity: for existing edges `(i,j)` and `(j,k)` with no `(i,k)`
//!    edge, a single-hop closure edge of weight `trans_weight`; closure edges
//!    do not cascade.
//!
//! The stored edge list carries both directions, never self-loops; self-loops
//! are added at attention time with weight 1.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor::cosine_slices;

/// Which construction rule produced an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRule {
    WordOverlap,
    Similarity,
    Transitivity,
}

impl EdgeRule {
    /// 1-based rule number as used in `graph-dump` output.
    pub fn number(self) -> u8 {
        match self {
            EdgeRule::WordOverlap => 1,
            EdgeRule::Similarity => 2,
            EdgeRule::Transitivity => 3,
        }
    }
}

/// Directed edge with weight in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
    pub rule: EdgeRule,
}

/// One node's identity for graph construction: its surface tokens plus its
/// per-space fingerprint vectors.
#[derive(Debug, Clone)]
pub struct PairNode {
    pub w1: String,
    pub w2: String,
    /// Mean of the pair's two synonym-space projections.
    pub syn_fp: Vec<f64>,
    /// Mean of the pair's two antonym-space projections; absent in
    /// single-space mode.
    pub ant_fp: Option<Vec<f64>>,
}

/// The batch graph: node count plus a direction-closed weighted edge list.
#[derive(Debug, Clone)]
pub struct PairGraph {
    n_nodes: usize,
    edges: Vec<Edge>,
}

impl PairGraph {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// All directed edges, sorted by `(src, dst)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `node` as `(neighbor, weight)`, ascending by neighbor.
    pub fn neighbors(&self, node: usize) -> Vec<(usize, f64)> {
        self.edges
            .iter()
            .filter(|e| e.src == node)
            .map(|e| (e.dst, e.weight))
            .collect()
    }

    /// Graph with the given node count and no edges.
    pub fn empty(n_nodes: usize) -> Self {
        PairGraph {
            n_nodes,
            edges: Vec::new(),
        }
    }

    /// Assemble a graph from a raw edge list, taken as-is (no invariant
    /// enforcement). Consumers that require valid indices check them.
    pub fn from_parts(n_nodes: usize, edges: Vec<Edge>) -> Self {
        PairGraph { n_nodes, edges }
    }
}

/// Apply the three construction rules to a batch of pair nodes.
///
/// Duplicate edges collapse to the maximum weight (rules 1 and 2 both carry
/// weight 1; the first rule to fire wins the tag). `trans_weight` must lie in
/// `(0, 1]`.
pub fn build_graph(nodes: &[PairNode], tau: f64, trans_weight: f64) -> Result<PairGraph> {
    if !(trans_weight > 0.0 && trans_weight <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "transitivity weight must be in (0, 1], got {trans_weight}"
        )));
    }
    let n = nodes.len();
    // undirected edge map keyed by (min, max)
    let mut edges: BTreeMap<(usize, usize), (f64, EdgeRule)> = BTreeMap::new();

    // Rule 1: shared surface token.
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (&nodes[i], &nodes[j]);
            let shared =
                a.w1 == b.w1 || a.w1 == b.w2 || a.w2 == b.w1 || a.w2 == b.w2;
            if shared {
                edges.insert((i, j), (1.0, EdgeRule::WordOverlap));
            }
        }
    }

    // Rule 2: fingerprint similarity strictly above tau in either space.
    for i in 0..n {
        for j in (i + 1)..n {
            if edges.contains_key(&(i, j)) {
                continue;
            }
            let (a, b) = (&nodes[i], &nodes[j]);
            let mut above = cosine_slices(&a.syn_fp, &b.syn_fp) > tau;
            if !above {
                if let (Some(fa), Some(fb)) = (&a.ant_fp, &b.ant_fp) {
                    above = cosine_slices(fa, fb) > tau;
                }
            }
            if above {
                edges.insert((i, j), (1.0, EdgeRule::Similarity));
            }
        }
    }

    // Rule 3: single-hop closure over the rule-1/2 edge set; no cascading.
    let direct: Vec<(usize, usize)> = edges.keys().cloned().collect();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in &direct {
        adjacency[i].push(j);
        adjacency[j].push(i);
    }
    let mut closures: Vec<(usize, usize)> = Vec::new();
    for mid in 0..n {
        let nbrs = &adjacency[mid];
        for x in 0..nbrs.len() {
            for y in (x + 1)..nbrs.len() {
                let (i, k) = if nbrs[x] < nbrs[y] {
                    (nbrs[x], nbrs[y])
                } else {
                    (nbrs[y], nbrs[x])
                };
                if i != k && !edges.contains_key(&(i, k)) {
                    closures.push((i, k));
                }
            }
        }
    }
    for (i, k) in closures {
        edges
            .entry((i, k))
            .or_insert((trans_weight, EdgeRule::Transitivity));
    }

    // Expand to both directions, sorted by (src, dst).
    let mut out = Vec::with_capacity(edges.len() * 2);
    for (&(i, j), &(weight, rule)) in &edges {
        out.push(Edge {
            src: i,
            dst: j,
            weight,
            rule,
        });
        out.push(Edge {
            src: j,
            dst: i,
            weight,
            rule,
        });
    }
    out.sort_by_key(|e| (e.src, e.dst));
    Ok(PairGraph {
        n_nodes: n,
        edges: out,
    })
}

/// Union-find over `n` elements with path compression and union by size.
struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Summary counts for a [`PairGraph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphStats {
    pub nodes: usize,
    /// Undirected edge counts indexed by rule number minus one.
    pub edges_by_rule: [usize; 3],
    /// degree -> number of nodes with that degree
    pub degree_histogram: BTreeMap<usize, usize>,
    pub components: usize,
}

impl GraphStats {
    pub fn total_edges(&self) -> usize {
        self.edges_by_rule.iter().sum()
    }
}

/// Count nodes, undirected edges per rule, the degree histogram, and
/// connected components.
pub fn graph_stats(g: &PairGraph) -> GraphStats {
    let mut edges_by_rule = [0usize; 3];
    let mut degree = vec![0usize; g.n_nodes()];
    let mut uf = UnionFind::new(g.n_nodes());
    for e in g.edges() {
        degree[e.src] += 1;
        if e.src < e.dst {
            edges_by_rule[(e.rule.number() - 1) as usize] += 1;
            uf.union(e.src, e.dst);
        }
    }
    let mut degree_histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for &d in &degree {
        *degree_histogram.entry(d).or_default() += 1;
    }
    let components = (0..g.n_nodes())
        .filter(|&i| uf.find(i) == i)
        .count();
    GraphStats {
        nodes: g.n_nodes(),
        edges_by_rule,
        degree_histogram,
        components,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Rng, Stream};
    use proptest::prelude::*;

    fn node(w1: &str, w2: &str, syn: Vec<f64>, ant: Vec<f64>) -> PairNode {
        PairNode {
            w1: w1.into(),
            w2: w2.into(),
            syn_fp: syn,
            ant_fp: Some(ant),
        }
    }

    fn undirected(g: &PairGraph) -> Vec<(usize, usize, f64, u8)> {
        g.edges()
            .iter()
            .filter(|e| e.src < e.dst)
            .map(|e| (e.src, e.dst, e.weight, e.rule.number()))
            .collect()
    }

    #[test]
    fn shared_word_rule_only() {
        // tau above 1 switches rule 2 off entirely
        let nodes = vec![
            node("hot", "cold", vec![1.0, 0.0], vec![0.5, 0.5]),
            node("cold", "icy", vec![0.0, 1.0], vec![0.5, -0.5]),
            node("big", "small", vec![-1.0, 0.0], vec![-0.5, 0.5]),
        ];
        let g = build_graph(&nodes, 1.01, 0.5).unwrap();
        assert_eq!(undirected(&g), vec![(0, 1, 1.0, 1)]);
        assert_eq!(g.edges().len(), 2, "both directions stored");
    }

    #[test]
    fn transitive_closure_single_hop() {
        let nodes = vec![
            node("a", "b", vec![1.0, 0.0], vec![1.0, 0.0]),
            node("b", "c", vec![0.0, 1.0], vec![0.0, 1.0]),
            node("c", "d", vec![-1.0, 0.0], vec![-1.0, 0.0]),
        ];
        let g = build_graph(&nodes, 1.0, 0.5).unwrap();
        // rule 1: 0-1 (b), 1-2 (c); rule 3 adds 0-2 at weight 0.5
        assert_eq!(
            undirected(&g),
            vec![(0, 1, 1.0, 1), (0, 2, 0.5, 3), (1, 2, 1.0, 1)]
        );
    }

    #[test]
    fn closure_does_not_cascade() {
        // chain a-b, b-c, c-d, d-e: rule 3 adds 2-hop pairs only
        let nodes = vec![
            node("a", "b", vec![1.0, 0.0], vec![1.0, 0.0]),
            node("b", "c", vec![0.0, 1.0], vec![0.0, 1.0]),
            node("c", "d", vec![-1.0, 0.0], vec![-1.0, 0.0]),
            node("d", "e", vec![0.0, -1.0], vec![0.0, -1.0]),
        ];
        let g = build_graph(&nodes, 1.0, 0.5).unwrap();
        let got = undirected(&g);
        assert!(got.contains(&(0, 2, 0.5, 3)));
        assert!(got.contains(&(1, 3, 0.5, 3)));
        assert!(
            !got.iter().any(|&(i, j, _, _)| (i, j) == (0, 3)),
            "3-hop pair must stay unconnected: {got:?}"
        );
    }

    #[test]
    fn single_pair_has_no_edges() {
        let nodes = vec![node("a", "b", vec![1.0], vec![1.0])];
        let g = build_graph(&nodes, 0.5, 0.5).unwrap();
        assert!(g.edges().is_empty());
    }

    #[test]
    fn similarity_rule_fires_above_tau() {
        let nodes = vec![
            node("a", "b", vec![1.0, 0.0], vec![0.0, 1.0]),
            node("c", "d", vec![0.9, 0.1], vec![1.0, 0.0]),
        ];
        let g = build_graph(&nodes, 0.9, 0.5).unwrap();
        assert_eq!(undirected(&g), vec![(0, 1, 1.0, 2)]);
    }

    #[test]
    fn rule2_in_either_space() {
        // synonym fingerprints orthogonal, antonym fingerprints parallel
        let nodes = vec![
            node("a", "b", vec![1.0, 0.0], vec![1.0, 0.0]),
            node("c", "d", vec![0.0, 1.0], vec![2.0, 0.0]),
        ];
        let g = build_graph(&nodes, 0.9, 0.5).unwrap();
        assert_eq!(undirected(&g), vec![(0, 1, 1.0, 2)]);
    }

    #[test]
    fn invalid_trans_weight_rejected() {
        let nodes = vec![node("a", "b", vec![1.0], vec![1.0])];
        assert!(build_graph(&nodes, 0.5, 0.0).is_err());
        assert!(build_graph(&nodes, 0.5, 1.5).is_err());
    }

    #[test]
    fn stats_isolated_nodes() {
        let g = PairGraph::empty(5);
        let s = graph_stats(&g);
        assert_eq!(s.components, 5);
        assert_eq!(s.total_edges(), 0);
        assert_eq!(s.degree_histogram[&0], 5);
    }

    #[test]
    fn stats_complete_graph_on_four() {
        // all nodes share the word "x"
        let nodes: Vec<PairNode> = (0..4)
            .map(|i| {
                node(
                    "x",
                    &format!("y{i}"),
                    vec![1.0, i as f64],
                    vec![1.0, -(i as f64)],
                )
            })
            .collect();
        let g = build_graph(&nodes, 1.0, 0.5).unwrap();
        let s = graph_stats(&g);
        assert_eq!(s.edges_by_rule[0], 6);
        assert_eq!(s.components, 1);
        assert_eq!(s.degree_histogram, BTreeMap::from([(3, 4)]));
    }

    /// Straight-line O(n^3) reapplication of the three rules.
    fn brute_force(
        nodes: &[PairNode],
        tau: f64,
        tw: f64,
    ) -> Vec<(usize, usize, f64)> {
        let n = nodes.len();
        let mut w = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (a, b) = (&nodes[i], &nodes[j]);
                if a.w1 == b.w1 || a.w1 == b.w2 || a.w2 == b.w1 || a.w2 == b.w2 {
                    w[i][j] = 1.0;
                } else {
                    let mut sim = cosine_slices(&a.syn_fp, &b.syn_fp);
                    if let (Some(fa), Some(fb)) = (&a.ant_fp, &b.ant_fp) {
                        sim = sim.max(cosine_slices(fa, fb));
                    }
                    if sim > tau {
                        w[i][j] = 1.0;
                    }
                }
            }
        }
        let snapshot = w.clone();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if i != k
                        && snapshot[i][j] > 0.0
                        && snapshot[j][k] > 0.0
                        && snapshot[i][k] == 0.0
                    {
                        w[i][k] = w[i][k].max(tw);
                        w[k][i] = w[k][i].max(tw);
                    }
                }
            }
        }
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if w[i][j] > 0.0 {
                    out.push((i, j, w[i][j]));
                }
            }
        }
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out
    }

    fn random_nodes(count: usize, rng: &mut Rng) -> Vec<PairNode> {
        (0..count)
            .map(|_| {
                let w1 = format!("w{}", rng.below(8));
                let mut w2 = format!("w{}", rng.below(8));
                while w2 == w1 {
                    w2 = format!("w{}", rng.below(8));
                }
                node(
                    &w1,
                    &w2,
                    (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect(),
                    (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect(),
                )
            })
            .collect()
    }

    #[test]
    fn matches_brute_force_oracle() {
        for seed in 0..50u64 {
            let mut rng = Rng::seeded(seed, Stream::Sampling);
            let n = 2 + rng.below(15);
            let nodes = random_nodes(n, &mut rng);
            let tau = rng.uniform(0.0, 1.0);
            let g = build_graph(&nodes, tau, 0.5).unwrap();
            let got: Vec<(usize, usize, f64)> = g
                .edges()
                .iter()
                .map(|e| (e.src, e.dst, e.weight))
                .collect();
            let want = brute_force(&nodes, tau, 0.5);
            assert_eq!(got, want, "seed {seed}, tau {tau}");
        }
    }

    #[test]
    fn rerunning_closure_adds_nothing() {
        let mut rng = Rng::seeded(77, Stream::Sampling);
        let nodes = random_nodes(10, &mut rng);
        let g1 = build_graph(&nodes, 0.8, 0.5).unwrap();
        // Re-running the full construction on identical inputs is stable.
        let g2 = build_graph(&nodes, 0.8, 0.5).unwrap();
        assert_eq!(g1.edges(), g2.edges());
    }

    proptest! {
        #[test]
        fn permutation_equivariant(seed in 0u64..200) {
            let mut rng = Rng::seeded(seed, Stream::Sampling);
            let n = 2 + rng.below(8);
            let nodes = random_nodes(n, &mut rng);
            let tau = rng.uniform(0.0, 1.0);
            let g = build_graph(&nodes, tau, 0.5).unwrap();

            let mut perm: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut perm);
            let permuted: Vec<PairNode> = perm.iter().map(|&i| nodes[i].clone()).collect();
            let gp = build_graph(&permuted, tau, 0.5).unwrap();

            // inverse map: original index -> new index
            let mut inv = vec![0usize; n];
            for (new, &old) in perm.iter().enumerate() {
                inv[old] = new;
            }
            let mut mapped: Vec<(usize, usize, f64)> = g
                .edges()
                .iter()
                .map(|e| (inv[e.src], inv[e.dst], e.weight))
                .collect();
            mapped.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
            let got: Vec<(usize, usize, f64)> = gp
                .edges()
                .iter()
                .map(|e| (e.src, e.dst, e.weight))
                .collect();
            prop_assert_eq!(mapped, got);
        }

        #[test]
        fn no_shared_words_high_tau_empty(seed in 0u64..100) {
            let mut rng = Rng::seeded(seed, Stream::Sampling);
            let nodes: Vec<PairNode> = (0..6)
                .map(|i| {
                    node(
                        &format!("a{i}"),
                        &format!("b{i}"),
                        (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect(),
                        (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect(),
                    )
                })
                .collect();
            let g = build_graph(&nodes, 1.01, 0.5).unwrap();
            prop_assert!(g.edges().is_empty());
        }
    }
}
