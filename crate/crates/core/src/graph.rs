//! Text-attributed graphs: the canonical in-memory data model, edge-flip
//! application, neighborhood queries, label-stratified splits, and the
//! unnoticeability budget accounting shared by every attack.
//!
//! Graphs are immutable values. Every mutating operation returns a new graph,
//! so attacks and defenses can fan out across threads over shared references.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::text::TextEdit;
use crate::rng::derive;
use rand::seq::SliceRandom;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("node id {0} out of range (node count {1})")]
    NodeOutOfRange(usize, usize),
    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(usize),
    #[error("field `{field}` has length {got}, expected node count {want}")]
    LengthMismatch { field: &'static str, got: usize, want: usize },
    #[error("label id {0} is outside the declared class count {1}")]
    LabelOutOfRange(usize, usize),
    #[error("flip {index} invalid: {op:?} of ({u}, {v}) {reason}")]
    InvalidFlip { index: usize, u: usize, v: usize, op: FlipOp, reason: &'static str },
    #[error("split ratios must sum to 1 (got {0})")]
    BadRatios(f64),
}

/// Which side of the train/val/test partition a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Add or remove a single undirected edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlipOp {
    Add,
    Remove,
}

/// One undirected edge flip. Endpoints are unordered; comparisons use the
/// normalized (min, max, op) key so tie-breaking is the same everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeFlip {
    pub u: usize,
    pub v: usize,
    pub op: FlipOp,
}

impl EdgeFlip {
    pub fn add(u: usize, v: usize) -> Self {
        EdgeFlip { u, v, op: FlipOp::Add }
    }

    pub fn remove(u: usize, v: usize) -> Self {
        EdgeFlip { u, v, op: FlipOp::Remove }
    }

    /// Normalized (min, max, op) key used for ordering and deduplication.
    pub fn key(&self) -> (usize, usize, FlipOp) {
        (self.u.min(self.v), self.u.max(self.v), self.op)
    }

    /// The unordered endpoint pair.
    pub fn pair(&self) -> (usize, usize) {
        (self.u.min(self.v), self.u.max(self.v))
    }
}

impl PartialOrd for EdgeFlip {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EdgeFlip {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

/// Undirected graph whose nodes carry raw text, a class label, and a split tag.
#[derive(Debug, Clone, PartialEq)]
pub struct TextAttributedGraph {
    texts: Vec<String>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    external_ids: Vec<String>,
    split: Vec<Split>,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl TextAttributedGraph {
    /// Validate and build a graph. Edges are deduplicated after normalizing
    /// endpoint order; self-loops are rejected.
    pub fn new(
        texts: Vec<String>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        external_ids: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        split: Vec<Split>,
    ) -> Result<Self, GraphError> {
        let n = texts.len();
        if labels.len() != n {
            return Err(GraphError::LengthMismatch { field: "labels", got: labels.len(), want: n });
        }
        if split.len() != n {
            return Err(GraphError::LengthMismatch { field: "split", got: split.len(), want: n });
        }
        if external_ids.len() != n {
            return Err(GraphError::LengthMismatch {
                field: "external_ids",
                got: external_ids.len(),
                want: n,
            });
        }
        let class_count = class_names.len();
        for &l in &labels {
            if l >= class_count {
                return Err(GraphError::LabelOutOfRange(l, class_count));
            }
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n {
                return Err(GraphError::NodeOutOfRange(u, n));
            }
            if v >= n {
                return Err(GraphError::NodeOutOfRange(v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let adjacency = build_adjacency(n, &set);
        Ok(TextAttributedGraph {
            texts,
            labels,
            class_names,
            external_ids,
            split,
            edges: set,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.texts.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn text(&self, u: usize) -> &str {
        &self.texts[u]
    }

    pub fn texts(&self) -> &[String] {
        &self.texts
    }

    pub fn label(&self, u: usize) -> usize {
        self.labels[u]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn external_id(&self, u: usize) -> &str {
        &self.external_ids[u]
    }

    pub fn external_ids(&self) -> &[String] {
        &self.external_ids
    }

    pub fn split(&self) -> &[Split] {
        &self.split
    }

    pub fn split_of(&self, u: usize) -> Split {
        self.split[u]
    }

    /// Node ids carrying the given split tag, ascending.
    pub fn split_indices(&self, tag: Split) -> Vec<usize> {
        (0..self.node_count()).filter(|&u| self.split[u] == tag).collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    /// Replace the split tags (used when a dataset ships without splits.json).
    pub fn with_split(&self, split: Vec<Split>) -> Result<Self, GraphError> {
        if split.len() != self.node_count() {
            return Err(GraphError::LengthMismatch {
                field: "split",
                got: split.len(),
                want: self.node_count(),
            });
        }
        let mut g = self.clone();
        g.split = split;
        Ok(g)
    }

    /// Replace node texts (feature perturbation and correction produce these).
    pub fn with_texts(&self, texts: Vec<String>) -> Result<Self, GraphError> {
        if texts.len() != self.node_count() {
            return Err(GraphError::LengthMismatch {
                field: "texts",
                got: texts.len(),
                want: self.node_count(),
            });
        }
        let mut g = self.clone();
        g.texts = texts;
        Ok(g)
    }

    /// Apply flips in order, validating each against the running edge set.
    /// Returns a new graph; the original is untouched.
    pub fn apply_flips(&self, flips: &[EdgeFlip]) -> Result<Self, GraphError> {
        let n = self.node_count();
        let mut set = self.edges.clone();
        for (index, f) in flips.iter().enumerate() {
            if f.u >= n {
                return Err(GraphError::NodeOutOfRange(f.u, n));
            }
            if f.v >= n {
                return Err(GraphError::NodeOutOfRange(f.v, n));
            }
            if f.u == f.v {
                return Err(GraphError::SelfLoop(f.u));
            }
            let key = f.pair();
            match f.op {
                FlipOp::Add => {
                    if !set.insert(key) {
                        return Err(GraphError::InvalidFlip {
                            index,
                            u: f.u,
                            v: f.v,
                            op: f.op,
                            reason: "edge already present",
                        });
                    }
                }
                FlipOp::Remove => {
                    if !set.remove(&key) {
                        return Err(GraphError::InvalidFlip {
                            index,
                            u: f.u,
                            v: f.v,
                            op: f.op,
                            reason: "edge absent",
                        });
                    }
                }
            }
        }
        let adjacency = build_adjacency(n, &set);
        let mut g = self.clone();
        g.edges = set;
        g.adjacency = adjacency;
        Ok(g)
    }

    /// `{u}` plus everything within two hops of `u`.
    pub fn two_hop(&self, u: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        out.insert(u);
        for &w in self.neighbors(u) {
            out.insert(w);
            for &x in self.neighbors(w) {
                out.insert(x);
            }
        }
        out
    }

    /// Label-stratified split, deterministic per seed.
    ///
    /// Global tag totals follow cumulative rounding of the ratios over the
    /// node count (Cora at 6:2:2 gives 1625/541/542); per-class quotas start
    /// from floors and leftovers are distributed by largest fractional
    /// remainder against the remaining global deficits. Classes with fewer
    /// nodes than split tags go entirely to train.
    pub fn split_nodes(&self, ratios: (f64, f64, f64), seed: u64) -> Result<Self, GraphError> {
        let (rt, rv, rs) = ratios;
        let sum = rt + rv + rs;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(GraphError::BadRatios(sum));
        }
        let class_count = self.class_count();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); class_count];
        for u in 0..self.node_count() {
            members[self.labels[u]].push(u);
        }
        let mut split = vec![Split::Train; self.node_count()];
        let big: Vec<usize> = (0..class_count).filter(|&c| members[c].len() >= 3).collect();
        let pool: usize = big.iter().map(|&c| members[c].len()).sum();

        let t_train = (rt * pool as f64).round() as usize;
        let t_trval = ((rt + rv) * pool as f64).round() as usize;
        let mut deficit = [0usize; 3];
        let targets = [t_train, t_trval - t_train, pool - t_trval];

        let mut base = vec![[0usize; 3]; class_count];
        let mut leftover = vec![0usize; class_count];
        let mut fracs: Vec<(f64, usize, usize)> = Vec::new();
        for &c in &big {
            let nc = members[c].len() as f64;
            let ideal = [rt * nc, rv * nc, rs * nc];
            for t in 0..3 {
                base[c][t] = ideal[t].floor() as usize;
                fracs.push((ideal[t] - ideal[t].floor(), c, t));
            }
            leftover[c] = members[c].len() - base[c].iter().sum::<usize>();
        }
        for t in 0..3 {
            let assigned: usize = big.iter().map(|&c| base[c][t]).sum();
            deficit[t] = targets[t] - assigned;
        }
        fracs.sort_by(|a, b| {
            b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
        });
        for &(_, c, t) in &fracs {
            let m = leftover[c].min(deficit[t]);
            base[c][t] += m;
            leftover[c] -= m;
            deficit[t] -= m;
        }
        // Mop up any units the remainder pass could not place.
        for &c in &big {
            for t in 0..3 {
                let m = leftover[c].min(deficit[t]);
                base[c][t] += m;
                leftover[c] -= m;
                deficit[t] -= m;
            }
        }

        for c in 0..class_count {
            let mut nodes = members[c].clone();
            if nodes.is_empty() {
                continue;
            }
            if nodes.len() < 3 {
                continue; // already tagged Train
            }
            let mut rng = derive(seed, "split", c as u64);
            nodes.shuffle(&mut rng);
            let (ntr, nva) = (base[c][0], base[c][1]);
            for (i, &u) in nodes.iter().enumerate() {
                split[u] = if i < ntr {
                    Split::Train
                } else if i < ntr + nva {
                    Split::Val
                } else {
                    Split::Test
                };
            }
        }
        self.with_split(split)
    }
}

fn build_adjacency(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

/// Text edits queued for one node, keyed by node id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeTextEdits {
    pub node: usize,
    pub edits: Vec<TextEdit>,
}

/// Per-node character-edit budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeCharBudget {
    pub node: usize,
    pub budget: usize,
}

/// The attacker's artifact: edge flips plus per-node text edits, with the
/// budgets they were produced under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PerturbationSet {
    pub flips: Vec<EdgeFlip>,
    pub edge_budget: usize,
    #[serde(default)]
    pub text_edits: Vec<NodeTextEdits>,
    #[serde(default)]
    pub char_budget_per_node: Vec<NodeCharBudget>,
}

impl PerturbationSet {
    pub fn structural(flips: Vec<EdgeFlip>, edge_budget: usize) -> Self {
        PerturbationSet { flips, edge_budget, ..Default::default() }
    }

    pub fn edits_for(&self, node: usize) -> Option<&[TextEdit]> {
        self.text_edits
            .binary_search_by_key(&node, |e| e.node)
            .ok()
            .map(|i| self.text_edits[i].edits.as_slice())
    }

    pub fn char_budget_for(&self, node: usize) -> Option<usize> {
        self.char_budget_per_node
            .binary_search_by_key(&node, |e| e.node)
            .ok()
            .map(|i| self.char_budget_per_node[i].budget)
    }

    /// Merge another perturbation set (the unified attack combines halves).
    pub fn merge(mut self, other: PerturbationSet) -> Self {
        self.flips.extend(other.flips);
        self.text_edits.extend(other.text_edits);
        self.text_edits.sort_by_key(|e| e.node);
        self.char_budget_per_node.extend(other.char_budget_per_node);
        self.char_budget_per_node.sort_by_key(|e| e.node);
        self.char_budget_per_node.dedup_by_key(|e| e.node);
        self.edge_budget = self.edge_budget.max(other.edge_budget);
        self
    }
}

/// One node exceeding its character-edit budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextBudgetViolation {
    pub node: usize,
    pub used: usize,
    pub budget: usize,
}

/// Outcome of the unnoticeability check. Failures are reported, not thrown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub edge_budget: usize,
    pub flips_used: usize,
    /// Flips beyond the structural budget (0 when within budget).
    pub edge_excess: usize,
    pub text_violations: Vec<TextBudgetViolation>,
    /// Power-law exponent shift of the degree distribution, when the optional
    /// degree test ran: (clean alpha, perturbed alpha).
    pub degree_exponents: Option<(f64, f64)>,
    pub degree_test_passed: Option<bool>,
    pub passed: bool,
}

/// Tolerated power-law exponent shift for the optional degree test.
pub const DEGREE_EPSILON_ALPHA: f64 = 0.1;

/// Check a perturbation set against the structural and per-node text budgets.
/// The structural budget is `floor(fraction * |E|)` of the original graph.
pub fn check_budget(
    original: &TextAttributedGraph,
    perturbation: &PerturbationSet,
    fraction: f64,
    run_degree_test: bool,
) -> BudgetReport {
    assert!(fraction > 0.0 && fraction <= 1.0, "fraction must be in (0, 1]");
    let edge_budget = (fraction * original.edge_count() as f64).floor() as usize;
    let flips_used = perturbation.flips.len();
    let edge_excess = flips_used.saturating_sub(edge_budget);

    let mut text_violations = Vec::new();
    for entry in &perturbation.text_edits {
        let budget = perturbation.char_budget_for(entry.node).unwrap_or(0);
        if entry.edits.len() > budget {
            text_violations.push(TextBudgetViolation {
                node: entry.node,
                used: entry.edits.len(),
                budget,
            });
        }
    }

    let (degree_exponents, degree_test_passed) = if run_degree_test {
        match original.apply_flips(&perturbation.flips) {
            Ok(perturbed) => {
                let a0 = power_law_alpha(original);
                let a1 = power_law_alpha(&perturbed);
                ((a0, a1).into(), Some((a0 - a1).abs() <= DEGREE_EPSILON_ALPHA))
            }
            Err(_) => (None, Some(false)),
        }
    } else {
        (None, None)
    };

    let passed =
        edge_excess == 0 && text_violations.is_empty() && degree_test_passed.unwrap_or(true);
    BudgetReport {
        edge_budget,
        flips_used,
        edge_excess,
        text_violations,
        degree_exponents,
        degree_test_passed,
        passed,
    }
}

/// Continuous-approximation MLE of the degree distribution's power-law
/// exponent over degrees >= 1.
pub fn power_law_alpha(graph: &TextAttributedGraph) -> f64 {
    let degrees: Vec<f64> =
        (0..graph.node_count()).map(|u| graph.degree(u) as f64).filter(|&d| d >= 1.0).collect();
    if degrees.is_empty() {
        return f64::NAN;
    }
    let s: f64 = degrees.iter().map(|&d| (d / 0.5).ln()).sum();
    1.0 + degrees.len() as f64 / s
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy(edges: &[(usize, usize)], n: usize) -> TextAttributedGraph {
        TextAttributedGraph::new(
            (0..n).map(|i| format!("node text {i}")).collect(),
            vec![0; n],
            vec!["c0".into()],
            (0..n).map(|i| format!("n{i}")).collect(),
            edges.iter().copied(),
            vec![Split::Train; n],
        )
        .unwrap()
    }

    /// Path 0-1-2-3-4 plus chord 1-3.
    fn t5() -> TextAttributedGraph {
        toy(&[(0, 1), (1, 2), (2, 3), (3, 4), (1, 3)], 5)
    }

    #[test]
    fn duplicate_and_reversed_edges_collapse() {
        let g = toy(&[(0, 1), (1, 0), (0, 1)], 2);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn self_loop_rejected() {
        let err = TextAttributedGraph::new(
            vec!["a".into()],
            vec![0],
            vec!["c".into()],
            vec!["x".into()],
            [(0, 0)],
            vec![Split::Train],
        );
        assert!(matches!(err, Err(GraphError::SelfLoop(0))));
    }

    #[test]
    fn apply_flips_add_makes_triangle() {
        let g = toy(&[(0, 1), (1, 2)], 3);
        let h = g.apply_flips(&[EdgeFlip::add(0, 2)]).unwrap();
        assert_eq!(h.edge_count(), 3);
        assert!(h.has_edge(0, 2));
        assert_eq!(g.edge_count(), 2, "original untouched");
    }

    #[test]
    fn apply_flips_empty_is_identity() {
        let g = t5();
        let h = g.apply_flips(&[]).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), h.edges().collect::<Vec<_>>());
    }

    #[test]
    fn apply_flips_reports_offending_index() {
        let g = toy(&[(0, 1), (1, 2)], 3);
        let err = g.apply_flips(&[EdgeFlip::remove(0, 2)]).unwrap_err();
        match err {
            GraphError::InvalidFlip { index, .. } => assert_eq!(index, 0),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn flips_then_inverse_restore_edges() {
        let g = t5();
        let flips = vec![EdgeFlip::add(0, 4), EdgeFlip::remove(1, 3), EdgeFlip::add(0, 2)];
        let h = g.apply_flips(&flips).unwrap();
        let inverse: Vec<EdgeFlip> = flips
            .iter()
            .rev()
            .map(|f| match f.op {
                FlipOp::Add => EdgeFlip::remove(f.u, f.v),
                FlipOp::Remove => EdgeFlip::add(f.u, f.v),
            })
            .collect();
        let back = h.apply_flips(&inverse).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), back.edges().collect::<Vec<_>>());
    }

    #[test]
    fn two_hop_hand_bfs_on_t5() {
        let g = t5();
        let hop = g.two_hop(0);
        assert_eq!(hop.into_iter().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn two_hop_isolated_is_self() {
        let g = toy(&[(1, 2)], 3);
        assert_eq!(g.two_hop(0).into_iter().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn two_hop_complete_graph_is_everything() {
        let g = toy(&[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], 4);
        for u in 0..4 {
            assert_eq!(g.two_hop(u).len(), 4);
        }
    }

    #[test]
    fn two_hop_complement_excludes_neighbors() {
        let g = t5();
        for u in 0..5 {
            let hop = g.two_hop(u);
            for v in 0..5 {
                if !hop.contains(&v) {
                    assert!(v != u && !g.has_edge(u, v));
                }
            }
        }
    }

    fn labeled(n: usize, labels: Vec<usize>, classes: usize) -> TextAttributedGraph {
        TextAttributedGraph::new(
            (0..n).map(|i| format!("t{i}")).collect(),
            labels,
            (0..classes).map(|c| format!("c{c}")).collect(),
            (0..n).map(|i| format!("n{i}")).collect(),
            std::iter::empty(),
            vec![Split::Train; n],
        )
        .unwrap()
    }

    #[test]
    fn split_ten_nodes_exact() {
        let g = labeled(10, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1], 2);
        let s = g.split_nodes((0.6, 0.2, 0.2), 7).unwrap();
        assert_eq!(s.split_indices(Split::Train).len(), 6);
        assert_eq!(s.split_indices(Split::Val).len(), 2);
        assert_eq!(s.split_indices(Split::Test).len(), 2);
    }

    #[test]
    fn split_cora_sized_counts() {
        // 2708 nodes at 6:2:2 must land on 1625/541/542 regardless of the
        // class profile; cumulative rounding fixes the totals.
        let labels: Vec<usize> = (0..2708).map(|i| i % 7).collect();
        let g = labeled(2708, labels, 7);
        let s = g.split_nodes((0.6, 0.2, 0.2), 1).unwrap();
        assert_eq!(s.split_indices(Split::Train).len(), 1625);
        assert_eq!(s.split_indices(Split::Val).len(), 541);
        assert_eq!(s.split_indices(Split::Test).len(), 542);
    }

    #[test]
    fn split_is_deterministic() {
        let labels: Vec<usize> = (0..50).map(|i| i % 3).collect();
        let g = labeled(50, labels, 3);
        let a = g.split_nodes((0.6, 0.2, 0.2), 9).unwrap();
        let b = g.split_nodes((0.6, 0.2, 0.2), 9).unwrap();
        assert_eq!(a.split(), b.split());
    }

    #[test]
    fn split_tiny_class_goes_to_train() {
        let mut labels = vec![0; 20];
        labels[19] = 1; // class 1 has a single node
        let g = labeled(20, labels, 2);
        let s = g.split_nodes((0.6, 0.2, 0.2), 3).unwrap();
        assert_eq!(s.split_of(19), Split::Train);
    }

    #[test]
    fn split_is_stratified() {
        let labels: Vec<usize> = (0..100).map(|i| i / 50).collect();
        let g = labeled(100, labels, 2);
        let s = g.split_nodes((0.6, 0.2, 0.2), 11).unwrap();
        for c in 0..2 {
            let train_c = (0..100)
                .filter(|&u| s.label(u) == c && s.split_of(u) == Split::Train)
                .count();
            assert_eq!(train_c, 30);
        }
    }

    #[test]
    fn budget_on_cora_scale_counts() {
        let g = {
            // 5429 edges over 2708 nodes: a ring plus extra chords.
            let n = 2708;
            let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            let mut k = 2;
            while edges.len() < 5429 {
                for i in 0..n {
                    edges.push((i, (i + k) % n));
                    if edges.len() == 5429 {
                        break;
                    }
                }
                k += 1;
            }
            toy(&edges, n)
        };
        assert_eq!(g.edge_count(), 5429);
        let empty = PerturbationSet::structural(vec![], 542);
        let report = check_budget(&g, &empty, 0.1, false);
        assert_eq!(report.edge_budget, 542);
        assert!(report.passed);

        let over = PerturbationSet::structural(
            (0..543).map(|i| EdgeFlip::add(i, i + 1000)).collect(),
            542,
        );
        let report = check_budget(&g, &over, 0.1, false);
        assert_eq!(report.edge_excess, 1);
        assert!(!report.passed);
    }

    #[test]
    fn budget_counts_text_violations() {
        let g = t5();
        let p = PerturbationSet {
            flips: vec![],
            edge_budget: 0,
            text_edits: vec![NodeTextEdits {
                node: 1,
                edits: vec![TextEdit::Reorder { pos: 0 }, TextEdit::Reorder { pos: 2 }],
            }],
            char_budget_per_node: vec![NodeCharBudget { node: 1, budget: 1 }],
        };
        let report = check_budget(&g, &p, 0.5, false);
        assert_eq!(report.text_violations.len(), 1);
        assert_eq!(report.text_violations[0].used, 2);
        assert!(!report.passed);
    }

    #[test]
    fn degree_test_accepts_identity() {
        let g = t5();
        let p = PerturbationSet::structural(vec![], 0);
        let report = check_budget(&g, &p, 0.2, true);
        assert_eq!(report.degree_test_passed, Some(true));
    }

    #[test]
    fn perturbation_set_round_trips_json() {
        let p = PerturbationSet {
            flips: vec![EdgeFlip::add(0, 4), EdgeFlip::remove(1, 3)],
            edge_budget: 2,
            text_edits: vec![NodeTextEdits {
                node: 2,
                edits: vec![TextEdit::Homoglyph { pos: 1, original: 'a', replacement: 'а' }],
            }],
            char_budget_per_node: vec![NodeCharBudget { node: 2, budget: 5 }],
        };
        let json = serde_json::to_string(&p).unwrap();
        let back: PerturbationSet = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
    }
}
