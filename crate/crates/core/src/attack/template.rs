//! Fixed-shape neighborhood-detail templates and the placeholder injection
//! attacks that exploit them.
//!
//! A computation tree for node `u` has exactly `1 + k + ... + k^d` slots in
//! level order (heap layout: the children of slot `p` are `k*p+1 ..= k*p+k`).
//! Nodes with fewer than `k` neighbors leave trailing placeholder slots, and
//! those slots are the attack surface: an attacker wires far-away nodes to
//! the placeholder's parent so a rebuild pulls them into the sequence.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::featurize::{tree_positions, FeatureMatrix};
use crate::graph::{EdgeFlip, TextAttributedGraph};
use crate::rng::derive;
use ndarray::Array2;

/// Content of one tree slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    Node(usize),
    Placeholder,
}

/// Level-ordered fixed-shape (d, k) neighborhood tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComputationTree {
    pub root: usize,
    pub depth: usize,
    pub fanout: usize,
    pub slots: Vec<Slot>,
}

impl ComputationTree {
    pub fn positions(&self) -> usize {
        self.slots.len()
    }

    /// Parent slot index (none for the root).
    pub fn parent(&self, pos: usize) -> Option<usize> {
        (pos > 0).then(|| (pos - 1) / self.fanout)
    }

    /// Placeholder slots whose parent holds a real node, in level order.
    /// Only these can be filled by wiring an edge to the parent.
    pub fn fillable_placeholders(&self) -> Vec<usize> {
        (1..self.slots.len())
            .filter(|&p| {
                self.slots[p] == Slot::Placeholder
                    && matches!(self.slots[(p - 1) / self.fanout], Slot::Node(_))
            })
            .collect()
    }

    pub fn placeholder_count(&self) -> usize {
        self.slots.iter().filter(|s| **s == Slot::Placeholder).count()
    }

    /// Real node ids appearing anywhere in the tree (with repeats).
    pub fn real_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.slots.iter().filter_map(|s| match s {
            Slot::Node(u) => Some(*u),
            Slot::Placeholder => None,
        })
    }
}

/// Build the (d, k) tree for `u` by level-wise seeded sampling of neighbors
/// without replacement. Each node's sample is a function of (seed, node id)
/// only, so the same node draws the same neighbors wherever it appears.
pub fn build_tree(
    graph: &TextAttributedGraph,
    u: usize,
    depth: usize,
    fanout: usize,
    seed: u64,
) -> ComputationTree {
    build_tree_inner(graph, None, u, depth, fanout, seed)
}

/// Like [`build_tree`], but when sampling a node's children, neighbors that
/// already existed in `original` are drawn first (in seeded random order) and
/// attacker-added neighbors fill any remaining slots in ascending id order.
/// This is the default rebuild rule after an attack; pass-through of
/// `build_tree` gives the pure-uniform ablation.
pub fn build_tree_preferring(
    graph: &TextAttributedGraph,
    original: &TextAttributedGraph,
    u: usize,
    depth: usize,
    fanout: usize,
    seed: u64,
) -> ComputationTree {
    build_tree_inner(graph, Some(original), u, depth, fanout, seed)
}

fn build_tree_inner(
    graph: &TextAttributedGraph,
    original: Option<&TextAttributedGraph>,
    u: usize,
    depth: usize,
    fanout: usize,
    seed: u64,
) -> ComputationTree {
    assert!(depth >= 1 && fanout >= 1, "tree shape requires d >= 1 and k >= 1");
    let total = tree_positions(depth, fanout);
    let internal = tree_positions(depth - 1, fanout);
    let mut slots = vec![Slot::Placeholder; total];
    slots[0] = Slot::Node(u);
    for p in 0..internal {
        let Slot::Node(v) = slots[p] else { continue };
        let children = sample_children(graph, original, v, fanout, seed);
        for (i, &c) in children.iter().enumerate() {
            slots[fanout * p + 1 + i] = Slot::Node(c);
        }
    }
    ComputationTree { root: u, depth, fanout, slots }
}

fn sample_children(
    graph: &TextAttributedGraph,
    original: Option<&TextAttributedGraph>,
    v: usize,
    fanout: usize,
    seed: u64,
) -> Vec<usize> {
    let mut rng = derive(seed, "tree-sample", v as u64);
    match original {
        None => {
            let mut pool: Vec<usize> = graph.neighbors(v).to_vec();
            pool.shuffle(&mut rng);
            pool.truncate(fanout);
            pool
        }
        Some(orig) => {
            let mut pool: Vec<usize> =
                graph.neighbors(v).iter().copied().filter(|&w| orig.has_edge(v, w)).collect();
            pool.shuffle(&mut rng);
            pool.truncate(fanout);
            if pool.len() < fanout {
                let injected: Vec<usize> = graph
                    .neighbors(v)
                    .iter()
                    .copied()
                    .filter(|&w| !orig.has_edge(v, w))
                    .collect();
                for w in injected {
                    if pool.len() == fanout {
                        break;
                    }
                    pool.push(w);
                }
            }
            pool
        }
    }
}

/// The three placeholder injection strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectionStrategy {
    /// Non-adjacent injection: one random far node per placeholder.
    Ni,
    /// Supernode injection: the highest-degree far node at the first
    /// placeholder only.
    Si,
    /// Multiple supernode injection: the top-degree far nodes across all
    /// placeholders.
    Msi,
}

/// One target's injection plan: the edges to add and which tree positions the
/// injected nodes are expected to occupy after a rebuild.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionPlan {
    pub strategy: InjectionStrategy,
    pub target: usize,
    pub new_edges: Vec<EdgeFlip>,
    /// (tree position, injected node), sorted by position.
    pub filled_positions: Vec<(usize, usize)>,
    /// Placeholders left unfilled because the non-adjacent pool ran dry.
    pub shortfall: usize,
}

impl InjectionPlan {
    pub fn empty(strategy: InjectionStrategy, target: usize) -> Self {
        InjectionPlan { strategy, target, new_edges: Vec::new(), filled_positions: Vec::new(), shortfall: 0 }
    }
}

/// Compute an injection plan for `u`'s tree. Degrees and the 2-hop exclusion
/// zone are measured on `graph` as given, so planning for many targets from
/// the same clean graph keeps supernode choices consistent.
pub fn inject(
    graph: &TextAttributedGraph,
    u: usize,
    tree: &ComputationTree,
    strategy: InjectionStrategy,
    seed: u64,
) -> InjectionPlan {
    let placeholders = tree.fillable_placeholders();
    if placeholders.is_empty() {
        return InjectionPlan::empty(strategy, u);
    }
    let exclusion = graph.two_hop(u);
    let pool: Vec<usize> =
        (0..graph.node_count()).filter(|v| !exclusion.contains(v)).collect();
    if pool.is_empty() {
        return InjectionPlan::empty(strategy, u);
    }

    let by_degree_desc = |pool: &[usize]| -> Vec<usize> {
        let mut sorted = pool.to_vec();
        sorted.sort_by(|&a, &b| graph.degree(b).cmp(&graph.degree(a)).then(a.cmp(&b)));
        sorted
    };

    let (chosen, slots): (Vec<usize>, Vec<usize>) = match strategy {
        InjectionStrategy::Ni => {
            let mut rng = derive(seed, "inject-ni", u as u64);
            let mut shuffled = pool.clone();
            shuffled.shuffle(&mut rng);
            let take = placeholders.len().min(shuffled.len());
            (shuffled[..take].to_vec(), placeholders[..take].to_vec())
        }
        InjectionStrategy::Si => {
            let best = by_degree_desc(&pool)[0];
            (vec![best], vec![placeholders[0]])
        }
        InjectionStrategy::Msi => {
            let ranked = by_degree_desc(&pool);
            let take = placeholders.len().min(ranked.len());
            (ranked[..take].to_vec(), placeholders[..take].to_vec())
        }
    };

    let mut filled: Vec<(usize, usize)> = slots.iter().copied().zip(chosen.iter().copied()).collect();
    filled.sort_by_key(|&(p, _)| p);
    let new_edges = filled
        .iter()
        .map(|&(p, v)| {
            let parent_pos = tree.parent(p).expect("fillable placeholder has a parent");
            let Slot::Node(parent) = tree.slots[parent_pos] else {
                unreachable!("fillable placeholder parent is a real node")
            };
            EdgeFlip::add(parent, v)
        })
        .collect();
    let shortfall = match strategy {
        InjectionStrategy::Si => 0,
        _ => placeholders.len() - filled.len(),
    };
    InjectionPlan { strategy, target: u, new_edges, filled_positions: filled, shortfall }
}

/// Apply the union of several plans to a graph. Duplicate adds across plans
/// collapse; edges already present are skipped.
pub fn apply_plans(
    graph: &TextAttributedGraph,
    plans: &[InjectionPlan],
) -> TextAttributedGraph {
    let mut ordered: Vec<&InjectionPlan> = plans.iter().collect();
    ordered.sort_by_key(|p| p.target);
    let mut seen = std::collections::BTreeSet::new();
    let mut flips = Vec::new();
    for plan in ordered {
        for e in &plan.new_edges {
            if seen.insert(e.pair()) && !graph.has_edge(e.u, e.v) {
                flips.push(*e);
            }
        }
    }
    graph.apply_flips(&flips).expect("planned adds are absent edges")
}

/// Everything needed to turn a tree into a projector input vector.
pub struct SequenceAssembly<'a> {
    pub features: &'a FeatureMatrix,
    /// Learned embedding used for placeholder slots.
    pub placeholder: &'a [f64],
    /// Positional encodings, `positions x pe_dim` with `pe_dim <= dim`.
    pub pe: &'a Array2<f64>,
    pub pe_weight: f64,
    /// Learned global context vector appended to the sequence when present.
    pub m_global: Option<&'a [f64]>,
}

/// Position-ordered concatenation of slot embeddings plus weighted positional
/// encodings (added into the leading coordinates), with the global context
/// vector appended when configured.
pub fn node_sequence(tree: &ComputationTree, asm: &SequenceAssembly<'_>) -> Vec<f64> {
    let dim = asm.features.dim();
    assert_eq!(asm.placeholder.len(), dim, "placeholder embedding width mismatch");
    assert_eq!(asm.pe.nrows(), tree.positions(), "positional encoding shape mismatch");
    assert!(asm.pe.ncols() <= dim, "pe wider than embedding");
    let extra = asm.m_global.map_or(0, <[f64]>::len);
    let mut out = Vec::with_capacity(tree.positions() * dim + extra);
    for (p, slot) in tree.slots.iter().enumerate() {
        let start = out.len();
        match slot {
            Slot::Node(v) => out.extend(asm.features.row(*v).iter()),
            Slot::Placeholder => out.extend_from_slice(asm.placeholder),
        }
        for j in 0..asm.pe.ncols() {
            out[start + j] += asm.pe_weight * asm.pe[[p, j]];
        }
    }
    if let Some(m) = asm.m_global {
        out.extend_from_slice(m);
    }
    out
}
