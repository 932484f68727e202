//! Synthetic citation-style corpora.
//!
//! Real citation benchmarks cannot ship with the repo, so the testbed
//! generates stand-ins with the same gross shape: homophilous edges grown by
//! preferential attachment (hence a heavy-tailed degree profile), per-class
//! vocabularies blended with a shared vocabulary, and hub nodes whose text
//! mixes terminology from every class the way survey papers do. Class signal
//! is deliberately split between text and structure so that both feature and
//! structural attacks have something to destroy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{Split, TextAttributedGraph};
use crate::rng::derive;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub name: String,
    pub nodes: usize,
    pub edges: usize,
    pub classes: usize,
    pub seed: u64,
    /// Probability that an edge stays within its source node's class.
    pub homophily: f64,
    /// Probability that a word is drawn from a class vocabulary
    /// (the rest come from the shared vocabulary).
    pub class_word_rate: f64,
    /// Degree at which a node's text mixes class vocabularies fully.
    pub hub_degree: f64,
    /// Fraction of a hub's class-vocabulary words drawn from random classes.
    pub hub_mix: f64,
    pub words_per_class: usize,
    pub shared_words: usize,
    pub min_words: usize,
    pub max_words: usize,
}

impl SynthConfig {
    /// Shape of the small dense citation benchmark: 2708 nodes, 5429 edges,
    /// 7 classes.
    pub fn cora_like(seed: u64) -> Self {
        SynthConfig {
            name: "cora".into(),
            nodes: 2708,
            edges: 5429,
            classes: 7,
            seed,
            ..SynthConfig::default()
        }
    }

    /// Shape of the sparser benchmark: 3327 nodes, 4614 edges, 6 classes.
    pub fn citeseer_like(seed: u64) -> Self {
        SynthConfig {
            name: "citeseer".into(),
            nodes: 3327,
            edges: 4614,
            classes: 6,
            seed,
            ..SynthConfig::default()
        }
    }

    /// A small graph for unit tests and quick runs.
    pub fn tiny(nodes: usize, edges: usize, classes: usize, seed: u64) -> Self {
        SynthConfig {
            name: "tiny".into(),
            nodes,
            edges,
            classes,
            seed,
            ..SynthConfig::default()
        }
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            name: "synth".into(),
            nodes: 300,
            edges: 600,
            classes: 4,
            seed: 0,
            homophily: 0.82,
            class_word_rate: 0.45,
            hub_degree: 18.0,
            hub_mix: 0.9,
            words_per_class: 40,
            shared_words: 80,
            min_words: 24,
            max_words: 40,
        }
    }
}

fn make_word(rng: &mut impl Rng) -> String {
    let len = rng.gen_range(4..=8);
    (0..len).map(|_| (b'a' + rng.gen_range(0..26u8)) as char).collect()
}

/// Generate a graph. Deterministic per config seed; labels are renumbered by
/// first appearance so a save/load round trip is exact.
pub fn generate(cfg: &SynthConfig) -> TextAttributedGraph {
    assert!(cfg.classes >= 2, "need at least two classes");
    assert!(cfg.nodes >= cfg.classes * 3, "need at least three nodes per class");
    let n = cfg.nodes;

    // Class sizes decline like real citation benchmarks; largest remainder
    // keeps the total exact.
    let weights: Vec<f64> = (0..cfg.classes).map(|c| 1.0 / (1.0 + 0.55 * c as f64)).collect();
    let wsum: f64 = weights.iter().sum();
    let mut sizes: Vec<usize> =
        weights.iter().map(|w| (w / wsum * n as f64).floor() as usize).collect();
    let mut rest = n - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..cfg.classes).collect();
    order.sort_by(|&a, &b| {
        let fa = weights[a] / wsum * n as f64;
        let fb = weights[b] / wsum * n as f64;
        (fb - fb.floor()).partial_cmp(&(fa - fa.floor())).unwrap().then(a.cmp(&b))
    });
    for &c in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        sizes[c] += 1;
        rest -= 1;
    }

    let mut label_rng = derive(cfg.seed, "synth-labels", 0);
    let mut labels = Vec::with_capacity(n);
    for (c, &sz) in sizes.iter().enumerate() {
        labels.extend(std::iter::repeat(c).take(sz));
    }
    use rand::seq::SliceRandom;
    labels.shuffle(&mut label_rng);

    // Homophilous preferential attachment: endpoint pools repeat node ids by
    // degree, so uniform draws from a pool are degree-weighted.
    let mut edge_rng = derive(cfg.seed, "synth-edges", 0);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); cfg.classes];
    for (u, &c) in labels.iter().enumerate() {
        by_class[c].push(u);
    }
    let mut class_pool: Vec<Vec<usize>> = by_class.clone();
    let mut global_pool: Vec<usize> = (0..n).collect();
    let mut edges = std::collections::BTreeSet::new();
    let mut attempts = 0usize;
    let max_attempts = cfg.edges * 200;
    while edges.len() < cfg.edges && attempts < max_attempts {
        attempts += 1;
        let u = global_pool[edge_rng.gen_range(0..global_pool.len())];
        let target_class = if edge_rng.gen_range(0.0..1.0) < cfg.homophily {
            labels[u]
        } else {
            let mut c = edge_rng.gen_range(0..cfg.classes);
            while c == labels[u] {
                c = edge_rng.gen_range(0..cfg.classes);
            }
            c
        };
        let pool = &class_pool[target_class];
        let v = pool[edge_rng.gen_range(0..pool.len())];
        if u == v || edges.contains(&(u.min(v), u.max(v))) {
            continue;
        }
        edges.insert((u.min(v), u.max(v)));
        global_pool.push(u);
        global_pool.push(v);
        class_pool[labels[u]].push(u);
        class_pool[labels[v]].push(v);
    }
    assert_eq!(edges.len(), cfg.edges, "edge generation did not reach the target count");

    let mut degree = vec![0usize; n];
    for &(u, v) in &edges {
        degree[u] += 1;
        degree[v] += 1;
    }

    // Vocabularies: distinct pseudo-words for each class plus a shared pool.
    let mut vocab_rng = derive(cfg.seed, "synth-vocab", 0);
    let mut seen = std::collections::BTreeSet::new();
    let mut draw_word = |rng: &mut rand_chacha::ChaCha8Rng| loop {
        let w = make_word(rng);
        if seen.insert(w.clone()) {
            return w;
        }
    };
    let class_vocab: Vec<Vec<String>> = (0..cfg.classes)
        .map(|_| (0..cfg.words_per_class).map(|_| draw_word(&mut vocab_rng)).collect())
        .collect();
    let shared_vocab: Vec<String> =
        (0..cfg.shared_words).map(|_| draw_word(&mut vocab_rng)).collect();

    let texts: Vec<String> = (0..n)
        .map(|u| {
            let mut rng = derive(cfg.seed, "synth-text", u as u64);
            let hubness = (degree[u] as f64 / cfg.hub_degree).min(1.0) * cfg.hub_mix;
            let count = rng.gen_range(cfg.min_words..=cfg.max_words);
            let mut words = Vec::with_capacity(count);
            for _ in 0..count {
                if rng.gen_range(0.0..1.0) < cfg.class_word_rate {
                    let c = if rng.gen_range(0.0..1.0) < hubness {
                        rng.gen_range(0..cfg.classes)
                    } else {
                        labels[u]
                    };
                    words.push(class_vocab[c][rng.gen_range(0..cfg.words_per_class)].clone());
                } else {
                    words.push(shared_vocab[rng.gen_range(0..cfg.shared_words)].clone());
                }
            }
            words.join(" ")
        })
        .collect();

    // Renumber classes by first appearance so the on-disk form round-trips.
    let mut remap = vec![usize::MAX; cfg.classes];
    let mut next = 0;
    for &l in &labels {
        if remap[l] == usize::MAX {
            remap[l] = next;
            next += 1;
        }
    }
    let labels: Vec<usize> = labels.iter().map(|&l| remap[l]).collect();
    let class_names: Vec<String> = (0..cfg.classes).map(|c| format!("c{c}")).collect();
    let width = (n as f64).log10().ceil() as usize + 1;
    let external_ids: Vec<String> = (0..n).map(|u| format!("{}{:0width$}", cfg.name, u)).collect();

    TextAttributedGraph::new(texts, labels, class_names, external_ids, edges, vec![
        Split::Train;
        n
    ])
    .expect("generated graph is valid")
}
