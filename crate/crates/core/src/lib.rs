//! Robustness testbed for text-attributed-graph node classifiers.
//!
//! The crate covers the full attack/defense loop at desk scale: loading and
//! synthesizing text-attributed graphs, deterministic hash-embedding
//! featurization, three trainable victims (a linearized-GCN surrogate, a
//! sequence-template victim, and a GNN-encoder victim), structural attacks
//! (greedy targeted flips and meta-gradient flips), placeholder injection
//! attacks on the sequence template, imperceptible homoglyph/Bidi text
//! attacks driven by differential evolution, and the layered defense that
//! combines text correction, similarity-based edge purification, guarded
//! aggregation, and a learned global-context vector.
//!
//! Everything is deterministic per seed: RNG streams are derived per
//! (seed, stage, item), parallel loops partition work so results are
//! schedule-independent, and reports serialize byte-identically across runs.

pub mod attack;
pub mod featurize;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod synth;

pub use graph::{EdgeFlip, FlipOp, PerturbationSet, Split, TextAttributedGraph};
