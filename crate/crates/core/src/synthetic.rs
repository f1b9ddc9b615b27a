//! Random signed directed graphs for tests and smoke runs.

use rand::Rng;

use crate::graph::{EdgeRecord, Sign, SignedDiGraph};

/// Each ordered pair `(u, v)`, `u ≠ v`, becomes an edge with probability
/// `density`; an edge is positive with probability `positive_ratio`.
pub fn random_signed_digraph<R: Rng + ?Sized>(
    num_nodes: usize,
    density: f64,
    positive_ratio: f64,
    rng: &mut R,
) -> SignedDiGraph {
    let mut g = SignedDiGraph::empty(num_nodes);
    for u in 0..num_nodes {
        for v in 0..num_nodes {
            if u != v && rng.random_bool(density) {
                let sign = if rng.random_bool(positive_ratio) {
                    Sign::Positive
                } else {
                    Sign::Negative
                };
                g.insert(EdgeRecord::new(u, v, sign)).expect("fresh ordered pair");
            }
        }
    }
    g
}

/// A trust network: each node is trustworthy with probability
/// `1 − untrusted_fraction`, edges into trustworthy nodes are positive and
/// edges into the others negative, each sign flipped with probability
/// `noise`. About `avg_out_degree` out-edges per node.
pub fn latent_trust_graph<R: Rng + ?Sized>(
    num_nodes: usize,
    avg_out_degree: f64,
    untrusted_fraction: f64,
    noise: f64,
    rng: &mut R,
) -> SignedDiGraph {
    let trusted: Vec<bool> = (0..num_nodes).map(|_| !rng.random_bool(untrusted_fraction)).collect();
    let density = (avg_out_degree / (num_nodes.saturating_sub(1)).max(1) as f64).min(1.0);
    let mut g = SignedDiGraph::empty(num_nodes);
    for u in 0..num_nodes {
        for v in 0..num_nodes {
            if u == v || !rng.random_bool(density) {
                continue;
            }
            let mut sign = if trusted[v] { Sign::Positive } else { Sign::Negative };
            if rng.random_bool(noise) {
                sign = sign.flipped();
            }
            g.insert(EdgeRecord::new(u, v, sign)).expect("fresh ordered pair");
        }
    }
    g
}
