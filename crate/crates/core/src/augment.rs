//! Two-level graph augmentation: structure perturbation of the edge set and
//! re-sampling of the magnetic phase `q`.

use std::collections::HashSet;
use std::f64::consts::PI;

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeRecord, SignedDiGraph};

/// Upper cap applied to noisy phase samples.
pub const Q_MAX: f64 = 0.5 * PI;

/// The phase grid used for Laplacian perturbation: 0, 0.1π, ..., 0.4π.
pub fn default_q_grid() -> Vec<f64> {
    [0.0, 0.1, 0.2, 0.3, 0.4].iter().map(|k| k * PI).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    /// Fraction of each sign class whose sign is flipped.
    pub sign_flip_ratio: f64,
    /// Fraction of all edges whose direction is reversed.
    pub direction_flip_ratio: f64,
    /// Discrete phase choices, each in `[0, π/2)`.
    pub q_choices: Vec<f64>,
    /// Base phase for the Gaussian-noise mode.
    pub q_base: f64,
    /// Standard deviation of the phase noise; 0 selects the discrete mode.
    pub q_noise_std: f64,
    pub seed: u64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            sign_flip_ratio: 0.1,
            direction_flip_ratio: 0.1,
            q_choices: default_q_grid(),
            q_base: 0.1 * PI,
            q_noise_std: 0.0,
            seed: 0,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p", self.sign_flip_ratio),
            ("r", self.direction_flip_ratio),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if let Some(q) = self
            .q_choices
            .iter()
            .find(|q| !(0.0..0.5 * PI).contains(*q))
        {
            return Err(Error::Config(format!("q choice {q} outside [0, π/2)")));
        }
        if !(self.q_noise_std >= 0.0 && self.q_noise_std.is_finite()) {
            return Err(Error::Config(format!(
                "q_noise_std must be a nonnegative number, got {}",
                self.q_noise_std
            )));
        }
        if self.q_noise_std == 0.0 && self.q_choices.is_empty() {
            return Err(Error::Config("q_choices is empty and noise is off".into()));
        }
        if self.q_noise_std > 0.0 && !(0.0..=Q_MAX).contains(&self.q_base) {
            return Err(Error::Config(format!("q_base {} outside [0, π/2]", self.q_base)));
        }
        Ok(())
    }

    /// Phase used when the graph is encoded without augmentation: the
    /// median grid value in discrete mode, `q_base` in noise mode.
    pub fn inference_q(&self) -> f64 {
        if self.q_noise_std > 0.0 || self.q_choices.is_empty() {
            return self.q_base;
        }
        let mut sorted = self.q_choices.clone();
        sorted.sort_by(f64::total_cmp);
        sorted[(sorted.len() - 1) / 2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphView {
    pub graph: SignedDiGraph,
    pub q: f64,
}

/// Flips `⌊p·|E+|⌋` positive and `⌊p·|E−|⌋` negative edges in place of their
/// ordered pair. Both samples are drawn from the input graph.
pub fn perturb_signs<R: Rng + ?Sized>(graph: &SignedDiGraph, p: f64, rng: &mut R) -> SignedDiGraph {
    let mut out = graph.clone();
    if p <= 0.0 {
        return out;
    }
    let pos: Vec<(usize, usize)> = graph.positive_edges().collect();
    let neg: Vec<(usize, usize)> = graph.negative_edges().collect();
    for set in [&pos, &neg] {
        let count = (p * set.len() as f64).floor() as usize;
        for i in index::sample(rng, set.len(), count.min(set.len())) {
            let (u, v) = set[i];
            let sign = graph.sign(u, v).expect("edge present");
            out.set_sign(u, v, sign.flipped());
        }
    }
    out
}

/// Reverses `⌊r·|E|⌋` edges drawn uniformly over the whole edge set.
///
/// When a drawn edge is one half of a reciprocal pair in the input graph,
/// one of the two directions is deleted uniformly at random instead, and
/// both halves are consumed. A reversal that would land on an ordered pair
/// already occupied (because of an earlier reversal) is re-drawn; candidates
/// are visited in a random order so re-drawing just moves to the next one.
pub fn perturb_directions<R: Rng + ?Sized>(
    graph: &SignedDiGraph,
    r: f64,
    rng: &mut R,
) -> SignedDiGraph {
    let mut out = graph.clone();
    if r <= 0.0 {
        return out;
    }
    let target = (r * graph.num_edges() as f64).floor() as usize;
    let mut order = graph.edge_records();
    order.shuffle(rng);

    let mut consumed: HashSet<(usize, usize)> = HashSet::new();
    let mut done = 0;
    for e in order {
        if done >= target {
            break;
        }
        if consumed.contains(&(e.src, e.dst)) || !out.has_edge(e.src, e.dst) {
            continue;
        }
        if graph.has_edge(e.dst, e.src) {
            consumed.insert((e.src, e.dst));
            consumed.insert((e.dst, e.src));
            if rng.random_bool(0.5) {
                out.remove(e.src, e.dst);
            } else {
                out.remove(e.dst, e.src);
            }
            done += 1;
        } else if !out.has_edge(e.dst, e.src) {
            consumed.insert((e.src, e.dst));
            out.remove(e.src, e.dst);
            out.insert(EdgeRecord::new(e.dst, e.src, e.sign))
                .expect("reversed edge lands on a free pair");
            done += 1;
        }
    }
    out
}

pub fn sample_phase<R: Rng + ?Sized>(config: &PerturbationConfig, rng: &mut R) -> f64 {
    if config.q_noise_std > 0.0 {
        let noise = Normal::new(0.0, config.q_noise_std).expect("std validated");
        (config.q_base + noise.sample(rng)).clamp(0.0, Q_MAX)
    } else {
        *config
            .q_choices
            .choose(rng)
            .expect("q_choices validated non-empty")
    }
}

fn make_view<R: Rng + ?Sized>(
    graph: &SignedDiGraph,
    config: &PerturbationConfig,
    rng: &mut R,
) -> GraphView {
    let signed = perturb_signs(graph, config.sign_flip_ratio, rng);
    let g = perturb_directions(&signed, config.direction_flip_ratio, rng);
    debug_assert!(g.validate().is_ok());
    GraphView {
        graph: g,
        q: sample_phase(config, rng),
    }
}

/// Produces two independently perturbed views, each with its own phase.
pub fn make_views<R: Rng + ?Sized>(
    graph: &SignedDiGraph,
    config: &PerturbationConfig,
    rng: &mut R,
) -> (GraphView, GraphView) {
    let first = make_view(graph, config, rng);
    let second = make_view(graph, config, rng);
    (first, second)
}
