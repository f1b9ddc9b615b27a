//! Link sign prediction metrics: ROC-AUC (positive sign is the positive
//! class) and the macro / micro / binary F1 family.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::encoder::{encoder_trace, fuse_views, predict_edge, EncoderParams, ViewEmbedding};
use crate::error::{Error, Result};
use crate::graph::{EdgeRecord, SignedDiGraph};
use crate::spectral::{renormalized_propagation, HermitianMatrix, PhaseSpec};

/// Mann-Whitney AUC over `(score, label)` pairs, label 1 for positive.
/// Ties count one half. NaN scores are a numerical failure.
pub fn auc(scores: &[(f64, f64)]) -> Result<f64> {
    if let Some(i) = scores.iter().position(|s| s.0.is_nan()) {
        return Err(Error::Numerical(format!("score {i} is NaN")));
    }
    let mut sorted: Vec<(f64, bool)> = scores.iter().map(|&(s, y)| (s, y > 0.5)).collect();
    let positives = sorted.iter().filter(|(_, p)| *p).count() as u64;
    let negatives = sorted.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Twice the U statistic, kept integral so the result is exact.
    let mut twice_u: u64 = 0;
    let mut negatives_below: u64 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u64, 0u64);
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            if sorted[j].1 {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        twice_u += 2 * pos * negatives_below + pos * neg;
        negatives_below += neg;
        i = j;
    }
    Ok(twice_u as f64 / (2 * positives * negatives) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1Scores {
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub binary_f1: f64,
    pub confusion: Confusion,
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

/// Thresholds scores (`score ≥ threshold` predicts positive) and computes
/// the F1 of the positive class, the unweighted mean over both classes, and
/// the micro average (accuracy in the single-label binary case).
pub fn f1_suite(scores: &[(f64, f64)], threshold: f64) -> Result<F1Scores> {
    if scores.is_empty() {
        return Err(Error::Empty("scores"));
    }
    let mut c = Confusion::default();
    for &(s, y) in scores {
        match (s >= threshold, y > 0.5) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    let binary_f1 = f1(c.tp, c.fp, c.fn_);
    let negative_f1 = f1(c.tn, c.fn_, c.fp);
    Ok(F1Scores {
        macro_f1: 0.5 * (binary_f1 + negative_f1),
        micro_f1: (c.tp + c.tn) as f64 / c.total() as f64,
        binary_f1,
        confusion: c,
    })
}

/// Serialized as `{auc, macro_f1, micro_f1, binary_f1, tp, fp, tn, fn,
/// threshold, seed}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub binary_f1: f64,
    #[serde(flatten)]
    pub confusion: Confusion,
    pub threshold: f64,
    pub seed: u64,
}

impl MetricsReport {
    pub fn from_scores(scores: &[(f64, f64)], threshold: f64, seed: u64) -> Result<MetricsReport> {
        let f = f1_suite(scores, threshold)?;
        Ok(MetricsReport {
            auc: auc(scores)?,
            macro_f1: f.macro_f1,
            micro_f1: f.micro_f1,
            binary_f1: f.binary_f1,
            confusion: f.confusion,
            threshold,
            seed,
        })
    }
}

/// Fused representations of the unperturbed graph: both encoder branches see
/// the same operator.
pub fn inference_representation(params: &EncoderParams, operator: &HermitianMatrix) -> Result<Array2<f64>> {
    let z = ViewEmbedding {
        z: encoder_trace(operator, params)?.z,
    };
    fuse_views(&z, &z, params)
}

/// Builds the inference operator of `graph` at phase `q`.
pub fn inference_operator(graph: &SignedDiGraph, q: f64) -> HermitianMatrix {
    renormalized_propagation(graph, &PhaseSpec::new(q))
}

/// `(ŷ, y)` for every edge.
pub fn score_edges(
    params: &EncoderParams,
    fused: &Array2<f64>,
    edges: &[EdgeRecord],
) -> Result<Vec<(f64, f64)>> {
    edges
        .iter()
        .map(|e| Ok((predict_edge(fused, e.src, e.dst, params)?, e.sign.label())))
        .collect()
}

/// Scores `edges` with the model applied to the unperturbed `graph` at phase
/// `q` and aggregates all metrics.
pub fn evaluate(
    params: &EncoderParams,
    graph: &SignedDiGraph,
    q: f64,
    edges: &[EdgeRecord],
    threshold: f64,
    seed: u64,
) -> Result<MetricsReport> {
    let fused = inference_representation(params, &inference_operator(graph, q))?;
    MetricsReport::from_scores(&score_edges(params, &fused, edges)?, threshold, seed)
}
