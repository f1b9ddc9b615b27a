//! Contrastive and supervised losses, with the gradients the backward pass
//! needs.
//!
//! Similarity matrices are evaluated in row blocks of [`BLOCK_ROWS`] so the
//! full `N × N` matrix is never materialised.

use ndarray::{s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norm floor used by the cosine similarity.
pub const NORM_FLOOR: f64 = 1e-12;
/// Probability clamp applied before the logarithms of the label loss.
pub const PROB_CLAMP: f64 = 1e-7;

const BLOCK_ROWS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub inter: f64,
    /// Mean of the two per-view intra losses.
    pub intra: f64,
    /// Summed binary cross-entropy over the training edges.
    pub label: f64,
    pub total: f64,
}

/// `α · (inter + intra) + label`.
pub fn total_loss(alpha: f64, inter: f64, intra: f64, label: f64) -> LossBreakdown {
    LossBreakdown {
        inter,
        intra,
        label,
        total: alpha * (inter + intra) + label,
    }
}

/// Rows scaled to unit length. Rows with norm below [`NORM_FLOOR`] are
/// divided by the floor instead. Returns the normalized rows and the
/// divisors.
pub fn cosine_normalize(m: ArrayView2<f64>) -> (Array2<f64>, Vec<f64>) {
    let mut out = m.to_owned();
    let mut norms = Vec::with_capacity(m.nrows());
    for mut row in out.rows_mut() {
        let n = row.dot(&row).sqrt().max(NORM_FLOOR);
        row /= n;
        norms.push(n);
    }
    (out, norms)
}

/// Cosine similarity of two vectors with the same norm floor.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(NORM_FLOOR);
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt().max(NORM_FLOOR);
    dot / (na * nb)
}

/// Backward of [`cosine_normalize`]: maps a gradient on the normalized rows
/// to a gradient on the raw rows. Rows at the norm floor are treated like a
/// dead ReLU and receive zero.
pub(crate) fn normalize_backward(normalized: &Array2<f64>, norms: &[f64], grad: &Array2<f64>) -> Array2<f64> {
    let mut out = grad.clone();
    for ((mut g, m), &n) in out.rows_mut().into_iter().zip(normalized.rows()).zip(norms) {
        if n > NORM_FLOOR {
            let proj = m.dot(&g);
            g.scaled_add(-proj, &m);
            g /= n;
        } else {
            g.fill(0.0);
        }
    }
    out
}

fn check_rows(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewNodes(n));
    }
    Ok(())
}

/// Log-sum-exp of `row` skipping index `skip`; on return `row` holds the
/// softmax over the same index set, with zero at `skip`.
fn lse_softmax_excluding(row: &mut [f64], skip: usize) -> f64 {
    let max = row
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != skip)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (j, v) in row.iter_mut().enumerate() {
        if j == skip {
            *v = 0.0;
        } else {
            *v = (*v - max).exp();
            sum += *v;
        }
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
    max + sum.ln()
}

/// Inter-view loss on already normalized rows, optionally with gradients
/// with respect to `a` and `b`.
pub(crate) fn inter_view_normalized(
    a: &Array2<f64>,
    b: &Array2<f64>,
    tau: f64,
    want_grad: bool,
) -> (f64, Option<(Array2<f64>, Array2<f64>)>) {
    let n = a.nrows();
    let mut loss = 0.0;
    let mut grads = want_grad.then(|| (Array2::zeros(a.raw_dim()), Array2::zeros(b.raw_dim())));
    let scale = 1.0 / (n as f64);
    for start in (0..n).step_by(BLOCK_ROWS) {
        let end = (start + BLOCK_ROWS).min(n);
        let a_blk = a.slice(s![start..end, ..]);
        let mut sim = a_blk.dot(&b.t()) / tau;
        for (r, mut row) in sim.axis_iter_mut(Axis(0)).enumerate() {
            let i = start + r;
            let positive = row[i];
            let row = row.as_slice_mut().expect("owned row");
            loss += lse_softmax_excluding(row, i) - positive;
            row[i] = -1.0;
        }
        if let Some((da, db)) = grads.as_mut() {
            sim *= scale / tau;
            da.slice_mut(s![start..end, ..]).assign(&sim.dot(b));
            *db += &sim.t().dot(&a_blk);
        }
    }
    (loss * scale, grads)
}

/// Intra-view loss on normalized rows, optionally with the gradient.
pub(crate) fn intra_view_normalized(a: &Array2<f64>, tau: f64, want_grad: bool) -> (f64, Option<Array2<f64>>) {
    let n = a.nrows();
    let mut loss = 0.0;
    let mut grad = want_grad.then(|| Array2::zeros(a.raw_dim()));
    let scale = 1.0 / (n as f64);
    for start in (0..n).step_by(BLOCK_ROWS) {
        let end = (start + BLOCK_ROWS).min(n);
        let a_blk = a.slice(s![start..end, ..]);
        let mut sim = a_blk.dot(&a.t()) / tau;
        for (r, mut row) in sim.axis_iter_mut(Axis(0)).enumerate() {
            loss += lse_softmax_excluding(row.as_slice_mut().expect("owned row"), start + r);
        }
        if let Some(g) = grad.as_mut() {
            sim *= scale / tau;
            let rows = sim.dot(a);
            let mut blk = g.slice_mut(s![start..end, ..]);
            blk += &rows;
            *g += &sim.t().dot(&a_blk);
        }
    }
    (loss * scale, grad)
}

/// `−(1/N) Σᵢ log[exp(sim(m¹ᵢ, m²ᵢ)/τ) / Σ_{j≠i} exp(sim(m¹ᵢ, m²ⱼ)/τ)]`,
/// anchored on the first view.
pub fn inter_view_loss(m1: ArrayView2<f64>, m2: ArrayView2<f64>, tau: f64) -> Result<f64> {
    check_pair(m1, m2)?;
    let (a, _) = cosine_normalize(m1);
    let (b, _) = cosine_normalize(m2);
    Ok(inter_view_normalized(&a, &b, tau, false).0)
}

/// Mean of the view-1 anchored and view-2 anchored inter-view losses.
pub fn inter_view_loss_symmetric(m1: ArrayView2<f64>, m2: ArrayView2<f64>, tau: f64) -> Result<f64> {
    Ok(0.5 * (inter_view_loss(m1, m2, tau)? + inter_view_loss(m2, m1, tau)?))
}

/// `(1/N) Σᵢ log Σ_{j≠i} exp(sim(mᵢ, mⱼ)/τ)`.
pub fn intra_view_loss(m: ArrayView2<f64>, tau: f64) -> Result<f64> {
    check_rows(m.nrows())?;
    let (a, _) = cosine_normalize(m);
    Ok(intra_view_normalized(&a, tau, false).0)
}

/// `inter + (intra(M¹) + intra(M²)) / 2`.
pub fn contrastive_loss(m1: ArrayView2<f64>, m2: ArrayView2<f64>, tau: f64) -> Result<f64> {
    Ok(inter_view_loss(m1, m2, tau)? + 0.5 * (intra_view_loss(m1, tau)? + intra_view_loss(m2, tau)?))
}

fn check_pair(m1: ArrayView2<f64>, m2: ArrayView2<f64>) -> Result<()> {
    if m1.dim() != m2.dim() {
        return Err(Error::Shape(format!("views have shapes {:?} and {:?}", m1.dim(), m2.dim())));
    }
    check_rows(m1.nrows())
}

/// Summed binary cross-entropy over `(ŷ, y)` pairs, with `ŷ` clamped to
/// `[1e−7, 1 − 1e−7]`.
pub fn label_loss(predictions: &[(f64, f64)]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    Ok(predictions.iter().map(|&(p, y)| bce(p, y)).sum())
}

pub(crate) fn bce(p: f64, y: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Gradient of `bce(sigmoid(x), y)` with respect to the logit `x`; zero where
/// the clamp is active.
pub(crate) fn bce_logit_grad(p: f64, y: f64) -> f64 {
    if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
        0.0
    } else {
        p - y
    }
}
