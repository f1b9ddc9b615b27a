//! Reverse-mode gradients of the joint loss for the fixed architecture.
//!
//! Complex features are differentiated through their real and imaginary
//! planes. For a Hermitian operator `Y`, the adjoint of `T ↦ Y·T` is `Y`
//! itself, so the backward pass reuses the forward sparse product.

use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use super::loss::{
    bce, bce_logit_grad, cosine_normalize, inter_view_normalized, intra_view_normalized, normalize_backward,
    total_loss, LossBreakdown,
};
use crate::encoder::{
    edge_logit, encoder_trace, fusion_pre, projection_hidden, relu, sigmoid, ComplexFeatures, EncoderParams,
    EncoderTrace,
};
use crate::error::{Error, Result};
use crate::graph::EdgeRecord;
use crate::spectral::HermitianMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSettings {
    pub alpha: f64,
    pub tau: f64,
    pub symmetric_inter: bool,
    /// When false the contrastive terms act on `Z` directly.
    pub use_projection: bool,
}

impl Default for LossSettings {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            tau: 0.5,
            symmetric_inter: false,
            use_projection: true,
        }
    }
}

/// Propagation operators of the two views and the labelled edges of one
/// training step.
#[derive(Debug, Clone, Copy)]
pub struct StepInput<'a> {
    pub operators: [&'a HermitianMatrix; 2],
    pub edges: &'a [EdgeRecord],
}

/// Loss of one step without gradients.
pub fn forward_loss(params: &EncoderParams, input: StepInput<'_>, settings: &LossSettings) -> Result<LossBreakdown> {
    Ok(run(params, input, settings, false)?.0)
}

/// Loss of one step and its gradient with respect to every parameter.
pub fn forward_backward(
    params: &EncoderParams,
    input: StepInput<'_>,
    settings: &LossSettings,
) -> Result<(LossBreakdown, EncoderParams)> {
    let (loss, grads) = run(params, input, settings, true)?;
    Ok((loss, grads.expect("gradients requested")))
}

struct ProjectionCache {
    hidden_pre: Array2<f64>,
    hidden: Array2<f64>,
    out: Array2<f64>,
}

fn project_cached(z: &Array2<f64>, params: &EncoderParams) -> Result<ProjectionCache> {
    let hidden_pre = projection_hidden(z.view(), params)?;
    let hidden = relu(&hidden_pre);
    let out = hidden.dot(&params.proj_weight2) + &params.proj_bias2;
    Ok(ProjectionCache {
        hidden_pre,
        hidden,
        out,
    })
}

fn relu_mask(grad: &mut Array2<f64>, pre: &Array2<f64>) {
    Zip::from(grad).and(pre).for_each(|g, &p| {
        if p <= 0.0 {
            *g = 0.0;
        }
    });
}

fn run(
    params: &EncoderParams,
    input: StepInput<'_>,
    settings: &LossSettings,
    want_grad: bool,
) -> Result<(LossBreakdown, Option<EncoderParams>)> {
    if input.edges.is_empty() {
        return Err(Error::Empty("training edges"));
    }
    if !(settings.tau > 0.0) {
        return Err(Error::Config(format!("tau must be positive, got {}", settings.tau)));
    }
    let traces = [
        encoder_trace(input.operators[0], params)?,
        encoder_trace(input.operators[1], params)?,
    ];
    let n = traces[0].z.nrows();
    if n < 2 {
        return Err(Error::TooFewNodes(n));
    }

    // Contrastive branch.
    let projections = if settings.use_projection {
        Some([project_cached(&traces[0].z, params)?, project_cached(&traces[1].z, params)?])
    } else {
        None
    };
    let (m1, m2) = match &projections {
        Some([a, b]) => (a.out.view(), b.out.view()),
        None => (traces[0].z.view(), traces[1].z.view()),
    };
    let contrastive_grad = want_grad && settings.alpha != 0.0;
    let (inter, intra, dm) = contrastive(m1, m2, settings, contrastive_grad);

    // Supervised branch.
    let fused_pre = fusion_pre(&traces[0].z, &traces[1].z, params)?;
    let fused = relu(&fused_pre);
    let mut label = 0.0;
    let mut logit_grads = Vec::with_capacity(input.edges.len());
    for e in input.edges {
        let p = sigmoid(edge_logit(&fused, e.src, e.dst, params)?);
        let y = e.sign.label();
        label += bce(p, y);
        logit_grads.push(bce_logit_grad(p, y));
    }
    let breakdown = total_loss(settings.alpha, inter, intra, label);
    if !want_grad {
        return Ok((breakdown, None));
    }

    let mut g = params.zeros_like();
    let d = fused.ncols();
    let mut d_fused = Array2::<f64>::zeros(fused.raw_dim());
    {
        let (w_src, w_dst) = params.pred_weight.view().split_at(Axis(0), d);
        for (e, &gl) in input.edges.iter().zip(&logit_grads) {
            if gl == 0.0 {
                continue;
            }
            g.pred_weight.slice_mut(s![..d]).scaled_add(gl, &fused.row(e.src));
            g.pred_weight.slice_mut(s![d..]).scaled_add(gl, &fused.row(e.dst));
            g.pred_bias[0] += gl;
            d_fused.row_mut(e.src).scaled_add(gl, &w_src);
            d_fused.row_mut(e.dst).scaled_add(gl, &w_dst);
        }
    }

    relu_mask(&mut d_fused, &fused_pre);
    let (w_top, w_bottom) = params.fusion_weight.view().split_at(Axis(0), d);
    g.fusion_weight
        .slice_mut(s![..d, ..])
        .assign(&traces[0].z.t().dot(&d_fused));
    g.fusion_weight
        .slice_mut(s![d.., ..])
        .assign(&traces[1].z.t().dot(&d_fused));
    g.fusion_bias = d_fused.sum_axis(Axis(0));
    let mut dz = [d_fused.dot(&w_top.t()), d_fused.dot(&w_bottom.t())];

    if let Some([dm1, dm2]) = dm {
        let dm = [dm1 * settings.alpha, dm2 * settings.alpha];
        match &projections {
            Some(caches) => {
                for k in 0..2 {
                    let c = &caches[k];
                    g.proj_weight2 += &c.hidden.t().dot(&dm[k]);
                    g.proj_bias2 += &dm[k].sum_axis(Axis(0));
                    let mut dh = dm[k].dot(&params.proj_weight2.t());
                    relu_mask(&mut dh, &c.hidden_pre);
                    g.proj_weight1 += &traces[k].z.t().dot(&dh);
                    g.proj_bias1 += &dh.sum_axis(Axis(0));
                    dz[k] += &dh.dot(&params.proj_weight1.t());
                }
            }
            None => {
                for k in 0..2 {
                    dz[k] += &dm[k];
                }
            }
        }
    }

    for k in 0..2 {
        encoder_backward(&traces[k], input.operators[k], params, &mut dz[k], &mut g)?;
    }
    Ok((breakdown, Some(g)))
}

/// Inter and mean intra loss, plus gradients on the raw rows when asked.
fn contrastive(
    m1: ArrayView2<f64>,
    m2: ArrayView2<f64>,
    settings: &LossSettings,
    want_grad: bool,
) -> (f64, f64, Option<[Array2<f64>; 2]>) {
    let tau = settings.tau;
    let (a, na) = cosine_normalize(m1);
    let (b, nb) = cosine_normalize(m2);
    let (inter, inter_grads) = if settings.symmetric_inter {
        let (l12, g12) = inter_view_normalized(&a, &b, tau, want_grad);
        let (l21, g21) = inter_view_normalized(&b, &a, tau, want_grad);
        let grads = g12.zip(g21).map(|((da1, db1), (db2, da2))| ((da1 + da2) * 0.5, (db1 + db2) * 0.5));
        (0.5 * (l12 + l21), grads)
    } else {
        inter_view_normalized(&a, &b, tau, want_grad)
    };
    let (ia, ga) = intra_view_normalized(&a, tau, want_grad);
    let (ib, gb) = intra_view_normalized(&b, tau, want_grad);
    let intra = 0.5 * (ia + ib);
    let grads = match (inter_grads, ga, gb) {
        (Some((da, db)), Some(ga), Some(gb)) => {
            let da = da + &(ga * 0.5);
            let db = db + &(gb * 0.5);
            Some([normalize_backward(&a, &na, &da), normalize_backward(&b, &nb, &db)])
        }
        _ => None,
    };
    (inter, intra, grads)
}

fn add_row_sums(target: &mut Array1<f64>, grad: &Array2<f64>) {
    *target += &grad.sum_axis(Axis(0));
}

/// Accumulates encoder gradients for one view given `dZ`.
fn encoder_backward(
    trace: &EncoderTrace,
    operator: &HermitianMatrix,
    params: &EncoderParams,
    dz: &mut Array2<f64>,
    g: &mut EncoderParams,
) -> Result<()> {
    relu_mask(dz, &trace.fc_pre);
    g.fc_weight += &trace.unwound.t().dot(dz);
    add_row_sums(&mut g.fc_bias, dz);
    let du = dz.dot(&params.fc_weight.t());
    let hidden = du.ncols() / 2;
    let mut dx = ComplexFeatures {
        re: du.slice(s![.., ..hidden]).to_owned(),
        im: du.slice(s![.., hidden..]).to_owned(),
    };

    for l in (0..params.conv.len()).rev() {
        let pre = &trace.layer_pre[l];
        // Complex ReLU passes both planes where re > 0.
        Zip::from(&mut dx.re)
            .and(&mut dx.im)
            .and(&pre.re)
            .for_each(|gr, gi, &r| {
                if r <= 0.0 {
                    *gr = 0.0;
                    *gi = 0.0;
                }
            });
        add_row_sums(&mut g.conv[l].bias_re, &dx.re);
        add_row_sums(&mut g.conv[l].bias_im, &dx.im);
        let dt = operator.spmm(&dx)?;
        let x = &trace.layer_inputs[l];
        let w = &params.conv[l].weight;
        g.conv[l].weight += &x.re.t().dot(&dt.re);
        if l > 0 {
            g.conv[l].weight += &x.im.t().dot(&dt.im);
            dx = ComplexFeatures {
                re: dt.re.dot(&w.t()),
                im: dt.im.dot(&w.t()),
            };
        } else {
            // The embedding table is real, so only the real plane reaches it.
            g.embeddings += &dt.re.dot(&w.t());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{init_params, ModelDims};
    use crate::graph::{graph_from_edges, Sign};
    use crate::spectral::{renormalized_propagation, PhaseSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dead_network_has_zero_encoder_gradients() {
        let dims = ModelDims {
            input: 3,
            hidden: 2,
            embed: 3,
            layers: 2,
        };
        let mut p = init_params(4, &dims, &mut ChaCha8Rng::seed_from_u64(0));
        p.fc_weight.fill(0.0);
        p.fc_bias.fill(-1.0);
        let g = graph_from_edges(4, &[EdgeRecord::new(0, 1, Sign::Positive), EdgeRecord::new(2, 3, Sign::Positive)]).unwrap();
        let y = renormalized_propagation(&g, &PhaseSpec::new(0.3));
        let edges = g.edge_records();
        let (_, grads) = forward_backward(
            &p,
            StepInput {
                operators: [&y, &y],
                edges: &edges,
            },
            &LossSettings::default(),
        )
        .unwrap();
        assert!(grads.embeddings.iter().all(|&v| v == 0.0));
        assert!(grads.fc_weight.iter().all(|&v| v == 0.0));
        assert!(grads.conv.iter().all(|c| c.weight.iter().all(|&v| v == 0.0)));
        assert!(grads.pred_bias[0] != 0.0);
    }
}
