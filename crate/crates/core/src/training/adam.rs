use crate::encoder::EncoderParams;
use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moments per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: EncoderParams,
    pub v: EncoderParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &EncoderParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
        }
    }
}

/// `decay · param` on every decaying tensor, zero on biases.
pub fn weight_decay_gradient(params: &EncoderParams, decay: f64) -> EncoderParams {
    let mut out = params.clone();
    for t in out.tensors_mut() {
        let keep = t.kind.decays();
        for v in t.data.iter_mut() {
            *v = if keep { decay * *v } else { 0.0 };
        }
    }
    out
}

/// One Adam update. Weight decay is coupled: `decay · param` is added to
/// the gradient of weights and embeddings before the moment updates.
pub fn adam_step(
    params: &mut EncoderParams,
    grads: &EncoderParams,
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    params.check_same_layout(grads)?;
    params.check_same_layout(&state.m)?;
    params.check_same_layout(&state.v)?;
    if !(lr > 0.0) || !(weight_decay >= 0.0) {
        return Err(Error::Config(format!("bad optimizer settings lr={lr} decay={weight_decay}")));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    let tensors = params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(state.m.tensors_mut())
        .zip(state.v.tensors_mut());
    for (((p, g), m), v) in tensors {
        let decay = if p.kind.decays() { weight_decay } else { 0.0 };
        for i in 0..p.data.len() {
            let grad = g.data[i] + decay * p.data[i];
            m.data[i] = BETA1 * m.data[i] + (1.0 - BETA1) * grad;
            v.data[i] = BETA2 * v.data[i] + (1.0 - BETA2) * grad * grad;
            let m_hat = m.data[i] / c1;
            let v_hat = v.data[i] / c2;
            p.data[i] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{init_params, ModelDims};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> EncoderParams {
        let dims = ModelDims {
            input: 3,
            hidden: 2,
            embed: 2,
            layers: 1,
        };
        init_params(4, &dims, &mut ChaCha8Rng::seed_from_u64(5))
    }

    #[test]
    fn zero_gradient_no_decay_is_identity() {
        let mut p = params();
        let before = p.clone();
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &before.zeros_like(), &mut st, 1e-3, 0.0).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_moves_by_lr_sign() {
        let mut p = params();
        let before = p.clone();
        let mut g = p.zeros_like();
        g.embeddings.fill(0.3);
        g.fc_bias.fill(-2.0);
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &g, &mut st, 1e-3, 0.0).unwrap();
        for (a, b) in p.embeddings.iter().zip(before.embeddings.iter()) {
            assert!((b - a - 1e-3).abs() < 1e-9);
        }
        for (a, b) in p.fc_bias.iter().zip(before.fc_bias.iter()) {
            assert!((a - b - 1e-3).abs() < 1e-9);
        }
    }

    #[test]
    fn decay_gradient_skips_biases() {
        let mut p = params();
        p.fc_bias.fill(1.0);
        let g = weight_decay_gradient(&p, 0.5);
        assert!(g.fc_bias.iter().all(|&v| v == 0.0));
        assert_eq!(g.fc_weight, &p.fc_weight * 0.5);
        assert_eq!(g.embeddings, &p.embeddings * 0.5);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = params();
        let other = init_params(5, &p.dims(), &mut ChaCha8Rng::seed_from_u64(1));
        let mut st = AdamState::new(&p);
        assert!(adam_step(&mut p, &other, &mut st, 1e-3, 0.0).is_err());
    }
}
