//! Central finite-difference verification of [`forward_backward`].

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::backward::{forward_backward, forward_loss, LossSettings, StepInput};
use crate::encoder::EncoderParams;
use crate::error::Result;

pub const STEP: f64 = 1e-5;
pub const DENOMINATOR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Largest relative error over the smooth probes.
    pub max_relative_error: f64,
    pub probes: Vec<ProbeResult>,
    /// Coordinates whose `±h` stencil straddled a jump of the loss (the
    /// complex ReLU is discontinuous where `re z = 0` and `im z ≠ 0`).
    /// They are reported here and replaced by further draws.
    pub straddled: Vec<ProbeResult>,
}

impl GradCheckReport {
    pub fn worst(&self) -> Option<&ProbeResult> {
        self.probes
            .iter()
            .max_by(|a, b| a.relative_error.total_cmp(&b.relative_error))
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(DENOMINATOR_FLOOR)
}

fn set(params: &mut EncoderParams, tensor: usize, index: usize, value: f64) -> f64 {
    std::mem::replace(&mut params.tensors_mut()[tensor].data[index], value)
}

/// One-sided slopes that disagree by more than this fraction of their scale
/// mark a stencil that crossed a discontinuity.
const JUMP_TOLERANCE: f64 = 0.1;

fn straddles_jump(minus: f64, centre: f64, plus: f64) -> bool {
    let right = (plus - centre) / STEP;
    let left = (centre - minus) / STEP;
    (right - left).abs() > JUMP_TOLERANCE * right.abs().max(left.abs()).max(1.0)
}

/// Compares the analytic gradient with `(L(θ+h) − L(θ−h)) / 2h` on `probes`
/// coordinates drawn uniformly without replacement (all of them if there
/// are fewer). The step input is fixed, so the loss is deterministic.
/// Coordinates whose stencil crosses a jump of the loss are set aside and
/// another coordinate is drawn in their place.
pub fn finite_diff_check(
    params: &EncoderParams,
    input: StepInput<'_>,
    settings: &LossSettings,
    probes: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let (centre, grads) = forward_backward(params, input, settings)?;
    let sizes: Vec<(String, usize)> = params
        .tensors()
        .into_iter()
        .map(|t| (t.name, t.data.len()))
        .collect();
    let total: usize = sizes.iter().map(|s| s.1).sum();
    let grad_flat: Vec<f64> = grads.tensors().iter().flat_map(|t| t.data.iter().copied()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = index::sample(&mut rng, total, total).into_vec();

    let mut results = Vec::with_capacity(probes.min(total));
    let mut straddled = Vec::new();
    let mut work = params.clone();
    for flat in order {
        if results.len() >= probes {
            break;
        }
        let (mut tensor, mut offset) = (0, flat);
        while offset >= sizes[tensor].1 {
            offset -= sizes[tensor].1;
            tensor += 1;
        }
        let original = set(&mut work, tensor, offset, f64::NAN);
        set(&mut work, tensor, offset, original + STEP);
        let plus = forward_loss(&work, input, settings)?.total;
        set(&mut work, tensor, offset, original - STEP);
        let minus = forward_loss(&work, input, settings)?.total;
        set(&mut work, tensor, offset, original);
        let numeric = (plus - minus) / (2.0 * STEP);
        let analytic = grad_flat[flat];
        let probe = ProbeResult {
            tensor: sizes[tensor].0.clone(),
            index: offset,
            analytic,
            numeric,
            relative_error: relative_error(analytic, numeric),
        };
        if straddles_jump(minus, centre.total, plus) {
            straddled.push(probe);
        } else {
            results.push(probe);
        }
    }
    Ok(GradCheckReport {
        max_relative_error: results.iter().map(|r| r.relative_error).fold(0.0, f64::max),
        probes: results,
        straddled,
    })
}
