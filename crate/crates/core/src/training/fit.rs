use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::backward::{forward_backward, LossSettings, StepInput};
use crate::augment::{make_views, PerturbationConfig};
use crate::encoder::{init_params, EncoderParams, ModelDims};
use crate::error::{Error, Result};
use crate::eval::{auc, inference_operator, inference_representation, score_edges};
use crate::graph::{sample_training_edges, EdgeRecord, SignedDiGraph};
use crate::spectral::renormalized_propagation;
use crate::spectral::PhaseSpec;

const INIT_STREAM: u64 = 0;
const AUGMENT_STREAM: u64 = 1;
const SAMPLING_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub alpha: f64,
    pub tau: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    /// Epochs without a validation improvement tolerated before stopping.
    pub patience: usize,
    pub seed: u64,
    pub symmetric_inter_loss: bool,
    /// Positive training edges kept per negative one.
    pub pos_neg_ratio: usize,
    /// Draw the positive subsample once instead of every epoch.
    pub freeze_sampling: bool,
    pub use_projection: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            tau: 0.5,
            lr: 1e-3,
            weight_decay: 1e-3,
            max_epochs: 300,
            patience: 30,
            seed: 0,
            symmetric_inter_loss: false,
            pos_neg_ratio: 3,
            freeze_sampling: false,
            use_projection: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be nonnegative, got {}", self.alpha));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight_decay must be nonnegative, got {}", self.weight_decay));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1".into());
        }
        if self.pos_neg_ratio == 0 {
            return bad("pos_neg_ratio must be at least 1".into());
        }
        Ok(())
    }

    pub fn loss_settings(&self) -> LossSettings {
        LossSettings {
            alpha: self.alpha,
            tau: self.tau,
            symmetric_inter: self.symmetric_inter_loss,
            use_projection: self.use_projection,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub inter: f64,
    pub intra: f64,
    pub label: f64,
    pub total: f64,
    /// `None` when the validation edges hold a single class.
    pub val_auc: Option<f64>,
    pub q1: f64,
    pub q2: f64,
}

/// Training split as seen by [`fit`]. `graph` holds the training edges and
/// is the graph every view is perturbed from.
#[derive(Debug, Clone, Copy)]
pub struct TrainingData<'a> {
    pub graph: &'a SignedDiGraph,
    pub train: &'a [EdgeRecord],
    pub valid: &'a [EdgeRecord],
}

#[derive(Debug, Clone)]
pub struct FitOutput {
    /// Parameters of the best validation epoch (the last epoch when
    /// validation AUC is unavailable).
    pub params: EncoderParams,
    pub best_epoch: usize,
    pub best_val_auc: Option<f64>,
    pub epochs_run: usize,
    pub inference_q: f64,
    pub log: Vec<EpochLog>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Validation AUC of `params` on `edges`, or `None` for single-class edges.
pub fn validation_auc(
    params: &EncoderParams,
    operator: &crate::spectral::HermitianMatrix,
    edges: &[EdgeRecord],
) -> Result<Option<f64>> {
    if edges.is_empty() {
        return Ok(None);
    }
    let fused = inference_representation(params, operator)?;
    match auc(&score_edges(params, &fused, edges)?) {
        Ok(v) => Ok(Some(v)),
        Err(Error::SingleClass) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Trains from a fresh initialisation. Each epoch re-samples the positive
/// training edges, draws two views, takes one full-batch Adam step and
/// scores the validation edges on the unperturbed training graph.
/// `on_epoch` sees every log line as it is produced.
pub fn fit<F>(
    data: TrainingData<'_>,
    dims: &ModelDims,
    perturbation: &PerturbationConfig,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<FitOutput>
where
    F: FnMut(&EpochLog) -> Result<()>,
{
    config.validate()?;
    perturbation.validate()?;
    dims.validate()?;
    data.graph.validate()?;
    let n = data.graph.num_nodes();
    if n < 2 {
        return Err(Error::TooFewNodes(n));
    }
    for e in data.train.iter().chain(data.valid) {
        for index in [e.src, e.dst] {
            if index >= n {
                return Err(Error::NodeOutOfRange { index, num_nodes: n });
            }
        }
    }

    let mut params = init_params(n, dims, &mut stream(config.seed, INIT_STREAM));
    let mut augment_rng = stream(perturbation.seed, AUGMENT_STREAM);
    let mut sampling_rng = stream(config.seed, SAMPLING_STREAM);
    let mut adam = AdamState::new(&params);
    let settings = config.loss_settings();
    let inference_q = perturbation.inference_q();
    let val_operator = inference_operator(data.graph, inference_q);

    let mut frozen: Option<Vec<EdgeRecord>> = None;
    let mut best: Option<(f64, usize, EncoderParams)> = None;
    let mut wait = 0;
    let mut log = Vec::new();

    for epoch in 1..=config.max_epochs {
        let edges = match &frozen {
            Some(e) => e.clone(),
            None => {
                let e = sample_training_edges(data.train, config.pos_neg_ratio, &mut sampling_rng)?;
                if config.freeze_sampling {
                    frozen = Some(e.clone());
                }
                e
            }
        };
        let (v1, v2) = make_views(data.graph, perturbation, &mut augment_rng);
        let y1 = renormalized_propagation(&v1.graph, &PhaseSpec::new(v1.q));
        let y2 = renormalized_propagation(&v2.graph, &PhaseSpec::new(v2.q));
        let input = StepInput {
            operators: [&y1, &y2],
            edges: &edges,
        };
        let (loss, grads) = forward_backward(&params, input, &settings)?;
        if !loss.total.is_finite() {
            return Err(Error::Numerical(format!("non-finite loss at epoch {epoch}: {loss:?}")));
        }
        adam_step(&mut params, &grads, &mut adam, config.lr, config.weight_decay)?;
        if !params.is_finite() {
            return Err(Error::Numerical(format!("non-finite parameters after epoch {epoch}")));
        }

        let val_auc = validation_auc(&params, &val_operator, data.valid).map_err(|e| match e {
            Error::Numerical(m) => Error::Numerical(format!("validation at epoch {epoch}: {m}")),
            other => other,
        })?;
        let entry = EpochLog {
            epoch,
            inter: loss.inter,
            intra: loss.intra,
            label: loss.label,
            total: loss.total,
            val_auc,
            q1: v1.q,
            q2: v2.q,
        };
        on_epoch(&entry)?;
        log.push(entry);

        if let Some(v) = val_auc {
            match &best {
                Some((b, _, _)) if v <= *b => wait += 1,
                _ => {
                    best = Some((v, epoch, params.clone()));
                    wait = 0;
                }
            }
            if wait > config.patience {
                break;
            }
        }
    }

    let epochs_run = log.len();
    let (params, best_epoch, best_val_auc) = match best {
        Some((v, epoch, p)) => (p, epoch, Some(v)),
        None => (params, epochs_run, None),
    };
    Ok(FitOutput {
        params,
        best_epoch,
        best_val_auc,
        epochs_run,
        inference_q,
        log,
    })
}
