//! Losses, gradients, optimizer and the training loop.

mod adam;
mod backward;
mod fit;
mod gradcheck;
mod loss;

pub use adam::{adam_step, weight_decay_gradient, AdamState, BETA1, BETA2, EPSILON};
pub use backward::{forward_backward, forward_loss, LossSettings, StepInput};
pub use fit::{fit, validation_auc, EpochLog, FitOutput, TrainConfig, TrainingData};
pub use gradcheck::{finite_diff_check, relative_error, GradCheckReport, ProbeResult, DENOMINATOR_FLOOR, STEP};
pub use loss::{
    contrastive_loss, cosine_normalize, cosine_similarity, inter_view_loss, inter_view_loss_symmetric,
    intra_view_loss, label_loss, total_loss, LossBreakdown, NORM_FLOOR, PROB_CLAMP,
};
