//! Adam-driven training loop with validation-based early stopping.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::mtl::net::{backward, batch_loss, forward, Batch, ForwardMode};
use crate::mtl::{
    rng_from_seed, EpochRecord, NetworkConfig, NetworkParams, StopReason, TrainReport,
};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// One Adam coordinate update with bias correction. `step` is 1-based.
pub fn adam_update(param: &mut f64, m: &mut f64, v: &mut f64, grad: f64, lr: f64, step: usize) {
    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * grad;
    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * grad * grad;
    let m_hat = *m / (1.0 - ADAM_BETA1.powi(step as i32));
    let v_hat = *v / (1.0 - ADAM_BETA2.powi(step as i32));
    *param -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
}

/// Supervised rows: feature vectors, binary labels, scaled targets.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub xs: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn width(&self) -> usize {
        self.xs.first().map(|x| x.len()).unwrap_or(0)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            xs: indices.iter().map(|&i| self.xs[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
        }
    }

    fn as_batch(&self) -> Batch<'_> {
        Batch {
            xs: &self.xs,
            labels: &self.labels,
            targets: &self.targets,
        }
    }

    fn validate(&self, width: usize) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if self.xs.iter().any(|x| x.len() != width) {
            return Err(Error::ShapeMismatch("inconsistent feature widths".into()));
        }
        self.as_batch().validate()
    }
}

fn apply_adam(
    params: &mut NetworkParams,
    grads: &NetworkParams,
    m: &mut NetworkParams,
    v: &mut NetworkParams,
    lr: f64,
    step: usize,
) {
    let g = grads.coordinates();
    let pc = params.coordinates_mut();
    let mc = m.coordinates_mut();
    let vc = v.coordinates_mut();
    for (((p, gm), gv), grad) in pc.into_iter().zip(mc).zip(vc).zip(g) {
        adam_update(p, gm, gv, grad, lr, step);
    }
}

/// Validation total for early stopping: the uncertainty-weighted task
/// losses under the current log-variances, without the parameter penalty.
fn validation_total(params: &NetworkParams, config: &NetworkConfig, bce: f64, mse: f64) -> f64 {
    let l_clf = (-params.log_var_clf).exp() * bce + params.log_var_clf;
    let l_reg = (-params.log_var_reg).exp() * mse + params.log_var_reg;
    config.task_weight_clf * l_clf + config.task_weight_reg * l_reg
}

/// Trains on shuffled mini-batches with Adam; stops at `max_epochs` or
/// after `patience` epochs without a validation improvement, restoring the
/// best-epoch parameters. Fully deterministic for a given `config.seed`.
pub fn train(
    train_set: &Dataset,
    val_set: &Dataset,
    config: &NetworkConfig,
) -> Result<(NetworkParams, TrainReport)> {
    config.validate()?;
    let width = train_set.width();
    train_set.validate(width)?;
    val_set.validate(width)?;

    let mut rng = rng_from_seed(config.seed);
    let mut params = NetworkParams::init(width, config, &mut rng)?;
    let mut m = params.zeros_like();
    let mut v = params.zeros_like();

    let mut best_params = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut epochs_without_improvement = 0;
    let mut step = 0;
    let mut epochs = Vec::with_capacity(config.max_epochs);
    let mut stop_reason = StopReason::MaxEpochs;

    let mut indices: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=config.max_epochs {
        indices.shuffle(&mut rng);
        let mut train_bce = 0.0;
        let mut train_mse = 0.0;
        for chunk in indices.chunks(config.batch_size) {
            let batch_set = train_set.subset(chunk);
            let batch = batch_set.as_batch();
            let (components, caches) =
                batch_loss(&batch, &params, config, ForwardMode::Train, &mut rng)?;
            let grads = backward(&batch, &caches, &params, config, &components)?;
            step += 1;
            apply_adam(
                &mut params,
                &grads,
                &mut m,
                &mut v,
                config.learning_rate,
                step,
            );
            train_bce += components.bce * chunk.len() as f64;
            train_mse += components.mse * chunk.len() as f64;
        }
        train_bce /= train_set.len() as f64;
        train_mse /= train_set.len() as f64;

        let (val_components, _) = batch_loss(
            &val_set.as_batch(),
            &params,
            config,
            ForwardMode::Eval,
            &mut rng,
        )?;
        let val_total = validation_total(&params, config, val_components.bce, val_components.mse);
        epochs.push(EpochRecord {
            epoch,
            train_clf: train_bce,
            train_reg: train_mse,
            val_clf: val_components.bce,
            val_reg: val_components.mse,
            u_clf: params.log_var_clf,
            u_reg: params.log_var_reg,
        });

        if val_total < best_val {
            best_val = val_total;
            best_epoch = epoch;
            best_params = params.clone();
            epochs_without_improvement = 0;
        } else {
            epochs_without_improvement += 1;
            if epochs_without_improvement >= config.patience {
                stop_reason = StopReason::EarlyStopping;
                break;
            }
        }
    }

    let report = TrainReport {
        final_log_var_clf: best_params.log_var_clf,
        final_log_var_reg: best_params.log_var_reg,
        epochs,
        best_epoch,
        best_val_total: best_val,
        stop_reason,
    };
    Ok((best_params, report))
}

/// Eval-mode inference: (success probability, scaled revenue estimate).
pub fn predict(x: &[f64], params: &NetworkParams, config: &NetworkConfig) -> Result<(f64, f64)> {
    let mut rng = rng_from_seed(0); // eval mode draws nothing
    let (p, y, _) = forward(x, params, config, ForwardMode::Eval, &mut rng)?;
    Ok((p, y))
}
