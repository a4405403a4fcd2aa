//! From-scratch multi-task network: a shared SELU trunk feeding a sigmoid
//! classification head and a linear regression head, trained with an
//! uncertainty-weighted composite loss, L1/L2 regularization, reverse-mode
//! gradients, Adam, and early stopping.

mod checkpoint;
mod net;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use net::{
    backward, batch_loss, dropout_mask, forward, selu, selu_derivative, Batch, Cache, ForwardMode,
    LossComponents, SELU_ALPHA, SELU_LAMBDA,
};
pub use train::{adam_update, predict, train, Dataset, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability clip for reported classification probabilities.
pub const PROB_EPSILON: f64 = 1e-7;
/// Decision threshold; probabilities at or above it classify as success.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Hyperparameters. Defaults follow the published configuration: shared
/// sizes 128/64, task branches 32/16 and 64/32/16, dropout 0.5/0.4/0.35,
/// L1 1e-4, L2 1e-3, task weights 1.0:1.5, lr 0.001, batch 32, 150 epochs,
/// patience 40, SELU activations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub shared_sizes: Vec<usize>,
    pub clf_sizes: Vec<usize>,
    pub reg_sizes: Vec<usize>,
    pub dropout_shared: f64,
    pub dropout_clf: f64,
    pub dropout_reg: f64,
    pub l1: f64,
    pub l2: f64,
    pub task_weight_clf: f64,
    pub task_weight_reg: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn with_seed(seed: u64) -> Self {
        NetworkConfig {
            shared_sizes: vec![128, 64],
            clf_sizes: vec![32, 16],
            reg_sizes: vec![64, 32, 16],
            dropout_shared: 0.5,
            dropout_clf: 0.4,
            dropout_reg: 0.35,
            l1: 1e-4,
            l2: 1e-3,
            task_weight_clf: 1.0,
            task_weight_reg: 1.5,
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 150,
            patience: 40,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shared_sizes.contains(&0)
            || self.clf_sizes.contains(&0)
            || self.reg_sizes.contains(&0)
        {
            return Err(Error::ContractViolation("layer sizes must be > 0".into()));
        }
        for (name, rate) in [
            ("dropout_shared", self.dropout_shared),
            ("dropout_clf", self.dropout_clf),
            ("dropout_reg", self.dropout_reg),
        ] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::ContractViolation(format!(
                    "{name} = {rate} outside [0, 1)"
                )));
            }
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::ContractViolation("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::ContractViolation("batch_size must be > 0".into()));
        }
        if self.patience > self.max_epochs {
            return Err(Error::ContractViolation(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        Ok(())
    }
}

/// One dense layer, weights stored row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Layer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    fn lecun_init(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let dist = Normal::new(0.0, (1.0 / in_dim as f64).sqrt()).unwrap();
        Layer {
            in_dim,
            out_dim,
            weights: (0..in_dim * out_dim).map(|_| dist.sample(rng)).collect(),
            bias: vec![0.0; out_dim],
        }
    }

    /// `z = W x + b`.
    fn affine(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.bias.clone();
        for (o, zo) in z.iter_mut().enumerate() {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            *zo += row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        }
        z
    }
}

/// All learned parameters: trunk, branches, heads, and the two per-task
/// log-variance scalars of the uncertainty weighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub input_width: usize,
    pub shared: Vec<Layer>,
    pub clf_branch: Vec<Layer>,
    pub clf_head: Layer,
    pub reg_branch: Vec<Layer>,
    pub reg_head: Layer,
    pub log_var_clf: f64,
    pub log_var_reg: f64,
}

fn chain(
    sizes: &[usize],
    mut in_dim: usize,
    make: &mut impl FnMut(usize, usize) -> Layer,
) -> Vec<Layer> {
    let mut layers = Vec::with_capacity(sizes.len());
    for &out_dim in sizes {
        layers.push(make(in_dim, out_dim));
        in_dim = out_dim;
    }
    layers
}

impl NetworkParams {
    /// LeCun-style initialization scaled for SELU self-normalization:
    /// weights ~ Normal(0, 1 / fan_in), zero biases, zero log-variances.
    pub fn init(input_width: usize, config: &NetworkConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        if input_width == 0 {
            return Err(Error::ContractViolation("input width must be > 0".into()));
        }
        let mut make = |i: usize, o: usize| Layer::lecun_init(i, o, rng);
        let shared = chain(&config.shared_sizes, input_width, &mut make);
        let trunk_out = *config.shared_sizes.last().unwrap_or(&input_width);
        let clf_branch = chain(&config.clf_sizes, trunk_out, &mut make);
        let clf_in = *config.clf_sizes.last().unwrap_or(&trunk_out);
        let reg_branch = chain(&config.reg_sizes, trunk_out, &mut make);
        let reg_in = *config.reg_sizes.last().unwrap_or(&trunk_out);
        Ok(NetworkParams {
            input_width,
            shared,
            clf_branch,
            clf_head: make(clf_in, 1),
            reg_branch,
            reg_head: make(reg_in, 1),
            log_var_clf: 0.0,
            log_var_reg: 0.0,
        })
    }

    /// Same shapes, all zeros; the gradient/optimizer-state container.
    pub fn zeros_like(&self) -> Self {
        let z = |l: &Layer| Layer::zeros(l.in_dim, l.out_dim);
        NetworkParams {
            input_width: self.input_width,
            shared: self.shared.iter().map(z).collect(),
            clf_branch: self.clf_branch.iter().map(z).collect(),
            clf_head: z(&self.clf_head),
            reg_branch: self.reg_branch.iter().map(z).collect(),
            reg_head: z(&self.reg_head),
            log_var_clf: 0.0,
            log_var_reg: 0.0,
        }
    }

    /// Every scalar parameter in canonical order (layer weights then bias,
    /// trunk -> clf branch -> clf head -> reg branch -> reg head, then the
    /// two log-variances).
    pub fn coordinates_mut(&mut self) -> Vec<&mut f64> {
        let mut out = Vec::new();
        let layers = self
            .shared
            .iter_mut()
            .chain(self.clf_branch.iter_mut())
            .chain(std::iter::once(&mut self.clf_head))
            .chain(self.reg_branch.iter_mut())
            .chain(std::iter::once(&mut self.reg_head));
        for layer in layers {
            out.extend(layer.weights.iter_mut());
            out.extend(layer.bias.iter_mut());
        }
        out.push(&mut self.log_var_clf);
        out.push(&mut self.log_var_reg);
        out
    }

    pub fn coordinates(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in self.layers() {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
        out.push(self.log_var_clf);
        out.push(self.log_var_reg);
        out
    }

    pub(crate) fn layers(&self) -> Vec<&Layer> {
        self.shared
            .iter()
            .chain(self.clf_branch.iter())
            .chain(std::iter::once(&self.clf_head))
            .chain(self.reg_branch.iter())
            .chain(std::iter::once(&self.reg_head))
            .collect()
    }

    /// Weights, biases, and log-variances combined.
    pub fn parameter_count(&self) -> usize {
        self.coordinates().len()
    }

    /// Sum of |w| and sum of w^2 over weight matrices only (biases and
    /// log-variances are exempt from the penalty).
    pub(crate) fn weight_norms(&self) -> (f64, f64) {
        let mut l1 = 0.0;
        let mut l2 = 0.0;
        for layer in self.layers() {
            for &w in &layer.weights {
                l1 += w.abs();
                l2 += w * w;
            }
        }
        (l1, l2)
    }

    pub fn validate_input_width(&self, expected: usize) -> Result<()> {
        if self.input_width != expected {
            return Err(Error::VersionMismatch(format!(
                "checkpoint expects input width {}, data has {expected}",
                self.input_width
            )));
        }
        Ok(())
    }
}

/// Why training stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    EarlyStopping,
}

/// Per-epoch losses: raw task losses (BCE / MSE) for both splits plus the
/// learned log-variances after the epoch.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_clf: f64,
    pub train_reg: f64,
    pub val_clf: f64,
    pub val_reg: f64,
    pub u_clf: f64,
    pub u_reg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_total: f64,
    pub stop_reason: StopReason,
    pub final_log_var_clf: f64,
    pub final_log_var_reg: f64,
}

impl TrainReport {
    /// CSV with columns epoch, train_clf, train_reg, val_clf, val_reg,
    /// u_c, u_r.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record([
            "epoch",
            "train_clf",
            "train_reg",
            "val_clf",
            "val_reg",
            "u_c",
            "u_r",
        ])?;
        for e in &self.epochs {
            writer.write_record([
                e.epoch.to_string(),
                e.train_clf.to_string(),
                e.train_reg.to_string(),
                e.val_clf.to_string(),
                e.val_reg.to_string(),
                e.u_clf.to_string(),
                e.u_reg.to_string(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Deterministic dropout stream: one rng drives initialization, shuffling,
/// and masks, all consumed in a fixed order.
pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(0.0..1.0)
}
