//! Forward pass, composite loss, and reverse-mode gradients.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mtl::{uniform01, Layer, NetworkConfig, NetworkParams, PROB_EPSILON};

pub const SELU_ALPHA: f64 = 1.6732632423543772;
pub const SELU_LAMBDA: f64 = 1.0507009873554805;

/// Scaled exponential linear unit.
pub fn selu(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * (x.exp() - 1.0)
    }
}

pub fn selu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable binary cross-entropy evaluated from the logit.
fn bce_from_logit(logit: f64, label: f64) -> f64 {
    logit.max(0.0) - logit * label + (1.0 + (-logit.abs()).exp()).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    Train,
    Eval,
}

/// Inverted-dropout mask factor: 0 with probability `rate`, else
/// `1 / (1 - rate)`, so eval mode needs no rescaling.
pub fn dropout_mask(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    if rate <= 0.0 {
        return 1.0;
    }
    if uniform01(rng) < rate {
        0.0
    } else {
        1.0 / (1.0 - rate)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    input: Vec<f64>,
    z: Vec<f64>,
    mask: Option<Vec<f64>>,
}

/// Pre-activations and masks recorded by a forward pass, consumed by
/// [`backward`].
#[derive(Debug, Clone)]
pub struct Cache {
    shared: Vec<LayerCache>,
    clf: Vec<LayerCache>,
    clf_head_in: Vec<f64>,
    reg: Vec<LayerCache>,
    reg_head_in: Vec<f64>,
    pub logit: f64,
    pub y_reg: f64,
}

fn run_stack(
    layers: &[Layer],
    input: Vec<f64>,
    rate: f64,
    mode: ForwardMode,
    rng: &mut ChaCha8Rng,
    caches: &mut Vec<LayerCache>,
) -> Vec<f64> {
    let mut a = input;
    for layer in layers {
        let z = layer.affine(&a);
        let mut out: Vec<f64> = z.iter().map(|&v| selu(v)).collect();
        let mask = if mode == ForwardMode::Train && rate > 0.0 {
            let m: Vec<f64> = out.iter().map(|_| dropout_mask(rng, rate)).collect();
            out.iter_mut().zip(&m).for_each(|(o, f)| *o *= f);
            Some(m)
        } else {
            None
        };
        caches.push(LayerCache { input: a, z, mask });
        a = out;
    }
    a
}

/// Runs the network on one sample. Training mode applies inverted dropout
/// drawn from `rng`; eval mode is deterministic.
///
/// Returns the clipped success probability, the regression output, and the
/// cache for a subsequent backward pass.
pub fn forward(
    x: &[f64],
    params: &NetworkParams,
    config: &NetworkConfig,
    mode: ForwardMode,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64, Cache)> {
    if x.len() != params.input_width {
        return Err(Error::ShapeMismatch(format!(
            "input width {} vs network width {}",
            x.len(),
            params.input_width
        )));
    }
    let mut shared_cache = Vec::with_capacity(params.shared.len());
    let trunk = run_stack(
        &params.shared,
        x.to_vec(),
        config.dropout_shared,
        mode,
        rng,
        &mut shared_cache,
    );

    let mut clf_cache = Vec::with_capacity(params.clf_branch.len());
    let clf_head_in = run_stack(
        &params.clf_branch,
        trunk.clone(),
        config.dropout_clf,
        mode,
        rng,
        &mut clf_cache,
    );
    let logit = params.clf_head.affine(&clf_head_in)[0];

    let mut reg_cache = Vec::with_capacity(params.reg_branch.len());
    let reg_head_in = run_stack(
        &params.reg_branch,
        trunk,
        config.dropout_reg,
        mode,
        rng,
        &mut reg_cache,
    );
    let y_reg = params.reg_head.affine(&reg_head_in)[0];

    let p = sigmoid(logit).clamp(PROB_EPSILON, 1.0 - PROB_EPSILON);
    Ok((
        p,
        y_reg,
        Cache {
            shared: shared_cache,
            clf: clf_cache,
            clf_head_in,
            reg: reg_cache,
            reg_head_in,
            logit,
            y_reg,
        },
    ))
}

/// A training batch: feature rows, binary labels, regression targets.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub xs: &'a [Vec<f64>],
    pub labels: &'a [f64],
    pub targets: &'a [f64],
}

impl<'a> Batch<'a> {
    pub fn validate(&self) -> Result<()> {
        if self.xs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if self.xs.len() != self.labels.len() || self.xs.len() != self.targets.len() {
            return Err(Error::ShapeMismatch(format!(
                "batch lengths differ: {} rows, {} labels, {} targets",
                self.xs.len(),
                self.labels.len(),
                self.targets.len()
            )));
        }
        if let Some(l) = self.labels.iter().find(|&&l| l != 0.0 && l != 1.0) {
            return Err(Error::ContractViolation(format!(
                "label {l} not in {{0, 1}}"
            )));
        }
        if self.targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::ContractViolation(
                "non-finite regression target".into(),
            ));
        }
        Ok(())
    }
}

/// Loss terms of one batch. `total` is what training minimizes.
#[derive(Debug, Clone, Copy)]
pub struct LossComponents {
    /// Mean binary cross-entropy over the batch.
    pub bce: f64,
    /// Mean squared error over the batch.
    pub mse: f64,
    /// `exp(-u_c) * bce + u_c`.
    pub l_clf: f64,
    /// `exp(-u_r) * mse + u_r`.
    pub l_reg: f64,
    pub l1_penalty: f64,
    pub l2_penalty: f64,
    pub total: f64,
}

/// Forward over a batch plus the uncertainty-weighted composite loss with
/// L1/L2 penalties over weight matrices.
pub fn batch_loss(
    batch: &Batch,
    params: &NetworkParams,
    config: &NetworkConfig,
    mode: ForwardMode,
    rng: &mut ChaCha8Rng,
) -> Result<(LossComponents, Vec<Cache>)> {
    batch.validate()?;
    let n = batch.xs.len() as f64;
    let mut caches = Vec::with_capacity(batch.xs.len());
    let mut bce = 0.0;
    let mut mse = 0.0;
    for ((x, &label), &target) in batch.xs.iter().zip(batch.labels).zip(batch.targets) {
        let (_, y, cache) = forward(x, params, config, mode, rng)?;
        bce += bce_from_logit(cache.logit, label);
        mse += (y - target).powi(2);
        caches.push(cache);
    }
    bce /= n;
    mse /= n;

    let l_clf = (-params.log_var_clf).exp() * bce + params.log_var_clf;
    let l_reg = (-params.log_var_reg).exp() * mse + params.log_var_reg;
    let (w_l1, w_l2) = params.weight_norms();
    let l1_penalty = config.l1 * w_l1;
    let l2_penalty = config.l2 * w_l2;
    let total =
        config.task_weight_clf * l_clf + config.task_weight_reg * l_reg + l1_penalty + l2_penalty;
    if !total.is_finite() {
        return Err(Error::NonFiniteLoss(format!(
            "bce = {bce}, mse = {mse}, u_c = {}, u_r = {}, l1 = {l1_penalty}, l2 = {l2_penalty}",
            params.log_var_clf, params.log_var_reg
        )));
    }
    Ok((
        LossComponents {
            bce,
            mse,
            l_clf,
            l_reg,
            l1_penalty,
            l2_penalty,
            total,
        },
        caches,
    ))
}

fn backprop_stack(
    layers: &[Layer],
    caches: &[LayerCache],
    mut grad_out: Vec<f64>,
    grads: &mut [Layer],
) -> Vec<f64> {
    for ((layer, cache), grad_layer) in layers.iter().zip(caches).zip(grads.iter_mut()).rev() {
        if let Some(mask) = &cache.mask {
            grad_out.iter_mut().zip(mask).for_each(|(g, m)| *g *= m);
        }
        let dz: Vec<f64> = grad_out
            .iter()
            .zip(&cache.z)
            .map(|(g, &z)| g * selu_derivative(z))
            .collect();
        let mut grad_in = vec![0.0; layer.in_dim];
        for (o, &dzo) in dz.iter().enumerate() {
            grad_layer.bias[o] += dzo;
            let row = &mut grad_layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
            for (i, (gw, &xi)) in row.iter_mut().zip(&cache.input).enumerate() {
                *gw += dzo * xi;
                grad_in[i] += layer.weights[o * layer.in_dim + i] * dzo;
            }
        }
        grad_out = grad_in;
    }
    grad_out
}

fn backprop_head(head: &Layer, input: &[f64], delta: f64, grad_head: &mut Layer) -> Vec<f64> {
    grad_head.bias[0] += delta;
    let mut grad_in = vec![0.0; head.in_dim];
    for (i, (&xi, gi)) in input.iter().zip(grad_in.iter_mut()).enumerate() {
        grad_head.weights[i] += delta * xi;
        *gi = head.weights[i] * delta;
    }
    grad_in
}

/// Exact gradients of the composite loss with respect to every parameter,
/// including the log-variances. The L1 subgradient at zero is zero.
pub fn backward(
    batch: &Batch,
    caches: &[Cache],
    params: &NetworkParams,
    config: &NetworkConfig,
    components: &LossComponents,
) -> Result<NetworkParams> {
    if caches.len() != batch.xs.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} caches for {} samples",
            caches.len(),
            batch.xs.len()
        )));
    }
    let n = batch.xs.len() as f64;
    let mut grads = params.zeros_like();
    let clf_scale = config.task_weight_clf * (-params.log_var_clf).exp();
    let reg_scale = config.task_weight_reg * (-params.log_var_reg).exp();

    for ((cache, &label), &target) in caches.iter().zip(batch.labels).zip(batch.targets) {
        let d_logit = clf_scale * (sigmoid(cache.logit) - label) / n;
        let d_y = reg_scale * 2.0 * (cache.y_reg - target) / n;

        let g_clf = backprop_head(
            &params.clf_head,
            &cache.clf_head_in,
            d_logit,
            &mut grads.clf_head,
        );
        let mut d_trunk =
            backprop_stack(&params.clf_branch, &cache.clf, g_clf, &mut grads.clf_branch);

        let g_reg = backprop_head(
            &params.reg_head,
            &cache.reg_head_in,
            d_y,
            &mut grads.reg_head,
        );
        let d_trunk_reg =
            backprop_stack(&params.reg_branch, &cache.reg, g_reg, &mut grads.reg_branch);
        d_trunk
            .iter_mut()
            .zip(&d_trunk_reg)
            .for_each(|(a, b)| *a += b);

        backprop_stack(&params.shared, &cache.shared, d_trunk, &mut grads.shared);
    }

    grads.log_var_clf =
        config.task_weight_clf * (1.0 - (-params.log_var_clf).exp() * components.bce);
    grads.log_var_reg =
        config.task_weight_reg * (1.0 - (-params.log_var_reg).exp() * components.mse);

    // Penalty gradients apply to weight matrices only.
    let add_penalty = |layer: &Layer, grad: &mut Layer| {
        for (g, &w) in grad.weights.iter_mut().zip(&layer.weights) {
            let sign = if w == 0.0 { 0.0 } else { w.signum() };
            *g += config.l1 * sign + 2.0 * config.l2 * w;
        }
    };
    for (layer, grad) in params
        .layers()
        .into_iter()
        .zip(grads_layers_mut(&mut grads))
    {
        add_penalty(layer, grad);
    }
    Ok(grads)
}

fn grads_layers_mut(grads: &mut NetworkParams) -> Vec<&mut Layer> {
    grads
        .shared
        .iter_mut()
        .chain(grads.clf_branch.iter_mut())
        .chain(std::iter::once(&mut grads.clf_head))
        .chain(grads.reg_branch.iter_mut())
        .chain(std::iter::once(&mut grads.reg_head))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mtl::rng_from_seed;

    fn small_config(seed: u64) -> NetworkConfig {
        NetworkConfig {
            shared_sizes: vec![8, 6],
            clf_sizes: vec![4],
            reg_sizes: vec![5, 3],
            dropout_shared: 0.0,
            dropout_clf: 0.0,
            dropout_reg: 0.0,
            l1: 0.0,
            l2: 1e-3,
            ..NetworkConfig::with_seed(seed)
        }
    }

    fn sample_batch(width: usize, n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        use rand::Rng;
        let mut rng = rng_from_seed(seed);
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..width).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let labels: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_bool(0.5))).collect();
        let targets: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
        (xs, labels, targets)
    }

    #[test]
    fn selu_fixed_points() {
        assert_eq!(selu(0.0), 0.0);
        assert!((selu(1.0) - SELU_LAMBDA).abs() < 1e-15);
        assert!(
            (selu(-1.0) - (-1.111330)).abs() < 1e-6,
            "selu(-1) = {}",
            selu(-1.0)
        );
    }

    #[test]
    fn zero_params_give_maximum_uncertainty_outputs() {
        let config = small_config(1);
        let mut rng = rng_from_seed(1);
        let params = NetworkParams::init(5, &config, &mut rng)
            .unwrap()
            .zeros_like();
        let (p, y, _) = forward(
            &[0.3, -0.2, 1.0, 0.0, 0.7],
            &params,
            &config,
            ForwardMode::Eval,
            &mut rng,
        )
        .unwrap();
        assert_eq!(p, 0.5);
        assert_eq!(y, 0.0);
    }

    #[test]
    fn eval_forward_is_deterministic_and_dropout_zero_matches_eval() {
        let mut config = small_config(2);
        let mut rng = rng_from_seed(2);
        let params = NetworkParams::init(4, &config, &mut rng).unwrap();
        let x = [0.1, -0.4, 0.9, 0.2];
        let (p1, y1, _) = forward(&x, &params, &config, ForwardMode::Eval, &mut rng).unwrap();
        let (p2, y2, _) = forward(&x, &params, &config, ForwardMode::Eval, &mut rng).unwrap();
        assert_eq!((p1, y1), (p2, y2));

        config.dropout_shared = 0.0;
        let (p3, y3, _) = forward(&x, &params, &config, ForwardMode::Train, &mut rng).unwrap();
        assert_eq!((p1, y1), (p3, y3));
    }

    #[test]
    fn forward_rejects_width_mismatch() {
        let config = small_config(3);
        let mut rng = rng_from_seed(3);
        let params = NetworkParams::init(4, &config, &mut rng).unwrap();
        assert!(matches!(
            forward(&[1.0, 2.0], &params, &config, ForwardMode::Eval, &mut rng),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn loss_collapses_to_weighted_sum_when_uncertainty_zero() {
        let mut config = small_config(4);
        config.l2 = 0.0;
        let mut rng = rng_from_seed(4);
        let params = NetworkParams::init(6, &config, &mut rng).unwrap();
        let (xs, labels, targets) = sample_batch(6, 10, 5);
        let batch = Batch {
            xs: &xs,
            labels: &labels,
            targets: &targets,
        };
        let (c, _) = batch_loss(&batch, &params, &config, ForwardMode::Eval, &mut rng).unwrap();
        let expected = config.task_weight_clf * c.bce + config.task_weight_reg * c.mse;
        assert!((c.total - expected).abs() < 1e-12);
    }

    #[test]
    fn near_perfect_predictions_reach_near_zero_loss() {
        // A hand-built width-1 network: logit = 40 x, y = x.
        let mut config = small_config(5);
        config.shared_sizes = vec![1];
        config.clf_sizes = vec![];
        config.reg_sizes = vec![];
        config.l2 = 0.0;
        let mut rng = rng_from_seed(5);
        let mut params = NetworkParams::init(1, &config, &mut rng)
            .unwrap()
            .zeros_like();
        params.shared[0].weights[0] = 1.0 / SELU_LAMBDA; // trunk passes x through
        params.clf_head.weights[0] = 40.0;
        params.reg_head.weights[0] = 1.0;
        let xs = vec![vec![1.0], vec![-1.0]];
        let labels = vec![1.0, 0.0];
        // SELU is the identity on positives; feed the negative sample's
        // trunk output as its own target so mse is exactly 0.
        let neg_trunk = selu(-1.0 / SELU_LAMBDA);
        let targets = vec![1.0, neg_trunk];
        let batch = Batch {
            xs: &xs,
            labels: &labels,
            targets: &targets,
        };
        let (c, _) = batch_loss(&batch, &params, &config, ForwardMode::Eval, &mut rng).unwrap();
        assert!(c.total <= 1e-6, "total = {}", c.total);
    }

    #[test]
    fn log_var_gradient_matches_closed_form() {
        let config = small_config(6);
        let mut rng = rng_from_seed(6);
        let mut params = NetworkParams::init(5, &config, &mut rng).unwrap();
        params.log_var_clf = 0.3;
        params.log_var_reg = -0.2;
        let (xs, labels, targets) = sample_batch(5, 8, 7);
        let batch = Batch {
            xs: &xs,
            labels: &labels,
            targets: &targets,
        };
        let (c, caches) =
            batch_loss(&batch, &params, &config, ForwardMode::Eval, &mut rng).unwrap();
        let grads = backward(&batch, &caches, &params, &config, &c).unwrap();
        let expected_uc = config.task_weight_clf * (1.0 - (-0.3f64).exp() * c.bce);
        let expected_ur = config.task_weight_reg * (1.0 - (0.2f64).exp() * c.mse);
        assert!((grads.log_var_clf - expected_uc).abs() <= 1e-8);
        assert!((grads.log_var_reg - expected_ur).abs() <= 1e-8);
    }

    /// Central-difference gradient check over every coordinate.
    fn finite_difference_check(
        config: &NetworkConfig,
        width: usize,
        n: usize,
        mode: ForwardMode,
        seed: u64,
    ) -> f64 {
        let mut rng = rng_from_seed(seed);
        let mut params = NetworkParams::init(width, config, &mut rng).unwrap();
        let (xs, labels, targets) = sample_batch(width, n, seed + 1);
        let batch = Batch {
            xs: &xs,
            labels: &labels,
            targets: &targets,
        };
        // Fixed rng seed per evaluation freezes dropout masks, making the
        // loss a deterministic function of the parameters.
        let mask_seed = 99;
        let loss_at = |p: &NetworkParams| {
            let mut mask_rng = rng_from_seed(mask_seed);
            batch_loss(&batch, p, config, mode, &mut mask_rng)
                .unwrap()
                .0
                .total
        };
        let (components, caches) = {
            let mut mask_rng = rng_from_seed(mask_seed);
            batch_loss(&batch, &params, config, mode, &mut mask_rng).unwrap()
        };
        let analytic = backward(&batch, &caches, &params, config, &components).unwrap();
        let analytic_coords = analytic.coordinates();

        let h = 1e-5;
        let n_coords = analytic_coords.len();
        let mut max_rel = 0f64;
        for k in 0..n_coords {
            let original = {
                let mut coords = params.coordinates_mut();
                let orig = *coords[k];
                *coords[k] = orig + h;
                orig
            };
            let plus = loss_at(&params);
            {
                let mut coords = params.coordinates_mut();
                *coords[k] = original - h;
            }
            let minus = loss_at(&params);
            {
                let mut coords = params.coordinates_mut();
                *coords[k] = original;
            }
            let fd = (plus - minus) / (2.0 * h);
            let rel = (analytic_coords[k] - fd).abs() / (fd.abs() + 1e-8);
            if rel > max_rel {
                max_rel = rel;
            }
        }
        max_rel
    }

    #[test]
    fn gradients_match_finite_differences_without_dropout() {
        let config = small_config(8);
        let max_rel = finite_difference_check(&config, 5, 4, ForwardMode::Eval, 11);
        assert!(max_rel <= 1e-4, "max relative error {max_rel}");
    }

    #[test]
    fn gradients_match_finite_differences_with_frozen_dropout() {
        let mut config = small_config(9);
        config.dropout_shared = 0.5;
        config.dropout_clf = 0.4;
        config.dropout_reg = 0.35;
        let max_rel = finite_difference_check(&config, 5, 4, ForwardMode::Train, 13);
        assert!(max_rel <= 1e-4, "max relative error {max_rel}");
    }

    #[test]
    fn zero_loss_point_has_only_penalty_gradients() {
        let mut config = small_config(10);
        config.shared_sizes = vec![1];
        config.clf_sizes = vec![];
        config.reg_sizes = vec![];
        config.l1 = 0.0;
        config.l2 = 0.0;
        let mut rng = rng_from_seed(10);
        let mut params = NetworkParams::init(1, &config, &mut rng)
            .unwrap()
            .zeros_like();
        params.shared[0].weights[0] = 1.0 / SELU_LAMBDA;
        params.clf_head.weights[0] = 60.0;
        params.reg_head.weights[0] = 1.0;
        let xs = vec![vec![1.0]];
        let labels = vec![1.0];
        let targets = vec![1.0];
        let batch = Batch {
            xs: &xs,
            labels: &labels,
            targets: &targets,
        };
        let (c, caches) =
            batch_loss(&batch, &params, &config, ForwardMode::Eval, &mut rng).unwrap();
        let grads = backward(&batch, &caches, &params, &config, &c).unwrap();
        // Everything except the log-variance gradients must vanish.
        let coords = grads.coordinates();
        for &g in &coords[..coords.len() - 2] {
            assert!(g.abs() <= 1e-6, "gradient {g}");
        }
    }

    #[test]
    fn dropout_mask_expectation_matches_eval() {
        let mut rng = rng_from_seed(12);
        let rate = 0.4;
        let samples = 100_000;
        let mean: f64 = (0..samples)
            .map(|_| dropout_mask(&mut rng, rate))
            .sum::<f64>()
            / samples as f64;
        assert!((mean - 1.0).abs() <= 1e-2, "mean mask factor {mean}");
    }

    #[test]
    fn parameter_count_beats_two_single_task_networks() {
        let config = NetworkConfig::with_seed(0);
        let mut rng = rng_from_seed(0);
        let mtl = NetworkParams::init(29, &config, &mut rng).unwrap();

        // A single-task baseline repeats the trunk, keeps one branch and
        // head, and has no uncertainty parameters.
        let single_task_count = |branch: &[usize]| {
            let mut count = 0;
            let mut in_dim = 29;
            for &out in config.shared_sizes.iter().chain(branch) {
                count += in_dim * out + out;
                in_dim = out;
            }
            count + in_dim + 1
        };
        let single_sum =
            single_task_count(&config.clf_sizes) + single_task_count(&config.reg_sizes);
        assert!(
            mtl.parameter_count() < single_sum,
            "mtl {} vs single-task sum {}",
            mtl.parameter_count(),
            single_sum
        );
    }
}
