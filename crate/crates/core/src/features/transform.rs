//! Column transforms: quantile winsorization and the Yeo-Johnson power
//! transform with maximum-likelihood exponent selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fitted Yeo-Johnson exponent for one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub lambda_yj: f64,
    pub fitted_on: String,
}

/// Quantile of a column using linear interpolation between order statistics.
pub fn quantile(column: &[f64], p: f64) -> Result<f64> {
    if column.is_empty() {
        return Err(Error::ContractViolation("quantile of empty column".into()));
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Clamps a column to its `[p_low, p_high]` quantiles, preserving order.
pub fn winsorize(column: &[f64], p_low: f64, p_high: f64) -> Result<Vec<f64>> {
    let (lo, hi) = winsorize_bounds(column, p_low, p_high)?;
    Ok(winsorize_with_bounds(column, lo, hi))
}

/// The clamp bounds winsorization would use for this column.
pub fn winsorize_bounds(column: &[f64], p_low: f64, p_high: f64) -> Result<(f64, f64)> {
    Ok((quantile(column, p_low)?, quantile(column, p_high)?))
}

/// Applies previously fitted winsorization bounds (idempotent by
/// construction; the pipeline fits bounds on training rows only).
pub fn winsorize_with_bounds(column: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    column.iter().map(|&x| x.clamp(lo, hi)).collect()
}

/// The four-case Yeo-Johnson transform, defined for all reals.
pub fn yeo_johnson(x: f64, lambda: f64) -> f64 {
    if x >= 0.0 {
        if lambda.abs() > 1e-12 {
            ((x + 1.0).powf(lambda) - 1.0) / lambda
        } else {
            (x + 1.0).ln()
        }
    } else if (lambda - 2.0).abs() > 1e-12 {
        -((-x + 1.0).powf(2.0 - lambda) - 1.0) / (2.0 - lambda)
    } else {
        -(-x + 1.0).ln()
    }
}

/// Analytic inverse of [`yeo_johnson`].
pub fn yeo_johnson_inverse(y: f64, lambda: f64) -> f64 {
    if y >= 0.0 {
        if lambda.abs() > 1e-12 {
            (y * lambda + 1.0).powf(1.0 / lambda) - 1.0
        } else {
            y.exp() - 1.0
        }
    } else if (lambda - 2.0).abs() > 1e-12 {
        1.0 - (1.0 - y * (2.0 - lambda)).powf(1.0 / (2.0 - lambda))
    } else {
        1.0 - (-y).exp()
    }
}

/// Gaussian profile log-likelihood of the transformed column, including the
/// Jacobian term `(lambda - 1) * sum(sign(x) * ln(1 + |x|))`.
pub fn yeo_johnson_log_likelihood(column: &[f64], lambda: f64) -> f64 {
    let n = column.len() as f64;
    let transformed: Vec<f64> = column.iter().map(|&x| yeo_johnson(x, lambda)).collect();
    let mean = transformed.iter().sum::<f64>() / n;
    let var = transformed.iter().map(|&y| (y - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 || !var.is_finite() {
        return f64::NEG_INFINITY;
    }
    let jacobian: f64 = column
        .iter()
        .map(|&x| x.signum() * (1.0 + x.abs()).ln())
        .sum();
    -0.5 * n * var.ln() + (lambda - 1.0) * jacobian
}

const GOLDEN_RATIO: f64 = 0.618_033_988_749_894_8;

/// Fits the Yeo-Johnson exponent by golden-section search of the profile
/// log-likelihood over `lambda in [-5, 5]` to a 1e-5 bracket.
pub fn fit_yeo_johnson(column: &[f64], name: &str) -> Result<TransformParams> {
    if column.len() < 10 {
        return Err(Error::ContractViolation(format!(
            "column {name} has {} values, need >= 10",
            column.len()
        )));
    }
    let first = column[0];
    if column.iter().all(|&x| x == first) {
        return Err(Error::DegenerateColumn(format!(
            "column {name} is constant ({first})"
        )));
    }

    let (mut a, mut b) = (-5.0f64, 5.0f64);
    let mut x1 = b - GOLDEN_RATIO * (b - a);
    let mut x2 = a + GOLDEN_RATIO * (b - a);
    let mut f1 = yeo_johnson_log_likelihood(column, x1);
    let mut f2 = yeo_johnson_log_likelihood(column, x2);
    while b - a > 1e-5 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN_RATIO * (b - a);
            f2 = yeo_johnson_log_likelihood(column, x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN_RATIO * (b - a);
            f1 = yeo_johnson_log_likelihood(column, x1);
        }
    }
    Ok(TransformParams {
        lambda_yj: 0.5 * (a + b),
        fitted_on: name.to_string(),
    })
}
