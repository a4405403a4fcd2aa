//! Principal component analysis over standardized columns.
//!
//! Columns are centered and scaled to unit variance before the
//! decomposition; the fitted model therefore carries both the means and the
//! scales so projection reproduces the training-time coordinates.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Per-column standard deviations applied before projection; a constant
    /// column gets scale 1 and contributes nothing.
    pub scale: Vec<f64>,
    /// Orthonormal component rows in standardized coordinates.
    pub components: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
}

/// Fits the top-`k` principal components of `matrix` (rows are samples).
///
/// Rank deficiency from `n <= d` is tolerated: surplus directions simply
/// carry zero explained variance.
pub fn pca_fit(matrix: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let n = matrix.len();
    let d = matrix.first().map(|r| r.len()).unwrap_or(0);
    if !(n >= 2 && d >= k && k >= 1) {
        return Err(Error::ContractViolation(format!(
            "pca requires n >= 2 and d >= k >= 1, got n = {n}, d = {d}, k = {k}"
        )));
    }
    if matrix.iter().any(|r| r.len() != d) {
        return Err(Error::ShapeMismatch("ragged pca input".into()));
    }

    let mut mean = vec![0.0; d];
    for row in matrix {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut scale = vec![0.0; d];
    for row in matrix {
        for (s, (&v, &m)) in scale.iter_mut().zip(row.iter().zip(&mean)) {
            *s += (v - m).powi(2);
        }
    }
    for s in scale.iter_mut() {
        *s = (*s / (n - 1) as f64).sqrt();
        if *s < 1e-12 {
            *s = 1.0; // constant column: standardized values stay 0
        }
    }

    let standardized = DMatrix::from_fn(n, d, |i, j| (matrix[i][j] - mean[j]) / scale[j]);
    let covariance = standardized.transpose() * &standardized / (n as f64 - 1.0);
    let trace = covariance.trace();
    if trace <= 1e-12 {
        return Err(Error::RankDeficient(
            "covariance has no positive variance".into(),
        ));
    }

    let eigen = SymmetricEigen::new(covariance);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap()
    });

    let mut components = Vec::with_capacity(k);
    let mut explained_variance_ratio = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let col = eigen.eigenvectors.column(idx);
        let mut v: Vec<f64> = col.iter().copied().collect();
        // Sign convention: largest-magnitude loading positive.
        let lead = v
            .iter()
            .cloned()
            .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
            .unwrap_or(1.0);
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained_variance_ratio.push((eigen.eigenvalues[idx] / trace).clamp(0.0, 1.0));
    }
    Ok(PcaModel {
        mean,
        scale,
        components,
        explained_variance_ratio,
    })
}

/// Projects one row onto the fitted components.
pub fn pca_project(model: &PcaModel, row: &[f64]) -> Result<Vec<f64>> {
    if row.len() != model.mean.len() {
        return Err(Error::ShapeMismatch(format!(
            "row width {} vs model width {}",
            row.len(),
            model.mean.len()
        )));
    }
    let standardized: Vec<f64> = row
        .iter()
        .zip(model.mean.iter().zip(&model.scale))
        .map(|(&v, (&m, &s))| (v - m) / s)
        .collect();
    Ok(model
        .components
        .iter()
        .map(|c| c.iter().zip(&standardized).map(|(a, b)| a * b).sum())
        .collect())
}
