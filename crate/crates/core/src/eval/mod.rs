//! Metric computation, stratified splitting, k-fold cross-validation, and
//! the ablation harness.
//!
//! Metrics with a zero denominator are reported as absent (`None`), never
//! silently coerced to 0.

mod ablation;
mod split;

pub use ablation::{
    ablation_table, build_dataset, cross_validate, cv_table, evaluate_params, run_ablation,
    summarize_folds, train_and_evaluate, write_ablation_csv, write_cv_csv, AblationRow,
    AblationSpec, CvSummary, FoldReport, MetricSummary, VALIDATION_FRACTION,
};
pub use split::{stratified_kfold, stratified_split, SplitPlan};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classification and regression metric bundle for one evaluation.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub roc_auc: Option<f64>,
    pub mae: Option<f64>,
    pub mse: Option<f64>,
    pub rmse: Option<f64>,
    pub r2: Option<f64>,
    pub mape: Option<f64>,
    /// Targets skipped by MAPE for being ~0.
    pub mape_skipped: usize,
    pub n: usize,
}

/// Formats an optional metric for reports; absent metrics stay explicit.
pub fn fmt_metric(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "undefined".to_string(),
    }
}

fn fmt_metric_rounded(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "undefined".to_string(),
    }
}

impl EvalReport {
    pub const CSV_HEADER: [&'static str; 12] = [
        "accuracy",
        "precision",
        "recall",
        "f1",
        "roc_auc",
        "mae",
        "mse",
        "rmse",
        "r2",
        "mape",
        "mape_skipped",
        "n",
    ];

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            fmt_metric(self.accuracy),
            fmt_metric(self.precision),
            fmt_metric(self.recall),
            fmt_metric(self.f1),
            fmt_metric(self.roc_auc),
            fmt_metric(self.mae),
            fmt_metric(self.mse),
            fmt_metric(self.rmse),
            fmt_metric(self.r2),
            fmt_metric(self.mape),
            self.mape_skipped.to_string(),
            self.n.to_string(),
        ]
    }

    /// Aligned two-column text table of every metric.
    pub fn text_table(&self, title: &str) -> String {
        let rows = [
            ("Accuracy", fmt_metric_rounded(self.accuracy)),
            ("Precision", fmt_metric_rounded(self.precision)),
            ("Recall", fmt_metric_rounded(self.recall)),
            ("F1 Score", fmt_metric_rounded(self.f1)),
            ("ROC AUC", fmt_metric_rounded(self.roc_auc)),
            ("MAE", fmt_metric_rounded(self.mae)),
            ("MSE", fmt_metric_rounded(self.mse)),
            ("RMSE", fmt_metric_rounded(self.rmse)),
            ("R2", fmt_metric_rounded(self.r2)),
            ("MAPE", fmt_metric_rounded(self.mape)),
        ];
        let mut out = format!("{title} (n = {})\n", self.n);
        for (name, value) in rows {
            out.push_str(&format!("{name:<12} {value}\n"));
        }
        out
    }

    /// Combines a classification part and a regression part.
    pub fn merge(clf: &EvalReport, reg: &EvalReport) -> EvalReport {
        EvalReport {
            accuracy: clf.accuracy,
            precision: clf.precision,
            recall: clf.recall,
            f1: clf.f1,
            roc_auc: clf.roc_auc,
            mae: reg.mae,
            mse: reg.mse,
            rmse: reg.rmse,
            r2: reg.r2,
            mape: reg.mape,
            mape_skipped: reg.mape_skipped,
            n: clf.n.max(reg.n),
        }
    }
}

fn validate_binary_labels(labels: &[f64]) -> Result<()> {
    if let Some(l) = labels.iter().find(|&&l| l != 0.0 && l != 1.0) {
        return Err(Error::ContractViolation(format!(
            "label {l} not in {{0, 1}}"
        )));
    }
    Ok(())
}

/// Confusion-matrix metrics at `threshold` plus ROC AUC from the
/// Mann-Whitney rank statistic (ties count half).
pub fn classification_metrics(probs: &[f64], labels: &[f64], threshold: f64) -> Result<EvalReport> {
    if probs.is_empty() || probs.len() != labels.len() {
        return Err(Error::ContractViolation(format!(
            "need equal nonempty lengths, got {} probs and {} labels",
            probs.len(),
            labels.len()
        )));
    }
    validate_binary_labels(labels)?;

    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &l) in probs.iter().zip(labels) {
        match (p >= threshold, l == 1.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let n = probs.len();
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => None,
        _ => None,
    };
    Ok(EvalReport {
        accuracy: Some((tp + tn) as f64 / n as f64),
        precision,
        recall,
        f1,
        roc_auc: roc_auc(probs, labels),
        n,
        ..EvalReport::default()
    })
}

/// AUC via average ranks; `None` when a class is absent.
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&l| l == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks, averaged over the tie group.
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg_rank;
        }
        i = j + 1;
    }
    let rank_sum_pos: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 1.0)
        .map(|(r, _)| r)
        .sum();
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// MAE, MSE, RMSE, R^2, and MAPE. MAPE skips near-zero targets and reports
/// the skip count; R^2 is absent when the targets are constant.
pub fn regression_metrics(preds: &[f64], targets: &[f64]) -> Result<EvalReport> {
    if preds.len() < 2 || preds.len() != targets.len() {
        return Err(Error::ContractViolation(format!(
            "need equal lengths >= 2, got {} preds and {} targets",
            preds.len(),
            targets.len()
        )));
    }
    let n = preds.len() as f64;
    let mae = preds
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / n;
    let mse = preds
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / n;
    let mean_target = targets.iter().sum::<f64>() / n;
    let ss_tot: f64 = targets.iter().map(|t| (t - mean_target).powi(2)).sum();
    let ss_res: f64 = preds
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 {
        None
    } else {
        Some(1.0 - ss_res / ss_tot)
    };
    let mut mape_terms = 0usize;
    let mut mape_sum = 0.0;
    let mut mape_skipped = 0usize;
    for (p, t) in preds.iter().zip(targets) {
        if t.abs() < 1e-8 {
            mape_skipped += 1;
        } else {
            mape_sum += ((p - t) / t).abs();
            mape_terms += 1;
        }
    }
    let mape = if mape_terms == 0 {
        None
    } else {
        Some(mape_sum / mape_terms as f64)
    };
    Ok(EvalReport {
        mae: Some(mae),
        mse: Some(mse),
        rmse: Some(mse.sqrt()),
        r2,
        mape,
        mape_skipped,
        n: preds.len(),
        ..EvalReport::default()
    })
}
