//! The ablation harness (retrain with feature groups removed) and
//! stratified k-fold cross-validation with per-fold preprocessing refits.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::eval::{
    classification_metrics, regression_metrics, stratified_kfold, stratified_split, EvalReport,
};
use crate::features::{FeatureGroup, FeatureSchema, Featurizer, RawFeatures};
use crate::mtl::{predict, train, Dataset, NetworkConfig, NetworkParams, DECISION_THRESHOLD};

/// Fraction of the training split held out for validation/early stopping.
pub const VALIDATION_FRACTION: f64 = 0.15;

/// One ablation condition: which groups to remove and the expected
/// resulting feature count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationSpec {
    pub removed_groups: BTreeSet<FeatureGroup>,
    pub expected_feature_count: usize,
}

impl AblationSpec {
    pub fn new(removed: &[FeatureGroup], expected_feature_count: usize) -> Self {
        AblationSpec {
            removed_groups: removed.iter().copied().collect(),
            expected_feature_count,
        }
    }

    /// The seven standard conditions: full method, the three single-group
    /// removals, and the three pairwise removals.
    pub fn standard_conditions() -> Vec<AblationSpec> {
        use FeatureGroup::*;
        vec![
            AblationSpec::new(&[], 29),
            AblationSpec::new(&[Sir], 22),
            AblationSpec::new(&[Sentiment], 24),
            AblationSpec::new(&[Events], 28),
            AblationSpec::new(&[Sir, Sentiment], 17),
            AblationSpec::new(&[Sir, Events], 21),
            AblationSpec::new(&[Sentiment, Events], 23),
        ]
    }

    pub fn label(&self) -> String {
        if self.removed_groups.is_empty() {
            "Full Method".to_string()
        } else {
            let names: Vec<String> = self.removed_groups.iter().map(|g| g.to_string()).collect();
            format!("w/o {}", names.join(" & "))
        }
    }
}

/// One evaluated ablation condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationRow {
    pub removed: String,
    pub num_features: usize,
    pub report: EvalReport,
}

/// Builds a supervised dataset from raw rows through a fitted featurizer.
pub fn build_dataset(
    rows: &[RawFeatures],
    indices: &[usize],
    featurizer: &Featurizer,
    schema: &FeatureSchema,
) -> Result<Dataset> {
    let mut ds = Dataset::default();
    for &i in indices {
        let v = featurizer.assemble(&rows[i], schema)?;
        ds.xs.push(v.values);
        ds.labels.push(f64::from(v.label_success));
        ds.targets.push(v.target_revenue_scaled);
    }
    Ok(ds)
}

/// Splits a training subset into core/validation parts, trains, and
/// evaluates on the test rows. The same helper backs plain evaluation,
/// the ablation harness, and cross-validation.
pub fn train_and_evaluate(
    train_set: &Dataset,
    test_set: &Dataset,
    config: &NetworkConfig,
) -> Result<(NetworkParams, EvalReport)> {
    let val_plan = stratified_split(&train_set.labels, 1.0 - VALIDATION_FRACTION, config.seed)?;
    let core = train_set.subset(&val_plan.train);
    let val = train_set.subset(&val_plan.test);
    let (params, _) = train(&core, &val, config)?;
    let report = evaluate_params(&params, config, test_set)?;
    Ok((params, report))
}

/// Eval-mode metrics of fitted parameters on a dataset.
pub fn evaluate_params(
    params: &NetworkParams,
    config: &NetworkConfig,
    test_set: &Dataset,
) -> Result<EvalReport> {
    let mut probs = Vec::with_capacity(test_set.len());
    let mut preds = Vec::with_capacity(test_set.len());
    for x in &test_set.xs {
        let (p, y) = predict(x, params, config)?;
        probs.push(p);
        preds.push(y);
    }
    let clf = classification_metrics(&probs, &test_set.labels, DECISION_THRESHOLD)?;
    let reg = regression_metrics(&preds, &test_set.targets)?;
    Ok(EvalReport::merge(&clf, &reg))
}

/// Trains one model per ablation condition on identically seeded splits
/// of the full-width dataset and reports the metric table.
pub fn run_ablation(
    full_dataset: &Dataset,
    specs: &[AblationSpec],
    config: &NetworkConfig,
    split_seed: u64,
) -> Result<Vec<AblationRow>> {
    let full_schema = FeatureSchema::full();
    if full_dataset.width() != full_schema.len() {
        return Err(Error::ShapeMismatch(format!(
            "ablation needs the full {}-wide matrix, got width {}",
            full_schema.len(),
            full_dataset.width()
        )));
    }
    let plan = stratified_split(&full_dataset.labels, 0.8, split_seed)?;
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let schema = FeatureSchema::masked(&spec.removed_groups).map_err(|e| annotate(e, spec))?;
        if schema.len() != spec.expected_feature_count {
            return Err(Error::ContractViolation(format!(
                "{}: schema has {} features, spec expects {}",
                spec.label(),
                schema.len(),
                spec.expected_feature_count
            )));
        }
        let columns = schema.column_indices_in_full()?;
        let project = |ds: &Dataset, indices: &[usize]| -> Dataset {
            let sub = ds.subset(indices);
            Dataset {
                xs: sub
                    .xs
                    .into_iter()
                    .map(|row| columns.iter().map(|&c| row[c]).collect())
                    .collect(),
                labels: sub.labels,
                targets: sub.targets,
            }
        };
        let train_set = project(full_dataset, &plan.train);
        let test_set = project(full_dataset, &plan.test);
        let (_, report) =
            train_and_evaluate(&train_set, &test_set, config).map_err(|e| annotate(e, spec))?;
        rows.push(AblationRow {
            removed: spec.label(),
            num_features: schema.len(),
            report,
        });
    }
    Ok(rows)
}

fn annotate(e: Error, spec: &AblationSpec) -> Error {
    Error::ContractViolation(format!("ablation condition {:?}: {e}", spec.label()))
}

/// Ablation rows as CSV (experiment, removed components, feature count,
/// headline metrics).
pub fn write_ablation_csv(path: &std::path::Path, rows: &[AblationRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "experiment",
        "num_features",
        "accuracy",
        "f1",
        "mae",
        "rmse",
    ])?;
    for row in rows {
        writer.write_record([
            row.removed.clone(),
            row.num_features.to_string(),
            crate::eval::fmt_metric(row.report.accuracy),
            crate::eval::fmt_metric(row.report.f1),
            crate::eval::fmt_metric(row.report.mae),
            crate::eval::fmt_metric(row.report.rmse),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Aligned text table mirroring the published ablation layout.
pub fn ablation_table(rows: &[AblationRow]) -> String {
    let fmt = |v: Option<f64>| match v {
        Some(x) => format!("{x:.2}"),
        None => "undef".to_string(),
    };
    let mut out = format!(
        "{:<26} {:>12} {:>9} {:>9} {:>7} {:>7}\n",
        "Experiment", "Num Features", "Accuracy", "F1-score", "MAE", "RMSE"
    );
    for row in rows {
        out.push_str(&format!(
            "{:<26} {:>12} {:>9} {:>9} {:>7} {:>7}\n",
            row.removed,
            row.num_features,
            fmt(row.report.accuracy),
            fmt(row.report.f1),
            fmt(row.report.mae),
            fmt(row.report.rmse),
        ));
    }
    out
}

/// Per-fold metrics plus the aggregate block as CSV.
pub fn write_cv_csv(path: &std::path::Path, summary: &CvSummary) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["fold".to_string()];
    header.extend(EvalReport::CSV_HEADER.iter().map(|s| s.to_string()));
    writer.write_record(&header)?;
    for fold in &summary.folds {
        let mut row = vec![fold.fold.to_string()];
        row.extend(fold.report.csv_row());
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Aggregate CV table: mean, std, and the 95% interval per metric.
pub fn cv_table(summary: &CvSummary) -> String {
    let mut out = format!(
        "{:<10} {:>8} {:>8} {:>10} {:>10} {:>6}\n",
        "metric", "mean", "std", "ci95_lo", "ci95_hi", "folds"
    );
    for (name, m) in &summary.metrics {
        out.push_str(&format!(
            "{:<10} {:>8.4} {:>8.4} {:>10.4} {:>10.4} {:>6}\n",
            name, m.mean, m.std, m.ci95_lo, m.ci95_hi, m.n_folds
        ));
    }
    out
}

/// Per-metric mean, standard deviation, and a 95% normal-approximation
/// interval over folds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    pub n_folds: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub report: EvalReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvSummary {
    pub folds: Vec<FoldReport>,
    pub metrics: BTreeMap<String, MetricSummary>,
}

fn summarize(values: &[f64]) -> Option<MetricSummary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let half = 1.96 * std / n.sqrt();
    Some(MetricSummary {
        mean,
        std,
        ci95_lo: mean - half,
        ci95_hi: mean + half,
        n_folds: values.len(),
    })
}

type MetricGetter = fn(&EvalReport) -> Option<f64>;

/// Aggregates fold reports into per-metric summaries (absent metrics are
/// skipped, not coerced).
pub fn summarize_folds(folds: &[FoldReport]) -> BTreeMap<String, MetricSummary> {
    let extract: [(&str, MetricGetter); 10] = [
        ("accuracy", |r| r.accuracy),
        ("precision", |r| r.precision),
        ("recall", |r| r.recall),
        ("f1", |r| r.f1),
        ("roc_auc", |r| r.roc_auc),
        ("mae", |r| r.mae),
        ("mse", |r| r.mse),
        ("rmse", |r| r.rmse),
        ("r2", |r| r.r2),
        ("mape", |r| r.mape),
    ];
    let mut out = BTreeMap::new();
    for (name, f) in extract {
        let values: Vec<f64> = folds.iter().filter_map(|fr| f(&fr.report)).collect();
        if let Some(s) = summarize(&values) {
            out.insert(name.to_string(), s);
        }
    }
    out
}

/// Stratified k-fold cross-validation over raw rows. Preprocessing is
/// refit on each fold's training rows; fold `f` trains with seed
/// `config.seed ^ f`.
///
/// Stratification labels are computed once with budgets pooled across all
/// rows (the label is ground truth, not a fitted feature).
pub fn cross_validate(
    rows: &[RawFeatures],
    k: usize,
    seed: u64,
    config: &NetworkConfig,
) -> Result<CvSummary> {
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let all: Vec<usize> = (0..rows.len()).collect();
    let label_helper = Featurizer::fit(rows, &all)?;
    let labels: Vec<f64> = rows
        .iter()
        .map(|r| label_helper.label_and_target(r).map(|(l, _)| f64::from(l)))
        .collect::<Result<_>>()?;

    let plan = stratified_kfold(&labels, k, seed)?;
    let schema = FeatureSchema::full();
    let mut folds = Vec::with_capacity(k);
    for fold in 0..k {
        let (train_idx, test_idx) = plan.fold(fold)?;
        let featurizer = Featurizer::fit(rows, &train_idx)?;
        let train_set = build_dataset(rows, &train_idx, &featurizer, &schema)?;
        let test_set = build_dataset(rows, &test_idx, &featurizer, &schema)?;
        let fold_config = NetworkConfig {
            seed: config.seed ^ fold as u64,
            ..config.clone()
        };
        let (_, report) = train_and_evaluate(&train_set, &test_set, &fold_config)?;
        folds.push(FoldReport { fold, report });
    }
    let metrics = summarize_folds(&folds);
    Ok(CvSummary { folds, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_conditions_match_published_counts() {
        let specs = AblationSpec::standard_conditions();
        let counts: Vec<usize> = specs.iter().map(|s| s.expected_feature_count).collect();
        assert_eq!(counts, vec![29, 22, 24, 28, 17, 21, 23]);
        for spec in &specs {
            let schema = FeatureSchema::masked(&spec.removed_groups).unwrap();
            assert_eq!(
                schema.len(),
                spec.expected_feature_count,
                "{}",
                spec.label()
            );
        }
        assert_eq!(specs[0].label(), "Full Method");
        assert_eq!(specs[2].label(), "w/o Sentiment");
        assert_eq!(specs[4].label(), "w/o SIR & Sentiment");
    }

    #[test]
    fn identical_folds_aggregate_to_zero_std() {
        let report = EvalReport {
            accuracy: Some(0.9),
            mae: Some(0.2),
            ..EvalReport::default()
        };
        let folds: Vec<FoldReport> = (0..5).map(|fold| FoldReport { fold, report }).collect();
        let metrics = summarize_folds(&folds);
        assert_eq!(metrics["accuracy"].std, 0.0);
        assert_eq!(metrics["accuracy"].mean, 0.9);
        assert_eq!(metrics["mae"].n_folds, 5);
        assert!(!metrics.contains_key("r2"), "absent metrics stay absent");
    }

    #[test]
    fn empty_removed_set_equals_plain_run() {
        use crate::features::tests_support::planted_raw_rows;
        let rows = planted_raw_rows(120, 5);
        let all: Vec<usize> = (0..rows.len()).collect();
        let featurizer = Featurizer::fit(&rows, &all).unwrap();
        let schema = FeatureSchema::full();
        let dataset = build_dataset(&rows, &all, &featurizer, &schema).unwrap();

        let config = NetworkConfig {
            shared_sizes: vec![16, 8],
            clf_sizes: vec![4],
            reg_sizes: vec![4],
            max_epochs: 8,
            patience: 8,
            ..NetworkConfig::with_seed(3)
        };
        let rows_out = run_ablation(&dataset, &[AblationSpec::new(&[], 29)], &config, 17).unwrap();

        let plan = stratified_split(&dataset.labels, 0.8, 17).unwrap();
        let (_, direct) = train_and_evaluate(
            &dataset.subset(&plan.train),
            &dataset.subset(&plan.test),
            &config,
        )
        .unwrap();
        assert_eq!(rows_out[0].report.accuracy, direct.accuracy);
        assert_eq!(rows_out[0].report.mae, direct.mae);
        assert_eq!(rows_out[0].num_features, 29);
    }
}
