//! Feature engineering: cleaning, power transforms, PCA compression of the
//! diffusion parameters, and assembly of the group-tagged feature vector.
//!
//! Every statistic a transform needs (quantiles, Yeo-Johnson exponents,
//! the PCA model, imputation medians, standardization moments, the target
//! scaler) is fitted on training rows only and frozen inside
//! [`Featurizer`]; applying it never mutates fitted state.

pub mod pca;
pub mod transform;

pub use pca::{pca_fit, pca_project, PcaModel};
pub use transform::{
    fit_yeo_johnson, quantile, winsorize, winsorize_bounds, winsorize_with_bounds, yeo_johnson,
    yeo_johnson_inverse, yeo_johnson_log_likelihood, TransformParams,
};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Success label threshold: opening weekend at or above half the budget.
pub const ROI_SUCCESS_THRESHOLD: f64 = 0.5;
/// Winsorization percentiles for financial columns.
pub const WINSOR_P: (f64, f64) = (0.01, 0.99);

/// Feature group tags driving ablation masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureGroup {
    #[serde(rename = "SIR")]
    Sir,
    Sentiment,
    Events,
    Base,
}

impl FeatureGroup {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "sir" => Ok(FeatureGroup::Sir),
            "sentiment" => Ok(FeatureGroup::Sentiment),
            "events" => Ok(FeatureGroup::Events),
            "base" => Ok(FeatureGroup::Base),
            other => Err(Error::ContractViolation(format!(
                "unknown feature group {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FeatureGroup::Sir => "SIR",
            FeatureGroup::Sentiment => "Sentiment",
            FeatureGroup::Events => "Events",
            FeatureGroup::Base => "Base",
        };
        f.write_str(s)
    }
}

/// Ordered (name, group) feature list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub entries: Vec<(String, FeatureGroup)>,
}

const SIR_FEATURES: &[&str] = &[
    "beta",
    "gamma",
    "basic_reproduction_number",
    "effective_contact_rate",
    "i0_s0_ratio",
    "sir_pc1",
    "sir_pc2",
];
const SENTIMENT_FEATURES: &[&str] = &[
    "sentiment_decay_7d",
    "sentiment_mean",
    "sentiment_std",
    "sentiment_positive_share",
    "log_review_count",
];
const EVENT_FEATURES: &[&str] = &["event_indicator"];
const BASE_FEATURES: &[&str] = &[
    "log_budget",
    "runtime_minutes",
    "release_month_sin",
    "release_month_cos",
    "release_year_norm",
    "lang_top1",
    "lang_top2",
    "lang_top3",
    "lang_other",
    "country_top1",
    "country_top2",
    "country_top3",
    "country_other",
    "production_company_count",
    "director_prior_count",
    "writer_count",
];

/// Columns receiving a train-fitted Yeo-Johnson transform (heavy-tailed
/// ratio features).
const YJ_FEATURES: &[&str] = &[
    "basic_reproduction_number",
    "effective_contact_rate",
    "i0_s0_ratio",
];

/// Columns z-scored on training statistics. Indicators, one-hots, and the
/// already-bounded calendar encodings stay raw.
const STANDARDIZED_FEATURES: &[&str] = &[
    "beta",
    "gamma",
    "basic_reproduction_number",
    "effective_contact_rate",
    "i0_s0_ratio",
    "sir_pc1",
    "sir_pc2",
    "sentiment_decay_7d",
    "sentiment_mean",
    "sentiment_std",
    "sentiment_positive_share",
    "log_review_count",
    "log_budget",
    "runtime_minutes",
    "production_company_count",
    "director_prior_count",
    "writer_count",
];

impl FeatureSchema {
    /// The canonical 29-entry schema: 7 SIR, 5 Sentiment, 1 Events,
    /// 16 Base.
    pub fn full() -> Self {
        let mut entries = Vec::with_capacity(29);
        for &n in SIR_FEATURES {
            entries.push((n.to_string(), FeatureGroup::Sir));
        }
        for &n in SENTIMENT_FEATURES {
            entries.push((n.to_string(), FeatureGroup::Sentiment));
        }
        for &n in EVENT_FEATURES {
            entries.push((n.to_string(), FeatureGroup::Events));
        }
        for &n in BASE_FEATURES {
            entries.push((n.to_string(), FeatureGroup::Base));
        }
        FeatureSchema { entries }
    }

    /// The full schema minus every group in `mask`.
    pub fn masked(mask: &BTreeSet<FeatureGroup>) -> Result<Self> {
        let entries: Vec<(String, FeatureGroup)> = Self::full()
            .entries
            .into_iter()
            .filter(|(_, g)| !mask.contains(g))
            .collect();
        if entries.is_empty() {
            return Err(Error::ContractViolation(
                "mask removes every feature group".into(),
            ));
        }
        Ok(FeatureSchema { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn group_size(&self, group: FeatureGroup) -> usize {
        self.entries.iter().filter(|(_, g)| *g == group).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.entries)?)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        Ok(FeatureSchema {
            entries: serde_json::from_str(raw)?,
        })
    }

    /// Positions of this schema's columns within the full schema.
    pub fn column_indices_in_full(&self) -> Result<Vec<usize>> {
        let full = FeatureSchema::full();
        self.entries
            .iter()
            .map(|(name, _)| {
                full.entries
                    .iter()
                    .position(|(full_name, _)| full_name == name)
                    .ok_or_else(|| {
                        Error::ContractViolation(format!("feature {name} not in the full schema"))
                    })
            })
            .collect()
    }
}

/// Per-movie raw assembly inputs, prior to any fitted transform. Missing
/// diffusion or sentiment statistics are NaN; missing financials are
/// `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawFeatures {
    pub title: String,
    pub release_year: i32,
    pub release_month: u32,
    pub budget: Option<f64>,
    pub opening_weekend: Option<f64>,
    pub runtime: Option<f64>,
    pub language: String,
    pub country: String,
    pub production_company_count: f64,
    pub director_prior_count: f64,
    pub writer_count: f64,
    pub beta: f64,
    pub gamma: f64,
    pub basic_reproduction_number: f64,
    pub effective_contact_rate: f64,
    pub i0_s0_ratio: f64,
    pub r0_s0_ratio: f64,
    pub peak_infected: f64,
    pub time_to_peak: f64,
    pub sentiment_decay_7d: f64,
    pub sentiment_mean: f64,
    pub sentiment_std: f64,
    pub sentiment_positive_share: f64,
    pub review_count: f64,
}

/// Supervised feature row aligned to a schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label_success: u8,
    pub target_revenue_scaled: f64,
}

/// Opening-weekend return on budget.
pub fn compute_roi(opening_weekend: f64, budget: f64) -> Result<f64> {
    if !(budget > 0.0) {
        return Err(Error::MissingBudget(format!(
            "budget {budget} not positive"
        )));
    }
    Ok(opening_weekend / budget)
}

/// 1 when the opening weekend reaches half the budget.
pub fn compute_label(opening_weekend: f64, budget: f64) -> Result<u8> {
    Ok(u8::from(
        compute_roi(opening_weekend, budget)? >= ROI_SUCCESS_THRESHOLD,
    ))
}

const POSITIVE_EVENT_YEARS: &[i32] = &[2005, 2010, 2014, 2018, 2019];
const NEGATIVE_EVENT_YEARS: &[i32] = &[2008, 2011, 2017, 2020, 2023];

/// Industry-event indicator: +1 for expansion years, -1 for disruption
/// years, 0 otherwise (including out-of-scope years).
pub fn event_indicator(release_year: i32) -> f64 {
    if POSITIVE_EVENT_YEARS.contains(&release_year) {
        1.0
    } else if NEGATIVE_EVENT_YEARS.contains(&release_year) {
        -1.0
    } else {
        0.0
    }
}

/// Whether a year falls inside the modeled window (callers warn outside).
pub fn year_in_scope(release_year: i32) -> bool {
    (crate::ingest::YEAR_RANGE.0..=crate::ingest::YEAR_RANGE.1).contains(&release_year)
}

fn median(values: &mut Vec<f64>) -> Option<f64> {
    values.retain(|v| v.is_finite());
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Fitted preprocessing state. Immutable after [`Featurizer::fit`]; safe
/// to share across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Featurizer {
    /// Training budgets by release year, for the ±2-year median imputation.
    budget_by_year: BTreeMap<i32, Vec<f64>>,
    budget_global_median: Option<f64>,
    budget_bounds: (f64, f64),
    opening_bounds: (f64, f64),
    /// Train medians for NaN imputation, keyed by raw column name.
    impute_medians: BTreeMap<String, f64>,
    /// Fitted Yeo-Johnson exponents.
    yj_lambdas: BTreeMap<String, f64>,
    pca: PcaModel,
    /// Train mean/std per standardized feature (post-transform).
    standardize: BTreeMap<String, (f64, f64)>,
    target_mean: f64,
    target_std: f64,
    lang_vocab: Vec<String>,
    country_vocab: Vec<String>,
}

const IMPUTED_COLUMNS: &[&str] = &[
    "beta",
    "gamma",
    "basic_reproduction_number",
    "effective_contact_rate",
    "i0_s0_ratio",
    "peak_infected",
    "time_to_peak",
    "sentiment_decay_7d",
    "sentiment_mean",
    "sentiment_std",
    "sentiment_positive_share",
];

fn raw_column(row: &RawFeatures, name: &str) -> f64 {
    match name {
        "beta" => row.beta,
        "gamma" => row.gamma,
        "basic_reproduction_number" => row.basic_reproduction_number,
        "effective_contact_rate" => row.effective_contact_rate,
        "i0_s0_ratio" => row.i0_s0_ratio,
        "peak_infected" => row.peak_infected,
        "time_to_peak" => row.time_to_peak,
        "sentiment_decay_7d" => row.sentiment_decay_7d,
        "sentiment_mean" => row.sentiment_mean,
        "sentiment_std" => row.sentiment_std,
        "sentiment_positive_share" => row.sentiment_positive_share,
        other => panic!("not an imputed raw column: {other}"),
    }
}

fn top_values(rows: &[&RawFeatures], pick: impl Fn(&RawFeatures) -> &str, k: usize) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for row in rows {
        *counts.entry(pick(row)).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    // Count descending, name ascending for determinism.
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked
        .into_iter()
        .take(k)
        .map(|(n, _)| n.to_string())
        .collect()
}

impl Featurizer {
    /// Fits all preprocessing state on `rows[train_idx]` only.
    pub fn fit(rows: &[RawFeatures], train_idx: &[usize]) -> Result<Featurizer> {
        if train_idx.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(&bad) = train_idx.iter().find(|&&i| i >= rows.len()) {
            return Err(Error::ContractViolation(format!(
                "train index {bad} out of range ({} rows)",
                rows.len()
            )));
        }
        let train: Vec<&RawFeatures> = train_idx.iter().map(|&i| &rows[i]).collect();

        let mut budget_by_year: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
        for row in &train {
            if let Some(b) = row.budget {
                budget_by_year.entry(row.release_year).or_default().push(b);
            }
        }
        for v in budget_by_year.values_mut() {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        let budget_global_median =
            median(&mut train.iter().filter_map(|r| r.budget).collect::<Vec<f64>>());

        let mut impute_medians = BTreeMap::new();
        for &col in IMPUTED_COLUMNS {
            let m = median(&mut train.iter().map(|r| raw_column(r, col)).collect()).unwrap_or(0.0);
            impute_medians.insert(col.to_string(), m);
        }
        let runtime_median =
            median(&mut train.iter().filter_map(|r| r.runtime).collect()).unwrap_or(100.0);
        impute_medians.insert("runtime_minutes".into(), runtime_median);

        let mut partial = Featurizer {
            budget_by_year,
            budget_global_median,
            budget_bounds: (f64::NEG_INFINITY, f64::INFINITY),
            opening_bounds: (f64::NEG_INFINITY, f64::INFINITY),
            impute_medians,
            yj_lambdas: BTreeMap::new(),
            pca: PcaModel {
                mean: vec![],
                scale: vec![],
                components: vec![],
                explained_variance_ratio: vec![],
            },
            standardize: BTreeMap::new(),
            target_mean: 0.0,
            target_std: 1.0,
            lang_vocab: top_values(&train, |r| &r.language, 3),
            country_vocab: top_values(&train, |r| &r.country, 3),
        };

        // Winsorization bounds for the financial columns (budgets after
        // imputation so the bounds exist even with gaps).
        let budgets: Vec<f64> = train
            .iter()
            .map(|r| partial.imputed_budget(r))
            .collect::<Result<_>>()?;
        partial.budget_bounds = winsorize_bounds(&budgets, WINSOR_P.0, WINSOR_P.1)?;
        let openings: Vec<f64> = train.iter().filter_map(|r| r.opening_weekend).collect();
        if !openings.is_empty() {
            partial.opening_bounds = winsorize_bounds(&openings, WINSOR_P.0, WINSOR_P.1)?;
        }

        // Yeo-Johnson exponents on the imputed ratio columns; degenerate
        // columns keep the identity.
        for &col in YJ_FEATURES {
            let values: Vec<f64> = train.iter().map(|r| partial.imputed(r, col)).collect();
            let lambda = match fit_yeo_johnson(&values, col) {
                Ok(p) => p.lambda_yj,
                Err(Error::DegenerateColumn(_)) | Err(Error::ContractViolation(_)) => 1.0,
                Err(e) => return Err(e),
            };
            partial.yj_lambdas.insert(col.to_string(), lambda);
        }

        // PCA over the diffusion parameters.
        let pca_matrix: Vec<Vec<f64>> = train.iter().map(|r| partial.pca_input(r)).collect();
        partial.pca = pca_fit(&pca_matrix, 2)?;

        // Target scaler: z-scored log1p of the winsorized opening weekend.
        let target_logs: Vec<f64> = train
            .iter()
            .filter_map(|r| r.opening_weekend)
            .map(|o| {
                o.clamp(partial.opening_bounds.0, partial.opening_bounds.1)
                    .ln_1p()
            })
            .collect();
        if !target_logs.is_empty() {
            let n = target_logs.len() as f64;
            partial.target_mean = target_logs.iter().sum::<f64>() / n;
            let var = target_logs
                .iter()
                .map(|v| (v - partial.target_mean).powi(2))
                .sum::<f64>()
                / n;
            partial.target_std = var.sqrt().max(1e-12);
        }

        // Standardization moments over the transformed training values.
        let full = FeatureSchema::full();
        for &name in STANDARDIZED_FEATURES {
            debug_assert!(full.names().contains(&name));
            let values: Vec<f64> = train
                .iter()
                .map(|r| partial.feature_value(r, name))
                .collect::<Result<_>>()?;
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            partial
                .standardize
                .insert(name.to_string(), (mean, var.sqrt().max(1e-12)));
        }
        Ok(partial)
    }

    /// Budget after the ±2-release-year median imputation.
    pub fn imputed_budget(&self, row: &RawFeatures) -> Result<f64> {
        if let Some(b) = row.budget {
            return Ok(b);
        }
        let mut pool: Vec<f64> = self
            .budget_by_year
            .range(row.release_year - 2..=row.release_year + 2)
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        if let Some(m) = median(&mut pool) {
            return Ok(m);
        }
        self.budget_global_median.ok_or_else(|| {
            Error::MissingBudget(format!(
                "no training budgets near release year {}",
                row.release_year
            ))
        })
    }

    fn imputed(&self, row: &RawFeatures, col: &str) -> f64 {
        let v = match col {
            "runtime_minutes" => row.runtime.unwrap_or(f64::NAN),
            other => raw_column(row, other),
        };
        if v.is_finite() {
            v
        } else {
            self.impute_medians[col]
        }
    }

    fn pca_input(&self, row: &RawFeatures) -> Vec<f64> {
        vec![
            self.imputed(row, "beta"),
            self.imputed(row, "gamma"),
            self.imputed(row, "peak_infected"),
            self.imputed(row, "time_to_peak"),
        ]
    }

    /// One feature value before standardization.
    fn feature_value(&self, row: &RawFeatures, name: &str) -> Result<f64> {
        let v = match name {
            "beta" | "gamma" => self.imputed(row, name),
            "basic_reproduction_number" | "effective_contact_rate" | "i0_s0_ratio" => {
                yeo_johnson(self.imputed(row, name), self.yj_lambdas[name])
            }
            "sir_pc1" => pca_project(&self.pca, &self.pca_input(row))?[0],
            "sir_pc2" => pca_project(&self.pca, &self.pca_input(row))?[1],
            "sentiment_decay_7d"
            | "sentiment_mean"
            | "sentiment_std"
            | "sentiment_positive_share" => self.imputed(row, name),
            "log_review_count" => row.review_count.max(0.0).ln_1p(),
            "event_indicator" => event_indicator(row.release_year),
            "log_budget" => {
                let b = self.imputed_budget(row)?;
                b.clamp(self.budget_bounds.0, self.budget_bounds.1).ln_1p()
            }
            "runtime_minutes" => self.imputed(row, "runtime_minutes"),
            "release_month_sin" => {
                (2.0 * std::f64::consts::PI * row.release_month as f64 / 12.0).sin()
            }
            "release_month_cos" => {
                (2.0 * std::f64::consts::PI * row.release_month as f64 / 12.0).cos()
            }
            "release_year_norm" => {
                (row.release_year - crate::ingest::YEAR_RANGE.0) as f64
                    / (crate::ingest::YEAR_RANGE.1 - crate::ingest::YEAR_RANGE.0) as f64
            }
            "lang_top1" => f64::from(self.lang_vocab.first() == Some(&row.language)),
            "lang_top2" => f64::from(self.lang_vocab.get(1) == Some(&row.language)),
            "lang_top3" => f64::from(self.lang_vocab.get(2) == Some(&row.language)),
            "lang_other" => f64::from(!self.lang_vocab.contains(&row.language)),
            "country_top1" => f64::from(self.country_vocab.first() == Some(&row.country)),
            "country_top2" => f64::from(self.country_vocab.get(1) == Some(&row.country)),
            "country_top3" => f64::from(self.country_vocab.get(2) == Some(&row.country)),
            "country_other" => f64::from(!self.country_vocab.contains(&row.country)),
            "production_company_count" => row.production_company_count,
            "director_prior_count" => row.director_prior_count,
            "writer_count" => row.writer_count,
            other => return Err(Error::ContractViolation(format!("unknown feature {other}"))),
        };
        Ok(v)
    }

    /// Label and scaled regression target for one row.
    pub fn label_and_target(&self, row: &RawFeatures) -> Result<(u8, f64)> {
        let opening = row.opening_weekend.ok_or_else(|| {
            Error::ContractViolation(format!("{}: no opening weekend, cannot label", row.title))
        })?;
        let budget = self.imputed_budget(row)?;
        let label = compute_label(opening, budget)?;
        let scaled = (opening
            .clamp(self.opening_bounds.0, self.opening_bounds.1)
            .ln_1p()
            - self.target_mean)
            / self.target_std;
        Ok((label, scaled))
    }

    /// Assembles the feature vector for `schema` (the full schema or a
    /// masked one); values appear in schema order.
    pub fn assemble(&self, row: &RawFeatures, schema: &FeatureSchema) -> Result<FeatureVector> {
        let (label_success, target_revenue_scaled) = self.label_and_target(row)?;
        let mut values = Vec::with_capacity(schema.len());
        for (name, _) in &schema.entries {
            let raw = self.feature_value(row, name)?;
            let v = match self.standardize.get(name) {
                Some((mean, std)) => (raw - mean) / std,
                None => raw,
            };
            if !v.is_finite() {
                return Err(Error::ContractViolation(format!(
                    "feature {name} is non-finite after imputation for {}",
                    row.title
                )));
            }
            values.push(v);
        }
        Ok(FeatureVector {
            values,
            label_success,
            target_revenue_scaled,
        })
    }
}
