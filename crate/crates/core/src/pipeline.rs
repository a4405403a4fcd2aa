//! End-to-end orchestration: reviews through sentiment extraction and
//! diffusion fitting into raw feature rows, then train-only featurization
//! and the persisted artifact formats used by the CLI.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::{build_dataset, SplitPlan};
use crate::features::{FeatureSchema, Featurizer, RawFeatures};
use crate::ingest::{MovieRecord, RejectedRow, ReviewRecord};
use crate::mtl::Dataset;
use crate::sentiment::{
    aggregate_temporal, AggregationConfig, Extractor, Review, SentimentVector,
    POSITIVE_SCORE_THRESHOLD,
};
use crate::sir::{
    derived_features, estimate_initial_conditions, estimate_rates, simulate, RateEstimate,
    ReviewTimeline, SirState, DEFAULT_DT, DEFAULT_HORIZON, FIRST_WEEK_DAYS,
};

/// Stage parameters threaded through a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub aggregation: AggregationConfig,
    pub sir_dt: f64,
    pub sir_horizon: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            aggregation: AggregationConfig::default(),
            sir_dt: DEFAULT_DT,
            sir_horizon: DEFAULT_HORIZON,
        }
    }
}

/// One extracted review: identifiers plus the sentiment object (its keys
/// serialize verbatim at the top level).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentRecord {
    pub review_row: usize,
    pub movie_title: String,
    pub review_author: String,
    pub review_date: NaiveDate,
    #[serde(flatten)]
    pub vector: SentimentVector,
}

/// Builds the in-memory review representation used by extraction and
/// aggregation. Pre-release days clamp to zero.
pub fn to_review(record: &ReviewRecord, release: NaiveDate) -> Review {
    Review {
        author_id: record.review_author.clone(),
        date: record.review_date,
        days_since_release: (record.review_date - release).num_days().max(0) as f64,
        title: record.title.clone(),
        body: record.body.clone(),
        upvotes: record.upvotes,
        total_votes: record.total_votes,
        user_rating: record.rating,
    }
}

fn release_dates(movies: &[MovieRecord]) -> HashMap<&str, NaiveDate> {
    movies
        .iter()
        .filter_map(|m| m.release_date().map(|d| (m.title.as_str(), d)))
        .collect()
}

/// Extraction output: one record per successfully extracted review, plus
/// the reviews that could not be processed.
#[derive(Debug, Clone)]
pub struct ExtractionOutcome {
    pub records: Vec<SentimentRecord>,
    pub skipped: Vec<RejectedRow>,
}

/// Runs the extractor over every review. Reviews carrying a pre-computed
/// `Sentiment_Score` bypass the extractor; reviews of unknown movies are
/// skipped with a reason.
pub fn extract_sentiments(
    movies: &[MovieRecord],
    reviews: &[ReviewRecord],
    extractor: &dyn Extractor,
) -> Result<ExtractionOutcome> {
    let by_title: HashMap<&str, &MovieRecord> =
        movies.iter().map(|m| (m.title.as_str(), m)).collect();
    let releases = release_dates(movies);
    let mut records = Vec::with_capacity(reviews.len());
    let mut skipped = Vec::new();
    for (row, review_record) in reviews.iter().enumerate() {
        let Some(movie) = by_title.get(review_record.movie_title.as_str()) else {
            skipped.push(RejectedRow {
                row: row + 1,
                reason: format!("unknown movie {:?}", review_record.movie_title),
            });
            continue;
        };
        let Some(&release) = releases.get(review_record.movie_title.as_str()) else {
            skipped.push(RejectedRow {
                row: row + 1,
                reason: format!(
                    "movie {:?} has no valid release date",
                    review_record.movie_title
                ),
            });
            continue;
        };
        let review = to_review(review_record, release);
        let vector = match review_record.sentiment_score {
            Some(score) => precomputed_vector(score),
            None => match extractor.extract(movie, &review) {
                Ok(v) => v,
                Err(Error::MalformedResponse(reason)) => {
                    skipped.push(RejectedRow {
                        row: row + 1,
                        reason: format!("unusable extractor response: {reason}"),
                    });
                    continue;
                }
                Err(e) => return Err(e),
            },
        };
        records.push(SentimentRecord {
            review_row: row,
            movie_title: review_record.movie_title.clone(),
            review_author: review_record.review_author.clone(),
            review_date: review_record.review_date,
            vector,
        });
    }
    Ok(ExtractionOutcome { records, skipped })
}

fn precomputed_vector(score: f64) -> SentimentVector {
    SentimentVector {
        sentiment_score: score.clamp(1.0, 10.0),
        emotion_keywords: vec![String::new(); 5],
        primary_emotion: "precomputed".into(),
        review_focus: "precomputed".into(),
        bias_analysis: "precomputed".into(),
        summary: "precomputed score column".into(),
        score_clamped: !(1.0..=10.0).contains(&score),
    }
}

/// Per-movie diffusion estimates, reported alongside the feature rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MovieDynamics {
    pub title: String,
    pub initial: SirState,
    pub rates: RateEstimate,
}

/// Everything the analysis stage produced.
#[derive(Debug, Clone)]
pub struct AnalysisOutput {
    pub rows: Vec<RawFeatures>,
    pub dynamics: Vec<MovieDynamics>,
    /// Per-movie analysis problems (no reviews, inconsistent timelines);
    /// the affected feature block is NaN and imputed downstream.
    pub warnings: Vec<String>,
}

/// Assembles raw feature rows for every movie from its reviews and
/// extracted sentiment.
pub fn analyze_movies(
    movies: &[MovieRecord],
    reviews: &[ReviewRecord],
    sentiments: &[SentimentRecord],
    config: &PipelineConfig,
) -> Result<AnalysisOutput> {
    let releases = release_dates(movies);
    // Sentiment records point at review rows; group both by movie.
    let mut per_movie: HashMap<&str, Vec<(&SentimentRecord, &ReviewRecord)>> = HashMap::new();
    for record in sentiments {
        let review = reviews.get(record.review_row).ok_or_else(|| {
            Error::ContractViolation(format!(
                "sentiment record points at review row {} of {}",
                record.review_row,
                reviews.len()
            ))
        })?;
        per_movie
            .entry(record.movie_title.as_str())
            .or_default()
            .push((record, review));
    }

    // Director history from metadata only: how many earlier films the
    // movie's director has in this corpus.
    let mut director_dates: BTreeMap<&str, Vec<NaiveDate>> = BTreeMap::new();
    for m in movies {
        if let Some(d) = m.release_date() {
            director_dates
                .entry(m.director.as_str())
                .or_default()
                .push(d);
        }
    }

    let mut rows = Vec::with_capacity(movies.len());
    let mut dynamics = Vec::new();
    let mut warnings = Vec::new();
    for movie in movies {
        let Some(&release) = releases.get(movie.title.as_str()) else {
            warnings.push(format!("{}: invalid release date", movie.title));
            rows.push(base_row(movie, f64::NAN, &[]));
            continue;
        };
        let pairs = per_movie.remove(movie.title.as_str()).unwrap_or_default();
        let mut review_objects: Vec<(SentimentVector, Review)> = pairs
            .iter()
            .map(|(s, r)| (s.vector.clone(), to_review(r, release)))
            .collect();
        review_objects.sort_by(|a, b| {
            a.1.days_since_release
                .partial_cmp(&b.1.days_since_release)
                .unwrap()
                .then(a.1.author_id.cmp(&b.1.author_id))
        });

        let director_prior = director_dates
            .get(movie.director.as_str())
            .map(|dates| dates.iter().filter(|&&d| d < release).count())
            .unwrap_or(0) as f64;

        let mut row = base_row(movie, director_prior, &review_objects);

        // Diffusion block.
        let comment_log: Vec<(String, f64, bool)> = review_objects
            .iter()
            .map(|(v, r)| {
                (
                    r.author_id.clone(),
                    r.days_since_release,
                    v.sentiment_score < POSITIVE_SCORE_THRESHOLD,
                )
            })
            .collect();
        match fit_dynamics(&comment_log, config) {
            Ok((initial, rates, features)) => {
                row.beta = rates.params.beta;
                row.gamma = rates.params.gamma;
                row.basic_reproduction_number = features.basic_reproduction_number;
                row.effective_contact_rate = features.effective_contact_rate;
                row.i0_s0_ratio = features.i0_s0_ratio.unwrap_or(f64::NAN);
                row.r0_s0_ratio = features.r0_s0_ratio.unwrap_or(f64::NAN);
                row.peak_infected = features.peak_infected;
                row.time_to_peak = features.time_to_peak;
                dynamics.push(MovieDynamics {
                    title: movie.title.clone(),
                    initial,
                    rates,
                });
            }
            Err(e) => warnings.push(format!("{}: diffusion fit skipped: {e}", movie.title)),
        }

        // Decayed aggregate anchored at day 7 uses first-week reviews; the
        // plain score statistics cover the movie's whole review corpus.
        let first_week: Vec<(SentimentVector, Review)> = review_objects
            .iter()
            .filter(|(_, r)| r.days_since_release <= FIRST_WEEK_DAYS)
            .cloned()
            .collect();
        let early = aggregate_temporal(&first_week, FIRST_WEEK_DAYS, &config.aggregation)?;
        row.sentiment_decay_7d = if early.review_count == 0 {
            f64::NAN
        } else {
            early.s_t
        };
        let last_day = review_objects
            .iter()
            .map(|(_, r)| r.days_since_release)
            .fold(0.0, f64::max);
        let overall = aggregate_temporal(&review_objects, last_day, &config.aggregation)?;
        row.sentiment_mean = overall.mean_score;
        row.sentiment_std = overall.score_std;
        row.sentiment_positive_share = overall.positive_share;
        rows.push(row);
    }
    Ok(AnalysisOutput {
        rows,
        dynamics,
        warnings,
    })
}

fn base_row(
    movie: &MovieRecord,
    director_prior: f64,
    reviews: &[(SentimentVector, Review)],
) -> RawFeatures {
    RawFeatures {
        title: movie.title.clone(),
        release_year: movie.release_year,
        release_month: movie.release_month,
        budget: movie.budget,
        opening_weekend: movie.opening_weekend,
        runtime: movie.runtime,
        language: movie.language.clone(),
        country: movie.country.clone(),
        production_company_count: movie.production_companies.len() as f64,
        director_prior_count: director_prior,
        writer_count: movie.writers.len() as f64,
        beta: f64::NAN,
        gamma: f64::NAN,
        basic_reproduction_number: f64::NAN,
        effective_contact_rate: f64::NAN,
        i0_s0_ratio: f64::NAN,
        r0_s0_ratio: f64::NAN,
        peak_infected: f64::NAN,
        time_to_peak: f64::NAN,
        sentiment_decay_7d: f64::NAN,
        sentiment_mean: f64::NAN,
        sentiment_std: f64::NAN,
        sentiment_positive_share: f64::NAN,
        review_count: reviews.len() as f64,
    }
}

fn fit_dynamics(
    comment_log: &[(String, f64, bool)],
    config: &PipelineConfig,
) -> Result<(SirState, RateEstimate, crate::sir::SirFeatures)> {
    let timeline = ReviewTimeline::from_comment_log(comment_log)?;
    let initial = estimate_initial_conditions(&timeline)?;
    let rates = estimate_rates(&timeline)?;
    let trajectory = simulate(&initial, &rates.params, config.sir_dt, config.sir_horizon)?;
    let features = derived_features(&initial, &rates.params, &trajectory);
    Ok((initial, rates, features))
}

/// Featurization result: the fitted transform, the split, and the
/// full-width dataset over all rows (transformed with train-fitted state).
#[derive(Debug, Clone)]
pub struct FeaturizedData {
    pub featurizer: Featurizer,
    pub schema: FeatureSchema,
    pub split: SplitPlan,
    pub dataset: Dataset,
    pub titles: Vec<String>,
}

/// Stratified 80:20 split, train-only preprocessing fit, full transform.
///
/// Labels are computed first with budgets pooled across all rows (the
/// label is ground truth, not a fitted feature); every other statistic is
/// fitted on the training rows only.
pub fn featurize(rows: &[RawFeatures], split_seed: u64) -> Result<FeaturizedData> {
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let all: Vec<usize> = (0..rows.len()).collect();
    let label_helper = Featurizer::fit(rows, &all)?;
    let labels: Vec<f64> = rows
        .iter()
        .map(|r| label_helper.label_and_target(r).map(|(l, _)| f64::from(l)))
        .collect::<Result<_>>()?;
    let split = crate::eval::stratified_split(&labels, 0.8, split_seed)?;
    let featurizer = Featurizer::fit(rows, &split.train)?;
    let schema = FeatureSchema::full();
    let dataset = build_dataset(rows, &all, &featurizer, &schema)?;
    Ok(FeaturizedData {
        featurizer,
        schema,
        split,
        dataset,
        titles: rows.iter().map(|r| r.title.clone()).collect(),
    })
}

// ---------------------------------------------------------------------
// Artifact formats
// ---------------------------------------------------------------------

/// One sentiment record per line, keys verbatim plus identifiers.
pub fn write_sentiment_jsonl(path: &Path, records: &[SentimentRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_sentiment_jsonl(path: &Path) -> Result<Vec<SentimentRecord>> {
    let raw = std::fs::read_to_string(path)?;
    raw.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

pub fn write_raw_features_csv(path: &Path, rows: &[RawFeatures]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_raw_features_csv(path: &Path) -> Result<Vec<RawFeatures>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Feature matrix CSV: title, the schema columns, label, scaled target,
/// and the split assignment.
pub fn write_features_csv(path: &Path, data: &FeaturizedData) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = vec!["title".into()];
    header.extend(data.schema.names().iter().map(|s| s.to_string()));
    header.push("label_success".into());
    header.push("target_revenue_scaled".into());
    header.push("split".into());
    writer.write_record(&header)?;
    let test_set: std::collections::HashSet<usize> = data.split.test.iter().copied().collect();
    for (i, x) in data.dataset.xs.iter().enumerate() {
        let mut record: Vec<String> = vec![data.titles[i].clone()];
        record.extend(x.iter().map(|v| v.to_string()));
        record.push((data.dataset.labels[i] as u8).to_string());
        record.push(data.dataset.targets[i].to_string());
        record.push(
            if test_set.contains(&i) {
                "test"
            } else {
                "train"
            }
            .to_string(),
        );
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Parsed feature matrix plus the persisted split.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub titles: Vec<String>,
    pub dataset: Dataset,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn read_features_csv(path: &Path, schema: &FeatureSchema) -> Result<FeatureMatrix> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let expected: Vec<String> = {
        let mut h: Vec<String> = vec!["title".into()];
        h.extend(schema.names().iter().map(|s| s.to_string()));
        h.push("label_success".into());
        h.push("target_revenue_scaled".into());
        h.push("split".into());
        h
    };
    let found: Vec<String> = headers.iter().map(|s| s.to_string()).collect();
    if found != expected {
        let missing: Vec<String> = expected
            .iter()
            .filter(|c| !found.contains(c))
            .cloned()
            .collect();
        let extra: Vec<String> = found
            .iter()
            .filter(|c| !expected.contains(c))
            .cloned()
            .collect();
        return Err(Error::SchemaMismatch { missing, extra });
    }
    let width = schema.len();
    let mut out = FeatureMatrix {
        titles: Vec::new(),
        dataset: Dataset::default(),
        train: Vec::new(),
        test: Vec::new(),
    };
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        out.titles.push(record[0].to_string());
        let mut x = Vec::with_capacity(width);
        for j in 0..width {
            x.push(record[1 + j].parse::<f64>().map_err(|e| {
                Error::ContractViolation(format!("row {}: bad feature value: {e}", i + 1))
            })?);
        }
        out.dataset.xs.push(x);
        out.dataset.labels.push(
            record[1 + width]
                .parse::<f64>()
                .map_err(|e| Error::ContractViolation(format!("row {}: bad label: {e}", i + 1)))?,
        );
        out.dataset.targets.push(
            record[2 + width]
                .parse::<f64>()
                .map_err(|e| Error::ContractViolation(format!("row {}: bad target: {e}", i + 1)))?,
        );
        match &record[3 + width] {
            "train" => out.train.push(i),
            "test" => out.test.push(i),
            other => {
                return Err(Error::ContractViolation(format!(
                    "row {}: unknown split {other:?}",
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{generate_synthetic, SynthConfig};
    use crate::sentiment::StubExtractor;

    fn small_corpus() -> (Vec<MovieRecord>, Vec<ReviewRecord>) {
        generate_synthetic(60, (8, 20), 5, 1.0, &SynthConfig::default()).unwrap()
    }

    #[test]
    fn extraction_covers_every_review_with_stub() {
        let (movies, reviews) = small_corpus();
        let outcome = extract_sentiments(&movies, &reviews, &StubExtractor).unwrap();
        assert_eq!(outcome.records.len(), reviews.len());
        assert!(outcome.skipped.is_empty());
    }

    #[test]
    fn unknown_movies_are_skipped_with_reason() {
        let (movies, mut reviews) = small_corpus();
        reviews[0].movie_title = "Not A Film".into();
        let outcome = extract_sentiments(&movies, &reviews, &StubExtractor).unwrap();
        assert_eq!(outcome.records.len(), reviews.len() - 1);
        assert_eq!(outcome.skipped.len(), 1);
        assert!(outcome.skipped[0].reason.contains("unknown movie"));
    }

    #[test]
    fn precomputed_scores_bypass_extraction() {
        let (movies, mut reviews) = small_corpus();
        reviews[3].sentiment_score = Some(12.0);
        let outcome = extract_sentiments(&movies, &reviews, &StubExtractor).unwrap();
        let record = outcome.records.iter().find(|r| r.review_row == 3).unwrap();
        assert_eq!(record.vector.sentiment_score, 10.0);
        assert!(record.vector.score_clamped);
        assert_eq!(record.vector.primary_emotion, "precomputed");
    }

    #[test]
    fn analysis_produces_finite_featurizable_rows() {
        let (movies, reviews) = small_corpus();
        let outcome = extract_sentiments(&movies, &reviews, &StubExtractor).unwrap();
        let analysis = analyze_movies(
            &movies,
            &reviews,
            &outcome.records,
            &PipelineConfig::default(),
        )
        .unwrap();
        assert_eq!(analysis.rows.len(), movies.len());
        assert_eq!(analysis.dynamics.len(), movies.len());
        assert!(analysis.warnings.is_empty(), "{:?}", analysis.warnings);

        let data = featurize(&analysis.rows, 11).unwrap();
        assert_eq!(data.dataset.width(), 29);
        assert_eq!(data.dataset.len(), movies.len());
        assert!(data
            .dataset
            .xs
            .iter()
            .all(|x| x.iter().all(|v| v.is_finite())));
        // Split covers everything exactly once.
        assert_eq!(data.split.train.len() + data.split.test.len(), movies.len());
    }

    #[test]
    fn movies_without_reviews_get_imputable_rows() {
        let (mut movies, reviews) = small_corpus();
        movies.push(MovieRecord {
            title: "Reviewless".into(),
            director: "Director 000".into(),
            writers: vec!["W".into()],
            gross_worldwide: Some(1000.0),
            opening_weekend: Some(900.0),
            budget: Some(1500.0),
            language: "English".into(),
            country: "USA".into(),
            filming_locations: "LA".into(),
            production_companies: vec!["S".into()],
            release_day: 2,
            release_month: 3,
            release_year: 2015,
            runtime: Some(100.0),
        });
        let outcome = extract_sentiments(&movies, &reviews, &StubExtractor).unwrap();
        let analysis = analyze_movies(
            &movies,
            &reviews,
            &outcome.records,
            &PipelineConfig::default(),
        )
        .unwrap();
        let row = analysis.rows.last().unwrap();
        assert!(row.beta.is_nan());
        assert_eq!(row.review_count, 0.0);
        assert_eq!(analysis.warnings.len(), 1);

        // Imputation still yields a finite vector.
        let data = featurize(&analysis.rows, 3).unwrap();
        assert!(data
            .dataset
            .xs
            .last()
            .unwrap()
            .iter()
            .all(|v| v.is_finite()));
    }

    #[test]
    fn featurizer_state_comes_from_train_rows_only() {
        let (movies, reviews) = small_corpus();
        let outcome = extract_sentiments(&movies, &reviews, &StubExtractor).unwrap();
        let analysis = analyze_movies(
            &movies,
            &reviews,
            &outcome.records,
            &PipelineConfig::default(),
        )
        .unwrap();
        let data = featurize(&analysis.rows, 23).unwrap();
        let train_only = Featurizer::fit(&analysis.rows, &data.split.train).unwrap();
        assert_eq!(
            serde_json::to_string(&data.featurizer).unwrap(),
            serde_json::to_string(&train_only).unwrap(),
            "pipeline featurizer must equal a fit on the training rows alone"
        );
        // And it must differ from a fit that saw the test rows.
        let all: Vec<usize> = (0..analysis.rows.len()).collect();
        let leaky = Featurizer::fit(&analysis.rows, &all).unwrap();
        assert_ne!(
            serde_json::to_string(&data.featurizer).unwrap(),
            serde_json::to_string(&leaky).unwrap()
        );
    }

    #[test]
    fn sentiment_jsonl_round_trips_with_verbatim_keys() {
        let (movies, reviews) = small_corpus();
        let outcome = extract_sentiments(&movies, &reviews[..5], &StubExtractor).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sentiment.jsonl");
        write_sentiment_jsonl(&path, &outcome.records).unwrap();

        let raw = std::fs::read_to_string(&path).unwrap();
        let first: serde_json::Value = serde_json::from_str(raw.lines().next().unwrap()).unwrap();
        for key in [
            "sentiment_score",
            "emotion_keywords",
            "primary_emotion",
            "review_focus",
            "bias_analysis",
            "summary",
            "review_row",
            "movie_title",
            "review_date",
        ] {
            assert!(first.get(key).is_some(), "missing key {key}");
        }
        assert_eq!(read_sentiment_jsonl(&path).unwrap(), outcome.records);
    }

    #[test]
    fn raw_features_csv_round_trips_including_nans() {
        let (movies, reviews) = small_corpus();
        let outcome = extract_sentiments(&movies, &reviews, &StubExtractor).unwrap();
        let mut analysis = analyze_movies(
            &movies,
            &reviews,
            &outcome.records,
            &PipelineConfig::default(),
        )
        .unwrap();
        analysis.rows[2].i0_s0_ratio = f64::NAN;
        analysis.rows[4].budget = None;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features_raw.csv");
        write_raw_features_csv(&path, &analysis.rows).unwrap();
        let back = read_raw_features_csv(&path).unwrap();
        assert_eq!(back.len(), analysis.rows.len());
        assert!(back[2].i0_s0_ratio.is_nan());
        assert_eq!(back[4].budget, None);
        assert_eq!(back[0], analysis.rows[0]);
    }

    #[test]
    fn features_csv_round_trips_and_validates_header() {
        let (movies, reviews) = small_corpus();
        let outcome = extract_sentiments(&movies, &reviews, &StubExtractor).unwrap();
        let analysis = analyze_movies(
            &movies,
            &reviews,
            &outcome.records,
            &PipelineConfig::default(),
        )
        .unwrap();
        let data = featurize(&analysis.rows, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.csv");
        write_features_csv(&path, &data).unwrap();
        let matrix = read_features_csv(&path, &data.schema).unwrap();
        assert_eq!(matrix.dataset.len(), data.dataset.len());
        assert_eq!(matrix.train.len(), data.split.train.len());
        assert_eq!(matrix.dataset.xs[0], data.dataset.xs[0]);

        // A wrong schema is a schema mismatch.
        let masked =
            FeatureSchema::masked(&[crate::features::FeatureGroup::Sir].into_iter().collect())
                .unwrap();
        assert!(matches!(
            read_features_csv(&path, &masked),
            Err(Error::SchemaMismatch { .. })
        ));
    }
}
