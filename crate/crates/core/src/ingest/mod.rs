//! CSV schemas for movies and reviews, permissive field parsing, author
//! anonymization, resumable pipeline state, and the synthetic generator.

mod state;
mod synth;

pub use state::{acquire_lock, PipelineState, StageStatus};
pub use synth::{generate_synthetic, SynthConfig};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::error::{Error, Result};

/// The paper-scope release-year window.
pub const YEAR_RANGE: (i32, i32) = (2004, 2024);
/// Reviews dated up to this many days before release are tolerated.
pub const PRE_RELEASE_TOLERANCE_DAYS: i64 = 30;

/// One movie row. Optional numerics may be absent in the source data and
/// are imputed downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovieRecord {
    pub title: String,
    pub director: String,
    pub writers: Vec<String>,
    pub gross_worldwide: Option<f64>,
    pub opening_weekend: Option<f64>,
    pub budget: Option<f64>,
    pub language: String,
    pub country: String,
    pub filming_locations: String,
    pub production_companies: Vec<String>,
    pub release_day: u32,
    pub release_month: u32,
    pub release_year: i32,
    pub runtime: Option<f64>,
}

impl MovieRecord {
    pub fn release_date(&self) -> Option<NaiveDate> {
        NaiveDate::from_ymd_opt(self.release_year, self.release_month, self.release_day)
    }
}

/// One review row keyed by movie title.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub movie_title: String,
    pub review_author: String,
    pub review_date: NaiveDate,
    pub title: String,
    pub body: String,
    pub upvotes: u32,
    pub total_votes: u32,
    pub rating: Option<u8>,
    /// Pre-computed score column; when present, extraction is bypassed.
    pub sentiment_score: Option<f64>,
}

/// A row that failed validation, kept for the rejects file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based data row number (header excluded).
    pub row: usize,
    pub reason: String,
}

/// Load result: typed records plus every rejected row with its reason.
#[derive(Debug, Clone)]
pub struct LoadOutcome<T> {
    pub records: Vec<T>,
    pub rejects: Vec<RejectedRow>,
}

const MOVIE_COLUMNS: &[&str] = &[
    "title",
    "director",
    "writers",
    "gross_worldwide",
    "opening_weekend",
    "budget",
    "language",
    "country",
    "filming_locations",
    "production_companies",
    "release_day",
    "release_month",
    "release_year",
    "runtime",
];
// Computed columns tolerated in source files but never ingested.
const MOVIE_OPTIONAL_COLUMNS: &[&str] = &["roi", "successful_movie"];

const REVIEW_COLUMNS: &[&str] = &[
    "movie_title",
    "review_author",
    "review_date",
    "review_title",
    "review_body",
    "upvotes",
    "total_votes",
    "rating",
];
const REVIEW_OPTIONAL_COLUMNS: &[&str] = &["sentiment_score", "emotion_keywords"];

fn check_header(
    headers: &csv::StringRecord,
    required: &[&str],
    optional: &[&str],
) -> Result<std::collections::HashMap<String, usize>> {
    let mut index = std::collections::HashMap::new();
    let mut extra = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        let key = h.trim().to_lowercase();
        if required.contains(&key.as_str()) || optional.contains(&key.as_str()) {
            index.insert(key, i);
        } else {
            extra.push(h.trim().to_string());
        }
    }
    let missing: Vec<String> = required
        .iter()
        .filter(|c| !index.contains_key(**c))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::SchemaMismatch { missing, extra });
    }
    Ok(index)
}

/// Permissive currency parser: optional `$`, thousands separators, and
/// N/A-style blanks map to `None`.
pub fn parse_currency(raw: &str) -> std::result::Result<Option<f64>, String> {
    let cleaned: String = raw
        .trim()
        .trim_start_matches('$')
        .chars()
        .filter(|c| *c != ',')
        .collect();
    if cleaned.is_empty()
        || cleaned.eq_ignore_ascii_case("n/a")
        || cleaned.eq_ignore_ascii_case("na")
    {
        return Ok(None);
    }
    cleaned
        .parse::<f64>()
        .map(Some)
        .map_err(|_| format!("unparseable numeric value {raw:?}"))
}

fn split_list(raw: &str) -> Vec<String> {
    raw.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Loads the movies CSV, validating the header against the expected schema
/// (case-insensitive) and collecting malformed rows instead of dropping
/// them.
pub fn load_movies(path: &Path) -> Result<LoadOutcome<MovieRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let index = check_header(reader.headers()?, MOVIE_COLUMNS, MOVIE_OPTIONAL_COLUMNS)?;
    let get = |rec: &csv::StringRecord, key: &str| -> String {
        index
            .get(key)
            .and_then(|&i| rec.get(i))
            .unwrap_or_default()
            .to_string()
    };

    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let row_number = row_idx + 1;
        let reject = |reason: String, rejects: &mut Vec<RejectedRow>| {
            rejects.push(RejectedRow {
                row: row_number,
                reason,
            });
        };
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                reject(format!("unreadable row: {e}"), &mut rejects);
                continue;
            }
        };
        let parsed: std::result::Result<MovieRecord, String> = (|| {
            let title = get(&row, "title");
            if title.trim().is_empty() {
                return Err("empty title".into());
            }
            let year: i32 = get(&row, "release_year")
                .trim()
                .parse()
                .map_err(|_| "unparseable release_year".to_string())?;
            if year < YEAR_RANGE.0 || year > YEAR_RANGE.1 {
                return Err(format!(
                    "release_year {year} outside [{}, {}]",
                    YEAR_RANGE.0, YEAR_RANGE.1
                ));
            }
            let month: u32 = get(&row, "release_month")
                .trim()
                .parse()
                .map_err(|_| "unparseable release_month".to_string())?;
            let day: u32 = get(&row, "release_day")
                .trim()
                .parse()
                .map_err(|_| "unparseable release_day".to_string())?;
            if NaiveDate::from_ymd_opt(year, month, day).is_none() {
                return Err(format!("invalid release date {year}-{month}-{day}"));
            }
            let budget = parse_currency(&get(&row, "budget"))?;
            let opening = parse_currency(&get(&row, "opening_weekend"))?;
            let gross = parse_currency(&get(&row, "gross_worldwide"))?;
            for (name, v) in [
                ("budget", budget),
                ("opening_weekend", opening),
                ("gross", gross),
            ] {
                if let Some(v) = v {
                    if v < 0.0 {
                        return Err(format!("negative {name}"));
                    }
                }
            }
            let runtime = parse_currency(&get(&row, "runtime"))?;
            if let Some(r) = runtime {
                if r <= 0.0 {
                    return Err("non-positive runtime".into());
                }
            }
            Ok(MovieRecord {
                title,
                director: get(&row, "director"),
                writers: split_list(&get(&row, "writers")),
                gross_worldwide: gross,
                opening_weekend: opening,
                budget,
                language: get(&row, "language"),
                country: get(&row, "country"),
                filming_locations: get(&row, "filming_locations"),
                production_companies: split_list(&get(&row, "production_companies")),
                release_day: day,
                release_month: month,
                release_year: year,
                runtime,
            })
        })();
        match parsed {
            Ok(record) => records.push(record),
            Err(reason) => reject(reason, &mut rejects),
        }
    }
    Ok(LoadOutcome { records, rejects })
}

/// Loads the reviews CSV. Author identifiers are anonymized with the given
/// salt during ingestion; reviews dated more than
/// [`PRE_RELEASE_TOLERANCE_DAYS`] before their movie's release are rejected
/// when `release_dates` provides the movie.
pub fn load_reviews(
    path: &Path,
    salt: &str,
    release_dates: &std::collections::HashMap<String, NaiveDate>,
) -> Result<LoadOutcome<ReviewRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let index = check_header(reader.headers()?, REVIEW_COLUMNS, REVIEW_OPTIONAL_COLUMNS)?;
    let get = |rec: &csv::StringRecord, key: &str| -> String {
        index
            .get(key)
            .and_then(|&i| rec.get(i))
            .unwrap_or_default()
            .to_string()
    };

    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let row_number = row_idx + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                rejects.push(RejectedRow {
                    row: row_number,
                    reason: format!("unreadable row: {e}"),
                });
                continue;
            }
        };
        let parsed: std::result::Result<ReviewRecord, String> = (|| {
            let movie_title = get(&row, "movie_title");
            if movie_title.trim().is_empty() {
                return Err("empty movie_title".into());
            }
            let date_raw = get(&row, "review_date");
            let review_date = NaiveDate::parse_from_str(date_raw.trim(), "%Y-%m-%d")
                .map_err(|_| format!("unparseable review_date {date_raw:?}"))?;
            if let Some(release) = release_dates.get(&movie_title) {
                if (review_date - *release).num_days() < -PRE_RELEASE_TOLERANCE_DAYS {
                    return Err(format!(
                        "review dated {review_date}, more than {PRE_RELEASE_TOLERANCE_DAYS} days before release {release}"
                    ));
                }
            }
            let upvotes: u32 = get(&row, "upvotes")
                .trim()
                .parse()
                .map_err(|_| "unparseable upvotes".to_string())?;
            let total_votes: u32 = get(&row, "total_votes")
                .trim()
                .parse()
                .map_err(|_| "unparseable total_votes".to_string())?;
            if upvotes > total_votes {
                return Err(format!("upvotes {upvotes} > total_votes {total_votes}"));
            }
            let rating_raw = get(&row, "rating");
            let rating =
                if rating_raw.trim().is_empty() || rating_raw.trim().eq_ignore_ascii_case("n/a") {
                    None
                } else {
                    let r: u8 = rating_raw
                        .trim()
                        .parse()
                        .map_err(|_| format!("unparseable rating {rating_raw:?}"))?;
                    if !(1..=10).contains(&r) {
                        return Err(format!("rating {r} outside [1, 10]"));
                    }
                    Some(r)
                };
            let sentiment_score = index
                .get("sentiment_score")
                .and_then(|&i| row.get(i))
                .map(parse_currency)
                .transpose()?
                .flatten();
            Ok(ReviewRecord {
                movie_title,
                review_author: anonymize_author(&get(&row, "review_author"), salt),
                review_date,
                title: get(&row, "review_title"),
                body: get(&row, "review_body"),
                upvotes,
                total_votes,
                rating,
                sentiment_score,
            })
        })();
        match parsed {
            Ok(record) => records.push(record),
            Err(reason) => rejects.push(RejectedRow {
                row: row_number,
                reason,
            }),
        }
    }
    Ok(LoadOutcome { records, rejects })
}

/// Writes movies in the ingestion schema.
pub fn write_movies(path: &Path, movies: &[MovieRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "Title",
        "Director",
        "Writers",
        "Gross_Worldwide",
        "Opening_Weekend",
        "Budget",
        "Language",
        "Country",
        "Filming_Locations",
        "Production_Companies",
        "Release_Day",
        "Release_Month",
        "Release_Year",
        "Runtime",
    ])?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for m in movies {
        writer.write_record([
            m.title.clone(),
            m.director.clone(),
            m.writers.join(", "),
            fmt(m.gross_worldwide),
            fmt(m.opening_weekend),
            fmt(m.budget),
            m.language.clone(),
            m.country.clone(),
            m.filming_locations.clone(),
            m.production_companies.join(", "),
            m.release_day.to_string(),
            m.release_month.to_string(),
            m.release_year.to_string(),
            fmt(m.runtime),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes reviews in the ingestion schema.
pub fn write_reviews(path: &Path, reviews: &[ReviewRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "Movie_Title",
        "Review_Author",
        "Review_Date",
        "Review_Title",
        "Review_Body",
        "Upvotes",
        "Total_Votes",
        "Rating",
    ])?;
    for r in reviews {
        writer.write_record([
            r.movie_title.clone(),
            r.review_author.clone(),
            r.review_date.format("%Y-%m-%d").to_string(),
            r.title.clone(),
            r.body.clone(),
            r.upvotes.to_string(),
            r.total_votes.to_string(),
            r.rating.map(|x| x.to_string()).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes rejected rows for audit.
pub fn write_rejects(path: &Path, rejects: &[RejectedRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["Row", "Reason"])?;
    for r in rejects {
        writer.write_record([r.row.to_string(), r.reason.clone()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Keyed one-way hash of an author identifier: stable within a run for the
/// same salt, not invertible, and free of any raw-name substring.
pub fn anonymize_author(raw_author: &str, salt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update((salt.len() as u64).to_le_bytes());
    hasher.update(salt.as_bytes());
    hasher.update(raw_author.as_bytes());
    let digest = hasher.finalize();
    format!("u_{}", hex::encode(&digest[..8]))
}

/// SHA-256 of a file, hex-encoded; used for pipeline-state staleness.
pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex::encode(hasher.finalize()))
}
