//! Per-review multidimensional sentiment extraction and its exponentially
//! decayed temporal aggregation.
//!
//! Extraction runs through a pluggable [`Extractor`]: the deterministic
//! [`StubExtractor`] for offline runs and tests, or [`RemoteExtractor`]
//! speaking a chat-completion wire format. Both produce the same
//! six-field JSON object that [`parse_extractor_response`] validates.

pub(crate) mod extractor;
mod prompt;

pub use extractor::{
    ExtractType, Extractor, RemoteConfig, RemoteExtractor, StubExtractor, NEGATIVE_LEXICON,
    POSITIVE_LEXICON,
};
pub use prompt::{build_prompt, format_currency};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Threshold separating positive from negative sentiment scores.
pub const POSITIVE_SCORE_THRESHOLD: f64 = 6.0;
/// Number of emotion keywords carried per review.
pub const EMOTION_KEYWORD_COUNT: usize = 5;

/// One user review with engagement metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub author_id: String,
    pub date: NaiveDate,
    pub days_since_release: f64,
    pub title: String,
    pub body: String,
    pub upvotes: u32,
    pub total_votes: u32,
    pub user_rating: Option<u8>,
}

impl Review {
    pub fn validate(&self) -> Result<()> {
        if self.upvotes > self.total_votes {
            return Err(Error::ContractViolation(format!(
                "upvotes {} > total_votes {}",
                self.upvotes, self.total_votes
            )));
        }
        if let Some(r) = self.user_rating {
            if !(1..=10).contains(&r) {
                return Err(Error::ContractViolation(format!(
                    "user_rating {r} outside [1, 10]"
                )));
            }
        }
        if !(self.days_since_release >= 0.0) {
            return Err(Error::ContractViolation(format!(
                "days_since_release {} must be >= 0",
                self.days_since_release
            )));
        }
        Ok(())
    }
}

/// The six-field sentiment object produced by an extractor. Field names
/// match the JSON contract verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentVector {
    pub sentiment_score: f64,
    pub emotion_keywords: Vec<String>,
    pub primary_emotion: String,
    pub review_focus: String,
    pub bias_analysis: String,
    pub summary: String,
    /// Set when the reported score had to be clamped into [1, 10].
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub score_clamped: bool,
}

/// Parses a raw extractor response into a [`SentimentVector`].
///
/// Requires a JSON object carrying a numeric `sentiment_score`; the score
/// is clamped into `[1, 10]` (and flagged), `emotion_keywords` is padded or
/// truncated to exactly five entries, and missing text fields become empty
/// strings. Markdown code fences around the object are tolerated.
pub fn parse_extractor_response(raw: &str) -> Result<SentimentVector> {
    let trimmed = strip_code_fence(raw.trim());
    let value: serde_json::Value = serde_json::from_str(trimmed)
        .map_err(|e| Error::MalformedResponse(format!("not valid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::MalformedResponse("response is not a JSON object".into()))?;
    let score = obj
        .get("sentiment_score")
        .and_then(|v| v.as_f64())
        .ok_or_else(|| Error::MalformedResponse("missing numeric sentiment_score".into()))?;
    let clamped = score.clamp(1.0, 10.0);

    let mut keywords: Vec<String> = obj
        .get("emotion_keywords")
        .and_then(|v| v.as_array())
        .map(|a| {
            a.iter()
                .map(|k| k.as_str().unwrap_or_default().to_string())
                .collect()
        })
        .unwrap_or_default();
    keywords.truncate(EMOTION_KEYWORD_COUNT);
    while keywords.len() < EMOTION_KEYWORD_COUNT {
        keywords.push(String::new());
    }

    let text = |key: &str| {
        obj.get(key)
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string()
    };
    Ok(SentimentVector {
        sentiment_score: clamped,
        emotion_keywords: keywords,
        primary_emotion: text("primary_emotion"),
        review_focus: text("review_focus"),
        bias_analysis: text("bias_analysis"),
        summary: text("summary"),
        score_clamped: clamped != score,
    })
}

fn strip_code_fence(s: &str) -> &str {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("```") {
        let rest = rest.strip_prefix("json").unwrap_or(rest);
        if let Some(end) = rest.rfind("```") {
            return rest[..end].trim();
        }
    }
    s
}

/// Decay and weighting parameters for [`aggregate_temporal`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationConfig {
    /// Per-day exponential decay rate (>= 0).
    pub lambda_decay: f64,
    /// Laplace smoothing constant for the helpfulness weight (> 0).
    pub weight_smoothing: f64,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        // 0.05/day gives roughly a two-week half-life.
        AggregationConfig {
            lambda_decay: 0.05,
            weight_smoothing: 1.0,
        }
    }
}

impl AggregationConfig {
    /// Smoothed helpfulness weight `(upvotes + c) / (total_votes + 2c)`,
    /// always inside (0, 1) for c > 0.
    pub fn weight(&self, review: &Review) -> f64 {
        let c = self.weight_smoothing;
        (review.upvotes as f64 + c) / (review.total_votes as f64 + 2.0 * c)
    }
}

/// Aggregate sentiment at a point in time, plus auxiliary statistics over
/// the raw scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateSentiment {
    /// Decayed weighted sum of scores.
    pub s_t: f64,
    pub mean_score: f64,
    /// Population standard deviation of the raw scores.
    pub score_std: f64,
    /// Fraction of reviews with score >= 6.
    pub positive_share: f64,
    pub review_count: usize,
}

/// Decayed weighted sentiment at time `t` (days since release):
/// `sum_i w_i * score_i * exp(-lambda * (t - t_i))`.
///
/// Every review must satisfy `t_i <= t`. An empty slice yields a zero sum
/// with NaN statistics, which downstream imputation replaces.
pub fn aggregate_temporal(
    sentiments: &[(SentimentVector, Review)],
    t: f64,
    config: &AggregationConfig,
) -> Result<AggregateSentiment> {
    if let Some((_, review)) = sentiments.iter().find(|(_, r)| r.days_since_release > t) {
        return Err(Error::ContractViolation(format!(
            "review at day {} is later than aggregation time {t}",
            review.days_since_release
        )));
    }
    let n = sentiments.len();
    if n == 0 {
        return Ok(AggregateSentiment {
            s_t: 0.0,
            mean_score: f64::NAN,
            score_std: f64::NAN,
            positive_share: f64::NAN,
            review_count: 0,
        });
    }
    let mut s_t = 0.0;
    let mut sum = 0.0;
    let mut positives = 0usize;
    for (vector, review) in sentiments {
        let decay = (-config.lambda_decay * (t - review.days_since_release)).exp();
        s_t += config.weight(review) * vector.sentiment_score * decay;
        sum += vector.sentiment_score;
        if vector.sentiment_score >= POSITIVE_SCORE_THRESHOLD {
            positives += 1;
        }
    }
    let mean = sum / n as f64;
    let var = sentiments
        .iter()
        .map(|(v, _)| (v.sentiment_score - mean).powi(2))
        .sum::<f64>()
        / n as f64;
    Ok(AggregateSentiment {
        s_t,
        mean_score: mean,
        score_std: var.sqrt(),
        positive_share: positives as f64 / n as f64,
        review_count: n,
    })
}
