//! Prompt assembly for the sentiment extractor. The template has four
//! parts: role definition, movie information, review text, and the
//! analysis request with the six required JSON keys. Missing metadata is
//! substituted with "N/A", never omitted.

use crate::ingest::MovieRecord;
use crate::sentiment::Review;

/// Formats a currency amount with thousands separators, e.g. `$12,500,000`.
pub fn format_currency(amount: f64) -> String {
    let rounded = amount.round() as i64;
    let digits = rounded.abs().to_string();
    let mut grouped = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            grouped.push(',');
        }
        grouped.push(c);
    }
    if rounded < 0 {
        format!("-${grouped}")
    } else {
        format!("${grouped}")
    }
}

fn currency_or_na(v: Option<f64>) -> String {
    v.map(format_currency).unwrap_or_else(|| "N/A".into())
}

fn text_or_na(v: &str) -> &str {
    if v.trim().is_empty() {
        "N/A"
    } else {
        v
    }
}

/// Builds the full extraction prompt for one (movie, review) pair.
pub fn build_prompt(movie: &MovieRecord, review: &Review) -> String {
    let roi = match (movie.opening_weekend, movie.budget) {
        (Some(open), Some(budget)) if budget > 0.0 => format!("{:.2}", open / budget),
        _ => "N/A".into(),
    };
    let runtime = movie
        .runtime
        .map(|r| format!("{} min", r.round() as i64))
        .unwrap_or_else(|| "N/A".into());
    format!(
        "You are a professional film critic and sentiment analysis expert. \
         Please analyze the following movie review and provide a detailed \
         sentiment analysis.\n\
         \n\
         MOVIE INFORMATION:\n\
         - Title: {title}\n\
         - Director: {director}\n\
         - Writers: {writers}\n\
         - Release Year: {year}\n\
         - Release Month: {month}\n\
         - Release Day: {day}\n\
         - Budget: {budget}\n\
         - Opening Weekend (US/Canada): {opening}\n\
         - Worldwide Gross: {gross}\n\
         - ROI: {roi}\n\
         - IMDb Rating: N/A/10\n\
         - Language: {language}\n\
         - Country of Origin: {country}\n\
         - Filming Locations: {locations}\n\
         - Production Companies: {companies}\n\
         - Runtime: {runtime}\n\
         \n\
         REVIEW TEXT: \"{review_text}\"\n\
         \n\
         Analyze this review's sentiment and attitude. Return ONLY a JSON \
         object with the following keys:\n\
         1. sentiment_score: Score from 1-10 (1=extremely negative, 10=extremely positive)\n\
         2. emotion_keywords: List of 5 keywords/phrases that best represent the emotional tone\n\
         3. primary_emotion: Main emotion expressed (e.g., admiration, disappointment, anger, surprise)\n\
         4. review_focus: What aspects the review focuses on (e.g., plot, acting, visuals, directing)\n\
         5. bias_analysis: Analysis of potential biases or subjective factors\n\
         6. summary: Brief summary (50 words or less)\n\
         \n\
         Return ONLY the JSON result with no additional text or explanation.",
        title = text_or_na(&movie.title),
        director = text_or_na(&movie.director),
        writers = text_or_na(&movie.writers.join(", ")),
        year = movie.release_year,
        month = movie.release_month,
        day = movie.release_day,
        budget = currency_or_na(movie.budget),
        opening = currency_or_na(movie.opening_weekend),
        gross = currency_or_na(movie.gross_worldwide),
        roi = roi,
        language = text_or_na(&movie.language),
        country = text_or_na(&movie.country),
        locations = text_or_na(&movie.filming_locations),
        companies = text_or_na(&movie.production_companies.join(", ")),
        runtime = runtime,
        review_text = review.body,
    )
}
