//! Pluggable sentiment extractors: a deterministic lexicon stub for
//! offline runs and a rate-limited remote chat-completion client.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::MovieRecord;
use crate::sentiment::prompt::build_prompt;
use crate::sentiment::{parse_extractor_response, Review, SentimentVector};

/// Positive cue words recognized by the stub (and reused by the synthetic
/// review generator).
pub const POSITIVE_LEXICON: &[&str] = &[
    "amazing",
    "brilliant",
    "captivating",
    "compelling",
    "delightful",
    "excellent",
    "fresh",
    "gripping",
    "innovative",
    "masterful",
    "powerful",
    "stunning",
    "superb",
    "thrilling",
    "wonderful",
];

/// Negative cue words recognized by the stub.
pub const NEGATIVE_LEXICON: &[&str] = &[
    "awful",
    "bland",
    "boring",
    "clumsy",
    "disappointing",
    "dull",
    "forgettable",
    "hollow",
    "lifeless",
    "mediocre",
    "messy",
    "predictable",
    "shallow",
    "tedious",
    "terrible",
];

/// Extractor selector used in run configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractType {
    Stub,
    Remote,
}

/// Something that can turn a (movie, review) pair into the raw response
/// text holding the six-field sentiment JSON.
pub trait Extractor: Send + Sync {
    fn extract_raw(&self, movie: &MovieRecord, review: &Review) -> Result<String>;

    /// Full extraction: raw response then contract validation.
    fn extract(&self, movie: &MovieRecord, review: &Review) -> Result<SentimentVector> {
        parse_extractor_response(&self.extract_raw(movie, review)?)
    }
}

/// Deterministic offline extractor. Scores by signed lexicon hits mapped
/// affinely into [1, 10]; with no hits it backs off to the user rating,
/// then to a 5.5 neutral.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubExtractor;

impl StubExtractor {
    fn lexicon_hits(body: &str) -> (Vec<&'static str>, Vec<&'static str>) {
        let lower = body.to_lowercase();
        let words: Vec<&str> = lower
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect();
        let mut positives = Vec::new();
        let mut negatives = Vec::new();
        for w in words {
            if let Some(&hit) = POSITIVE_LEXICON.iter().find(|&&p| p == w) {
                positives.push(hit);
            } else if let Some(&hit) = NEGATIVE_LEXICON.iter().find(|&&n| n == w) {
                negatives.push(hit);
            }
        }
        (positives, negatives)
    }

    fn score(review: &Review) -> (f64, Vec<&'static str>, Vec<&'static str>) {
        let (pos, neg) = Self::lexicon_hits(&review.body);
        if pos.is_empty() && neg.is_empty() {
            let score = review.user_rating.map(|r| r as f64).unwrap_or(5.5);
            return (score, pos, neg);
        }
        let p = pos.len() as f64;
        let n = neg.len() as f64;
        (5.5 + 4.5 * (p - n) / (p + n), pos, neg)
    }

    /// The score this stub would assign to a review body and rating.
    /// Shared with the synthetic generator so generated polarity matches
    /// what extraction later reports.
    pub fn lexicon_score(body: &str, user_rating: Option<u8>) -> f64 {
        let (pos, neg) = Self::lexicon_hits(body);
        if pos.is_empty() && neg.is_empty() {
            return user_rating.map(|r| r as f64).unwrap_or(5.5);
        }
        let p = pos.len() as f64;
        let n = neg.len() as f64;
        5.5 + 4.5 * (p - n) / (p + n)
    }
}

impl Extractor for StubExtractor {
    fn extract_raw(&self, _movie: &MovieRecord, review: &Review) -> Result<String> {
        let (score, pos, neg) = Self::score(review);
        let mut keywords: Vec<String> = pos
            .iter()
            .chain(neg.iter())
            .take(5)
            .map(|s| s.to_string())
            .collect();
        while keywords.len() < 5 {
            keywords.push("neutral".into());
        }
        let primary = if score >= 7.0 {
            "admiration"
        } else if score <= 4.0 {
            "disappointment"
        } else {
            "mixed"
        };
        let vector = SentimentVector {
            sentiment_score: score,
            emotion_keywords: keywords,
            primary_emotion: primary.into(),
            review_focus: "overall impression".into(),
            bias_analysis: if review.user_rating.is_some_and(|r| r >= 9) {
                "possible fan enthusiasm".into()
            } else {
                "no marked bias".into()
            },
            summary: format!(
                "Lexicon reading: {} positive and {} negative cues.",
                pos.len(),
                neg.len()
            ),
            score_clamped: false,
        };
        Ok(serde_json::to_string(&vector)?)
    }
}

/// Remote chat-completion endpoint configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Full endpoint URL receiving the POST.
    pub base_url: String,
    pub model: String,
    pub timeout_secs: u64,
    /// Re-requests on transport failures or malformed responses.
    pub max_retries: u32,
    /// Minimum spacing between requests, milliseconds.
    pub min_interval_ms: u64,
    /// Fall back to the stub once retries are exhausted.
    pub fallback_to_stub: bool,
    /// Environment variable holding the API key.
    pub api_key_env: String,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            base_url: "http://localhost:8080/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            timeout_secs: 30,
            max_retries: 2,
            min_interval_ms: 1000,
            fallback_to_stub: true,
            api_key_env: "SENTIMENT_API_KEY".into(),
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: Option<String>,
}

/// Client for a chat-completion style endpoint. Requests are serialized
/// through an internal rate limiter; concurrent callers block until their
/// slot opens.
pub struct RemoteExtractor {
    config: RemoteConfig,
    client: reqwest::blocking::Client,
    last_request: Mutex<Option<Instant>>,
}

impl RemoteExtractor {
    pub fn new(config: RemoteConfig) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()?;
        Ok(RemoteExtractor {
            config,
            client,
            last_request: Mutex::new(None),
        })
    }

    fn throttle(&self) {
        let min_interval = Duration::from_millis(self.config.min_interval_ms);
        let mut last = self.last_request.lock().unwrap();
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < min_interval {
                std::thread::sleep(min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn request_once(&self, prompt: &str, api_key: &str) -> Result<String> {
        self.throttle();
        let body = ChatRequest {
            model: &self.config.model,
            messages: vec![ChatMessage {
                role: "user",
                content: prompt,
            }],
        };
        let response = self
            .client
            .post(&self.config.base_url)
            .bearer_auth(api_key)
            .json(&body)
            .send()?
            .error_for_status()?;
        let parsed: ChatResponse = response.json()?;
        parsed
            .choices
            .first()
            .and_then(|c| c.message.content.clone())
            .ok_or_else(|| Error::MalformedResponse("response carried no message content".into()))
    }
}

impl Extractor for RemoteExtractor {
    fn extract_raw(&self, movie: &MovieRecord, review: &Review) -> Result<String> {
        let api_key = std::env::var(&self.config.api_key_env).map_err(|_| {
            Error::ExtractorUnavailable(format!(
                "environment variable {} is not set",
                self.config.api_key_env
            ))
        })?;
        let prompt = build_prompt(movie, review);
        let mut last_error = String::new();
        for _attempt in 0..=self.config.max_retries {
            match self.request_once(&prompt, &api_key) {
                // Validate here so malformed payloads trigger a retry.
                Ok(raw) => match parse_extractor_response(&raw) {
                    Ok(_) => return Ok(raw),
                    Err(e) => last_error = e.to_string(),
                },
                Err(e) => last_error = e.to_string(),
            }
        }
        if self.config.fallback_to_stub {
            return StubExtractor.extract_raw(movie, review);
        }
        Err(Error::ExtractorUnavailable(format!(
            "retries exhausted: {last_error}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    fn movie() -> MovieRecord {
        MovieRecord {
            title: "Test Film".into(),
            director: "D".into(),
            writers: vec!["W".into()],
            gross_worldwide: None,
            opening_weekend: None,
            budget: None,
            language: "English".into(),
            country: "USA".into(),
            filming_locations: String::new(),
            production_companies: vec![],
            release_day: 1,
            release_month: 1,
            release_year: 2020,
            runtime: None,
        }
    }

    fn review(body: &str, rating: Option<u8>) -> Review {
        Review {
            author_id: "u".into(),
            date: NaiveDate::from_ymd_opt(2020, 1, 2).unwrap(),
            days_since_release: 1.0,
            title: "t".into(),
            body: body.into(),
            upvotes: 0,
            total_votes: 0,
            user_rating: rating,
        }
    }

    #[test]
    fn stub_scores_negative_lexicon_below_neutral() {
        let v = StubExtractor
            .extract(&movie(), &review("A disappointing slog.", None))
            .unwrap();
        assert!(v.sentiment_score < 5.0, "score = {}", v.sentiment_score);
    }

    #[test]
    fn stub_backs_off_to_user_rating_then_neutral() {
        let v = StubExtractor
            .extract(&movie(), &review("", Some(8)))
            .unwrap();
        assert_eq!(v.sentiment_score, 8.0);
        let v = StubExtractor
            .extract(&movie(), &review("plain words", None))
            .unwrap();
        assert_eq!(v.sentiment_score, 5.5);
    }

    #[test]
    fn stub_is_deterministic_and_in_range() {
        let r = review("brilliant but predictable and dull overall", Some(5));
        let a = StubExtractor.extract(&movie(), &r).unwrap();
        let b = StubExtractor.extract(&movie(), &r).unwrap();
        assert_eq!(a, b);
        assert!((1.0..=10.0).contains(&a.sentiment_score));
        assert_eq!(a.emotion_keywords.len(), 5);
    }

    #[test]
    fn stub_mixed_lexicon_is_affine_in_hit_balance() {
        // 2 positive, 1 negative: 5.5 + 4.5 * (1/3) = 7.0.
        let v = StubExtractor
            .extract(&movie(), &review("stunning, gripping, yet bland", None))
            .unwrap();
        assert!((v.sentiment_score - 7.0).abs() < 1e-12);
    }

    /// Tiny canned-response HTTP server for exercising the wire format.
    fn spawn_server(responses: Vec<String>) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let mut seen = Vec::new();
            for body in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = vec![0u8; 65536];
                let mut total = 0;
                loop {
                    let n = stream.read(&mut buf[total..]).unwrap();
                    total += n;
                    let text = String::from_utf8_lossy(&buf[..total]).to_string();
                    if let Some(header_end) = text.find("\r\n\r\n") {
                        let content_len = text
                            .lines()
                            .find(|l| l.to_lowercase().starts_with("content-length:"))
                            .and_then(|l| l.split(':').nth(1))
                            .and_then(|v| v.trim().parse::<usize>().ok())
                            .unwrap_or(0);
                        if total >= header_end + 4 + content_len {
                            seen.push(text);
                            break;
                        }
                    }
                    if n == 0 {
                        break;
                    }
                }
                let reply = format!(
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    body.len(),
                    body
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
            seen
        });
        (format!("http://{addr}/v1/chat/completions"), handle)
    }

    fn chat_body(content: &str) -> String {
        serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": content}}]
        })
        .to_string()
    }

    fn remote_config(url: String) -> RemoteConfig {
        RemoteConfig {
            base_url: url,
            model: "test-model".into(),
            timeout_secs: 5,
            max_retries: 1,
            min_interval_ms: 0,
            fallback_to_stub: false,
            api_key_env: "SENTIMENT_API_KEY".into(),
        }
    }

    #[test]
    fn remote_sends_wire_format_and_parses_content() {
        std::env::set_var("SENTIMENT_API_KEY", "test-key");
        let sentiment = r#"{"sentiment_score": 6.5, "emotion_keywords": ["a","b","c","d","e"], "primary_emotion": "joy", "review_focus": "plot", "bias_analysis": "none", "summary": "fine"}"#;
        let (url, handle) = spawn_server(vec![chat_body(sentiment)]);
        let extractor = RemoteExtractor::new(remote_config(url)).unwrap();
        let v = extractor
            .extract(&movie(), &review("some text", None))
            .unwrap();
        assert_eq!(v.sentiment_score, 6.5);

        let requests = handle.join().unwrap();
        assert_eq!(requests.len(), 1);
        let req = &requests[0];
        assert!(req.starts_with("POST /v1/chat/completions"));
        assert!(
            req.contains("authorization: Bearer test-key")
                || req.contains("Authorization: Bearer test-key")
        );
        let body_start = req.find("\r\n\r\n").unwrap() + 4;
        let body: serde_json::Value = serde_json::from_str(&req[body_start..]).unwrap();
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["messages"][0]["role"], "user");
        assert!(body["messages"][0]["content"]
            .as_str()
            .unwrap()
            .contains("REVIEW TEXT"));
    }

    #[test]
    fn remote_retries_malformed_then_succeeds() {
        std::env::set_var("SENTIMENT_API_KEY", "test-key");
        let good = r#"{"sentiment_score": 4.0}"#;
        let (url, handle) = spawn_server(vec![chat_body("sorry, no JSON here"), chat_body(good)]);
        let extractor = RemoteExtractor::new(remote_config(url)).unwrap();
        let v = extractor.extract(&movie(), &review("text", None)).unwrap();
        assert_eq!(v.sentiment_score, 4.0);
        assert_eq!(handle.join().unwrap().len(), 2);
    }

    #[test]
    fn remote_exhaustion_without_fallback_errors() {
        std::env::set_var("SENTIMENT_API_KEY", "test-key");
        let (url, handle) = spawn_server(vec![chat_body("still not JSON"), chat_body("nope")]);
        let extractor = RemoteExtractor::new(remote_config(url)).unwrap();
        let err = extractor
            .extract(&movie(), &review("text", None))
            .unwrap_err();
        assert!(matches!(err, Error::ExtractorUnavailable(_)));
        handle.join().unwrap();
    }

    #[test]
    fn remote_exhaustion_with_fallback_uses_stub() {
        std::env::set_var("SENTIMENT_API_KEY", "test-key");
        let (url, handle) = spawn_server(vec![chat_body("bad"), chat_body("bad")]);
        let mut config = remote_config(url);
        config.fallback_to_stub = true;
        let extractor = RemoteExtractor::new(config).unwrap();
        let v = extractor
            .extract(&movie(), &review("a stunning film", None))
            .unwrap();
        assert_eq!(v.sentiment_score, 10.0);
        handle.join().unwrap();
    }

    #[test]
    fn rate_limiter_spaces_requests() {
        std::env::set_var("SENTIMENT_API_KEY", "test-key");
        let good = chat_body(r#"{"sentiment_score": 5.0}"#);
        let (url, handle) = spawn_server(vec![good.clone(), good.clone(), good]);
        let mut config = remote_config(url);
        config.min_interval_ms = 60;
        let extractor = RemoteExtractor::new(config).unwrap();
        let start = Instant::now();
        for _ in 0..3 {
            extractor.extract(&movie(), &review("x", None)).unwrap();
        }
        assert!(
            start.elapsed() >= Duration::from_millis(120),
            "three calls at 60 ms spacing must take >= 120 ms"
        );
        handle.join().unwrap();
    }

    #[test]
    fn remote_requires_api_key() {
        std::env::remove_var("SENTIMENT_API_KEY_MISSING_TEST");
        let mut config = remote_config("http://127.0.0.1:1/".into());
        config.api_key_env = "SENTIMENT_API_KEY_MISSING_TEST".into();
        let extractor = RemoteExtractor::new(config).unwrap();
        let err = extractor.extract(&movie(), &review("x", None)).unwrap_err();
        assert!(matches!(err, Error::ExtractorUnavailable(_)));
    }
}
