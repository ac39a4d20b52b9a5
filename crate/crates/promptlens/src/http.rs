//! OpenAI-compatible chat-completions and embeddings client.
//!
//! `POST {base}/v1/chat/completions` with a system and a user message, and
//! `POST {base}/v1/embeddings`. A base URL that already ends in `/v1` is
//! used as is. Transport failures, 429 and 5xx responses are retried with
//! exponential backoff (a `Retry-After` header in seconds takes precedence);
//! any other non-success status is a configuration error and is not retried.

use std::time::Duration;

use promptlens_core::{Completion, CompletionProvider, CompletionRequest, Embedder, ProviderError};
use serde::Deserialize;
use serde_json::json;

/// Name of the environment variable holding the API key.
pub const API_KEY_ENV: &str = "PROMPTLENS_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_backoff: Duration::from_secs(1),
            max_backoff: Duration::from_secs(60),
        }
    }
}

impl RetryPolicy {
    /// Delay before attempt `attempt + 1`, `attempt` counting from 1.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 2u32.saturating_pow(attempt.saturating_sub(1));
        self.initial_backoff.saturating_mul(factor).min(self.max_backoff)
    }
}

#[derive(Debug, Clone)]
pub struct HttpSettings {
    pub base_url: String,
    pub model_id: String,
    pub embedding_model: String,
    pub api_key: String,
    pub timeout: Duration,
    pub retry: RetryPolicy,
    /// Ask for all `n` samples in one call; otherwise one call per sample.
    pub single_call_n: bool,
}

impl HttpSettings {
    pub fn new(base_url: &str, model_id: &str, api_key: &str) -> Self {
        Self {
            base_url: base_url.to_string(),
            model_id: model_id.to_string(),
            embedding_model: String::new(),
            api_key: api_key.to_string(),
            timeout: Duration::from_secs(120),
            retry: RetryPolicy::default(),
            single_call_n: true,
        }
    }
}

fn endpoint(base: &str, path: &str) -> String {
    let base = base.trim_end_matches('/');
    if base.ends_with("/v1") {
        format!("{base}/{path}")
    } else {
        format!("{base}/v1/{path}")
    }
}

enum Attempt {
    Done(String),
    Retry { error: ProviderError, wait: Option<Duration> },
    Fatal(ProviderError),
}

#[derive(Debug)]
struct Client {
    agent: ureq::Agent,
    settings: HttpSettings,
}

impl Client {
    fn new(settings: HttpSettings) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(settings.timeout))
            .build()
            .into();
        Self { agent, settings }
    }

    fn attempt(&self, url: &str, body: &serde_json::Value) -> Attempt {
        let response = self
            .agent
            .post(url)
            .header("Authorization", &format!("Bearer {}", self.settings.api_key))
            .send_json(body);
        let mut response = match response {
            Ok(r) => r,
            Err(e) => {
                return Attempt::Retry {
                    error: ProviderError::Transport { message: e.to_string(), attempts: 0 },
                    wait: None,
                }
            }
        };
        let status = response.status().as_u16();
        let retry_after = response
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => {
                return Attempt::Retry {
                    error: ProviderError::Transport { message: e.to_string(), attempts: 0 },
                    wait: None,
                }
            }
        };
        match status {
            200..=299 => Attempt::Done(text),
            429 => Attempt::Retry {
                error: ProviderError::RateLimited { attempts: 0 },
                wait: retry_after,
            },
            500..=599 => Attempt::Retry {
                error: ProviderError::Transport {
                    message: format!("HTTP {status}: {}", snippet(&text)),
                    attempts: 0,
                },
                wait: retry_after,
            },
            _ => Attempt::Fatal(ProviderError::Config {
                status,
                message: snippet(&text),
            }),
        }
    }

    fn post(&self, path: &str, body: serde_json::Value) -> Result<String, ProviderError> {
        let url = endpoint(&self.settings.base_url, path);
        let policy = &self.settings.retry;
        let attempts = policy.attempts.max(1);
        let mut attempt = 1;
        loop {
            match self.attempt(&url, &body) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry { error, wait } => {
                    if attempt >= attempts {
                        return Err(match error {
                            ProviderError::RateLimited { .. } => ProviderError::RateLimited { attempts },
                            ProviderError::Transport { message, .. } => ProviderError::Transport { message, attempts },
                            other => other,
                        });
                    }
                    let delay = wait.map_or_else(|| policy.backoff(attempt), |w| w.min(policy.max_backoff));
                    log::warn!("{url}: {error}; retrying in {delay:?}");
                    std::thread::sleep(delay);
                    attempt += 1;
                }
            }
        }
    }
}

fn snippet(text: &str) -> String {
    let mut s: String = text.chars().take(300).collect();
    if s.len() < text.len() {
        s.push('…');
    }
    s
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    #[serde(default)]
    index: u32,
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

/// Completion texts in choice-index order. Fewer than `n` choices is an
/// error, never a partial success.
pub fn parse_chat_response(body: &str, n: u32) -> Result<Vec<String>, ProviderError> {
    let parsed: ChatResponse =
        serde_json::from_str(body).map_err(|e| ProviderError::Malformed(format!("chat response: {e}")))?;
    let received = parsed.choices.len() as u32;
    if received < n {
        return Err(ProviderError::Truncated { expected: n, received });
    }
    let mut choices = parsed.choices;
    choices.sort_by_key(|c| c.index);
    Ok(choices
        .into_iter()
        .take(n as usize)
        .map(|c| c.message.content.unwrap_or_default())
        .collect())
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
}

pub fn parse_embedding_response(body: &str) -> Result<Vec<f64>, ProviderError> {
    let parsed: EmbeddingResponse =
        serde_json::from_str(body).map_err(|e| ProviderError::Malformed(format!("embedding response: {e}")))?;
    let v = parsed
        .data
        .into_iter()
        .next()
        .map(|d| d.embedding)
        .ok_or_else(|| ProviderError::Malformed("embedding response has no data".into()))?;
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(ProviderError::Malformed("embedding is empty or non-finite".into()));
    }
    Ok(v)
}

/// Chat-completions provider.
#[derive(Debug)]
pub struct HttpProvider {
    client: Client,
}

impl HttpProvider {
    pub fn new(settings: HttpSettings) -> Self {
        Self { client: Client::new(settings) }
    }

    pub fn settings(&self) -> &HttpSettings {
        &self.client.settings
    }

    fn request_body(request: &CompletionRequest, n: u32) -> serde_json::Value {
        json!({
            "model": request.model_id,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_input},
            ],
            "n": n,
            "temperature": request.temperature,
        })
    }
}

impl CompletionProvider for HttpProvider {
    fn kind(&self) -> &str {
        "http"
    }

    fn sample(&self, request: &CompletionRequest, _sample_index: u32) -> Result<String, ProviderError> {
        request.validate()?;
        let body = self.client.post("chat/completions", Self::request_body(request, 1))?;
        Ok(parse_chat_response(&body, 1)?.remove(0))
    }

    fn complete(&self, request: &CompletionRequest) -> Result<Vec<Completion>, ProviderError> {
        request.validate()?;
        let texts = if self.client.settings.single_call_n {
            let body = self.client.post("chat/completions", Self::request_body(request, request.n))?;
            parse_chat_response(&body, request.n)?
        } else {
            (0..request.n).map(|i| self.sample(request, i)).collect::<Result<_, _>>()?
        };
        Ok(texts
            .into_iter()
            .enumerate()
            .map(|(i, text)| Completion {
                text,
                sample_index: i as u32,
                model_id: request.model_id.clone(),
                from_cache: false,
            })
            .collect())
    }
}

/// Embeddings endpoint client.
#[derive(Debug)]
pub struct HttpEmbedder {
    client: Client,
}

impl HttpEmbedder {
    pub fn new(settings: HttpSettings) -> Self {
        Self { client: Client::new(settings) }
    }
}

impl Embedder for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        if text.trim().is_empty() {
            return Err(ProviderError::InvalidRequest("cannot embed empty text".into()));
        }
        let model = &self.client.settings.embedding_model;
        let body = self.client.post("embeddings", json!({"model": model, "input": text}))?;
        parse_embedding_response(&body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        assert_eq!(endpoint("http://h:1", "embeddings"), "http://h:1/v1/embeddings");
        assert_eq!(endpoint("http://h:1/", "chat/completions"), "http://h:1/v1/chat/completions");
        assert_eq!(endpoint("https://x/api/v1/", "embeddings"), "https://x/api/v1/embeddings");
    }

    #[test]
    fn backoff_doubles_from_one_second() {
        let p = RetryPolicy::default();
        assert_eq!(p.backoff(1), Duration::from_secs(1));
        assert_eq!(p.backoff(2), Duration::from_secs(2));
        assert_eq!(p.backoff(3), Duration::from_secs(4));
        assert_eq!(p.backoff(30), Duration::from_secs(60));
    }

    #[test]
    fn chat_choices_are_ordered_and_counted() {
        let body = r#"{"choices":[
            {"index":1,"message":{"role":"assistant","content":"b"}},
            {"index":0,"message":{"role":"assistant","content":"a"}}]}"#;
        assert_eq!(parse_chat_response(body, 2).unwrap(), ["a", "b"]);
        assert_eq!(
            parse_chat_response(body, 3),
            Err(ProviderError::Truncated { expected: 3, received: 2 })
        );
        assert!(matches!(parse_chat_response("{", 1), Err(ProviderError::Malformed(_))));
    }

    #[test]
    fn embedding_parsing() {
        assert_eq!(parse_embedding_response(r#"{"data":[{"embedding":[0.5,-1]}]}"#).unwrap(), [0.5, -1.0]);
        assert!(parse_embedding_response(r#"{"data":[]}"#).is_err());
        assert!(parse_embedding_response(r#"{"data":[{"embedding":[]}]}"#).is_err());
    }
}
