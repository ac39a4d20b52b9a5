//! Completion and embedding provider abstractions.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// One sampling request: a system prompt plus a user input, sampled `n` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub system_prompt: String,
    pub user_input: String,
    pub n: u32,
    pub temperature: f64,
    pub model_id: String,
}

impl CompletionRequest {
    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.n == 0 {
            return Err(ProviderError::InvalidRequest(String::from("n must be at least 1")));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(ProviderError::InvalidRequest(String::from(
                "temperature must be finite and non-negative",
            )));
        }
        Ok(())
    }
}

/// One generated sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub sample_index: u32,
    pub model_id: String,
    pub from_cache: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    /// Network or server-side failure that survived all retries.
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    /// Rate limited on every attempt.
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    /// Rejected by the server as malformed or unauthorized; never retried.
    #[error("provider configuration error (HTTP {status}): {message}")]
    Config { status: u16, message: String },
    /// The response held fewer samples than requested.
    #[error("expected {expected} completions, received {received}")]
    Truncated { expected: u32, received: u32 },
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    /// The run was interrupted before this request was issued.
    #[error("cancelled")]
    Cancelled,
}

impl ProviderError {
    /// Whether a later attempt could plausibly succeed.
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Transport { .. } | ProviderError::RateLimited { .. })
    }
}

/// A source of model completions.
///
/// `sample` must return the text for one sample index. `complete` returns all
/// `n` samples and may do so with a single upstream call; the default loops
/// over `sample`. `complete_many` is the batch entry point used by the
/// importance engine; implementations may evaluate requests concurrently but
/// must return results in request order.
pub trait CompletionProvider {
    /// Short stable identifier, part of cache keys.
    fn kind(&self) -> &str;

    fn sample(&self, request: &CompletionRequest, sample_index: u32)
        -> Result<String, ProviderError>;

    fn complete(&self, request: &CompletionRequest) -> Result<Vec<Completion>, ProviderError> {
        request.validate()?;
        (0..request.n)
            .map(|i| {
                Ok(Completion {
                    text: self.sample(request, i)?,
                    sample_index: i,
                    model_id: request.model_id.clone(),
                    from_cache: false,
                })
            })
            .collect()
    }

    fn complete_many(
        &self,
        requests: &[CompletionRequest],
    ) -> Vec<Result<Vec<Completion>, ProviderError>> {
        requests.iter().map(|r| self.complete(r)).collect()
    }
}

impl<P: CompletionProvider + ?Sized> CompletionProvider for &P {
    fn kind(&self) -> &str {
        (**self).kind()
    }
    fn sample(&self, request: &CompletionRequest, i: u32) -> Result<String, ProviderError> {
        (**self).sample(request, i)
    }
    fn complete(&self, request: &CompletionRequest) -> Result<Vec<Completion>, ProviderError> {
        (**self).complete(request)
    }
    fn complete_many(
        &self,
        requests: &[CompletionRequest],
    ) -> Vec<Result<Vec<Completion>, ProviderError>> {
        (**self).complete_many(requests)
    }
}

/// A source of fixed-dimension text embeddings.
pub trait Embedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError>;
}

impl<E: Embedder + ?Sized> Embedder for &E {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        (**self).embed(text)
    }
}

#[cfg(feature = "std")]
impl<P: CompletionProvider + ?Sized> CompletionProvider for std::sync::Arc<P> {
    fn kind(&self) -> &str {
        (**self).kind()
    }
    fn sample(&self, request: &CompletionRequest, i: u32) -> Result<String, ProviderError> {
        (**self).sample(request, i)
    }
    fn complete(&self, request: &CompletionRequest) -> Result<Vec<Completion>, ProviderError> {
        (**self).complete(request)
    }
    fn complete_many(
        &self,
        requests: &[CompletionRequest],
    ) -> Vec<Result<Vec<Completion>, ProviderError>> {
        (**self).complete_many(requests)
    }
}

#[cfg(feature = "std")]
impl<E: Embedder + ?Sized> Embedder for std::sync::Arc<E> {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        (**self).embed(text)
    }
}
