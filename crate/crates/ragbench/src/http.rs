//! Small synchronous HTTP JSON client with retries, plus a counting
//! semaphore used to bound in-flight requests.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HttpError {
    #[error("HTTP {status} from {url} after {attempts} attempt(s)")]
    Status {
        status: u16,
        url: String,
        attempts: u32,
    },
    #[error("transport failure calling {url} after {attempts} attempt(s): {message}")]
    Transport {
        url: String,
        attempts: u32,
        message: String,
    },
    #[error("invalid JSON from {url}: {message}")]
    BadJson { url: String, message: String },
}

impl HttpError {
    /// HTTP status carried by the error, when one was received.
    pub fn status(&self) -> Option<u16> {
        match self {
            HttpError::Status { status, .. } => Some(*status),
            _ => None,
        }
    }
}

/// Retry schedule: `max_retries` re-attempts with exponential backoff.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay: Duration::from_millis(200),
        }
    }
}

impl RetryPolicy {
    /// Delay before re-attempt number `retry` (1-based): base × 2^(retry−1).
    fn delay_for(&self, retry: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(retry.saturating_sub(1))
    }
}

/// Shared JSON-over-HTTP client. Cheap to clone; clones share the
/// connection pool.
#[derive(Clone)]
pub struct HttpClient {
    agent: ureq::Agent,
    retry: RetryPolicy,
    api_key: Option<String>,
}

impl HttpClient {
    /// Client with default retry policy and bearer token from
    /// `RAGBENCH_API_KEY` when set.
    pub fn from_env() -> Self {
        Self::new(RetryPolicy::default(), std::env::var("RAGBENCH_API_KEY").ok())
    }

    pub fn new(retry: RetryPolicy, api_key: Option<String>) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(10))
            .timeout(Duration::from_secs(120))
            .build();
        Self {
            agent,
            retry,
            api_key,
        }
    }

    /// POST `body` as JSON and parse the JSON reply.
    ///
    /// Transport failures, 5xx and 429 are retried per the policy; other
    /// statuses fail immediately. Every error records how many attempts
    /// were made and, for HTTP errors, the final status.
    pub fn post_json(
        &self,
        url: &str,
        body: &serde_json::Value,
    ) -> Result<serde_json::Value, HttpError> {
        let mut attempts = 0u32;
        loop {
            attempts += 1;
            let mut request = self.agent.post(url);
            if let Some(key) = &self.api_key {
                request = request.set("Authorization", &format!("Bearer {key}"));
            }
            match request.send_json(body) {
                Ok(response) => {
                    return response.into_json().map_err(|e| HttpError::BadJson {
                        url: url.to_string(),
                        message: e.to_string(),
                    });
                }
                Err(ureq::Error::Status(status, _)) => {
                    let retryable = status >= 500 || status == 429;
                    if retryable && attempts <= self.retry.max_retries {
                        std::thread::sleep(self.retry.delay_for(attempts));
                        continue;
                    }
                    return Err(HttpError::Status {
                        status,
                        url: url.to_string(),
                        attempts,
                    });
                }
                Err(ureq::Error::Transport(transport)) => {
                    if attempts <= self.retry.max_retries {
                        std::thread::sleep(self.retry.delay_for(attempts));
                        continue;
                    }
                    return Err(HttpError::Transport {
                        url: url.to_string(),
                        attempts,
                        message: transport.to_string(),
                    });
                }
            }
        }
    }
}

/// Counting semaphore for bounding concurrent requests.
pub struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    pub fn new(permits: usize) -> Self {
        Self {
            permits: Mutex::new(permits),
            available: Condvar::new(),
        }
    }

    /// Block until a permit is free; the permit is released on drop.
    pub fn acquire(&self) -> SemaphorePermit<'_> {
        let mut permits = self.permits.lock().expect("semaphore poisoned");
        while *permits == 0 {
            permits = self.available.wait(permits).expect("semaphore poisoned");
        }
        *permits -= 1;
        SemaphorePermit { semaphore: self }
    }
}

pub struct SemaphorePermit<'a> {
    semaphore: &'a Semaphore,
}

impl Drop for SemaphorePermit<'_> {
    fn drop(&mut self) {
        let mut permits = self.semaphore.permits.lock().expect("semaphore poisoned");
        *permits += 1;
        self.semaphore.available.notify_one();
    }
}
