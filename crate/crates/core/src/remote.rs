//! Minimal JSON-over-HTTP client shared by the remote scorer and oracle.

use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, Clone, thiserror::Error)]
pub enum RemoteError {
    #[error("transport error calling {url}: {message}")]
    Transport { url: String, message: String },
    #[error("{url} answered HTTP {status}: {body}")]
    Status { url: String, status: u16, body: String },
    #[error("undecodable response from {url}: {message}")]
    Decode { url: String, message: String },
}

impl RemoteError {
    fn retryable(&self) -> bool {
        match self {
            RemoteError::Transport { .. } => true,
            RemoteError::Status { status, .. } => *status == 503 || *status == 429,
            RemoteError::Decode { .. } => false,
        }
    }
}

/// Blocking client; safe to share between threads.
#[derive(Debug, Clone)]
pub struct JsonClient {
    agent: ureq::Agent,
    base_url: String,
    attempts: u32,
    backoff: Duration,
}

impl JsonClient {
    pub fn new(base_url: &str) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(5))
            .timeout(Duration::from_secs(120))
            .build();
        Self {
            agent,
            base_url: base_url.trim_end_matches('/').to_string(),
            attempts: 3,
            backoff: Duration::from_millis(50),
        }
    }

    /// Total attempts per request (at least one) and the initial backoff,
    /// doubled after each failed attempt.
    pub fn with_retries(mut self, attempts: u32, backoff: Duration) -> Self {
        self.attempts = attempts.max(1);
        self.backoff = backoff;
        self
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    pub fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> Result<Resp, RemoteError> {
        let url = format!("{}{}", self.base_url, path);
        let mut delay = self.backoff;
        let mut last = None;
        for attempt in 0..self.attempts {
            if attempt > 0 {
                thread::sleep(delay);
                delay *= 2;
            }
            match self.post_once(&url, body) {
                Ok(resp) => return Ok(resp),
                Err(err) if err.retryable() => last = Some(err),
                Err(err) => return Err(err),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn post_once<Req: Serialize, Resp: DeserializeOwned>(&self, url: &str, body: &Req) -> Result<Resp, RemoteError> {
        let response = match self.agent.post(url).send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(status, r)) => {
                return Err(RemoteError::Status {
                    url: url.to_string(),
                    status,
                    body: r.into_string().unwrap_or_default(),
                })
            }
            Err(err) => {
                return Err(RemoteError::Transport {
                    url: url.to_string(),
                    message: err.to_string(),
                })
            }
        };
        response.into_json().map_err(|err| RemoteError::Decode {
            url: url.to_string(),
            message: err.to_string(),
        })
    }
}
