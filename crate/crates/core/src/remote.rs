//! Daily quote download from a Stooq-style CSV endpoint, with an in-memory
//! TTL cache.
//!
//! The endpoint is a URL template holding one `{symbol}` placeholder, so a
//! local stub or another provider can stand in for Stooq. Concurrent misses
//! for the same symbol share one request. When a refresh fails and an older
//! entry exists, that entry is served with `stale = true`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use async_trait::async_trait;
use thiserror::Error;

use crate::ingest::{self, IngestError};
use crate::model::{SymbolRef, TimeSeriesFrame};

pub const SYMBOL_PLACEHOLDER: &str = "{symbol}";
pub const STOOQ_DAILY_TEMPLATE: &str = "https://stooq.com/q/d/l/?s={symbol}&i=d";
pub const DEFAULT_TTL: Duration = Duration::from_secs(15 * 60);
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);
pub const DEFAULT_MAX_RETRIES: u32 = 2;
pub const DEFAULT_BACKOFF: Duration = Duration::from_millis(500);
pub const MAX_RESPONSE_BYTES: usize = 50 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RemoteError {
    #[error("invalid endpoint template '{0}': it must contain exactly one {{symbol}} placeholder")]
    InvalidTemplate(String),
    #[error("network failure fetching {symbol} after {attempts} attempt(s): {message}")]
    NetworkFailure {
        symbol: String,
        attempts: u32,
        message: String,
    },
    #[error("unknown symbol {0}: the endpoint returned no data")]
    UnknownSymbol(String),
    #[error("malformed payload for {symbol}: {source}")]
    MalformedPayload {
        symbol: String,
        #[source]
        source: IngestError,
    },
    #[error("response for {symbol} exceeds the {limit}-byte cap")]
    PayloadTooLarge { symbol: String, limit: usize },
}

impl RemoteError {
    pub fn code(&self) -> &'static str {
        match self {
            RemoteError::InvalidTemplate(_) => "invalid-endpoint",
            RemoteError::NetworkFailure { .. } => "network-failure",
            RemoteError::UnknownSymbol(_) => "unknown-symbol",
            RemoteError::MalformedPayload { .. } => "malformed-payload",
            RemoteError::PayloadTooLarge { .. } => "payload-too-large",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteEndpointConfig {
    url_template: String,
    pub timeout: Duration,
    pub max_retries: u32,
    /// Delay before the first retry; doubled for each further retry.
    pub backoff: Duration,
    pub max_response_bytes: usize,
}

impl RemoteEndpointConfig {
    pub fn new(url_template: impl Into<String>) -> Result<Self, RemoteError> {
        let url_template = url_template.into();
        if url_template.matches(SYMBOL_PLACEHOLDER).count() != 1 {
            return Err(RemoteError::InvalidTemplate(url_template));
        }
        Ok(RemoteEndpointConfig {
            url_template,
            timeout: DEFAULT_TIMEOUT,
            max_retries: DEFAULT_MAX_RETRIES,
            backoff: DEFAULT_BACKOFF,
            max_response_bytes: MAX_RESPONSE_BYTES,
        })
    }

    pub fn url_template(&self) -> &str {
        &self.url_template
    }

    /// Stooq expects lower-case symbols.
    pub fn url_for(&self, symbol: &SymbolRef) -> String {
        self.url_template
            .replace(SYMBOL_PLACEHOLDER, &symbol.rendered().to_lowercase())
    }
}

impl Default for RemoteEndpointConfig {
    fn default() -> Self {
        RemoteEndpointConfig::new(STOOQ_DAILY_TEMPLATE).expect("valid built-in template")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("body exceeds {0} bytes")]
    TooLarge(usize),
    #[error("{0}")]
    Other(String),
}

/// One HTTP GET. Implemented over `reqwest` by [`HttpTransport`]; tests may
/// substitute canned responses.
#[async_trait]
pub trait Transport: Send + Sync {
    async fn get(&self, url: &str, timeout: Duration, max_bytes: usize) -> Result<HttpResponse, TransportError>;
}

#[derive(Debug, Clone, Default)]
pub struct HttpTransport {
    client: reqwest::Client,
}

#[async_trait]
impl Transport for HttpTransport {
    async fn get(&self, url: &str, timeout: Duration, max_bytes: usize) -> Result<HttpResponse, TransportError> {
        let classify = |e: reqwest::Error| {
            if e.is_timeout() {
                TransportError::Timeout
            } else if e.is_connect() {
                TransportError::Connect(e.to_string())
            } else {
                TransportError::Other(e.to_string())
            }
        };
        let read = async {
            let mut response = self.client.get(url).send().await.map_err(classify)?;
            let status = response.status().as_u16();
            if response.content_length().is_some_and(|n| n as usize > max_bytes) {
                return Err(TransportError::TooLarge(max_bytes));
            }
            let mut body = Vec::new();
            while let Some(chunk) = response.chunk().await.map_err(classify)? {
                if body.len() + chunk.len() > max_bytes {
                    return Err(TransportError::TooLarge(max_bytes));
                }
                body.extend_from_slice(&chunk);
            }
            Ok(HttpResponse { status, body })
        };
        tokio::time::timeout(timeout, read)
            .await
            .unwrap_or(Err(TransportError::Timeout))
    }
}

/// Downloads and parses daily history for one symbol.
#[derive(Clone)]
pub struct QuoteClient {
    config: RemoteEndpointConfig,
    transport: Arc<dyn Transport>,
}

impl QuoteClient {
    pub fn new(config: RemoteEndpointConfig) -> Self {
        QuoteClient::with_transport(config, Arc::new(HttpTransport::default()))
    }

    pub fn with_transport(config: RemoteEndpointConfig, transport: Arc<dyn Transport>) -> Self {
        QuoteClient { config, transport }
    }

    pub fn config(&self) -> &RemoteEndpointConfig {
        &self.config
    }

    /// Fetches `symbol`, retrying transport failures and 5xx responses up to
    /// `max_retries` times with exponential backoff.
    pub async fn fetch(&self, symbol: &SymbolRef) -> Result<TimeSeriesFrame, RemoteError> {
        let rendered = symbol.rendered();
        let url = self.config.url_for(symbol);
        let mut attempts = 0;
        let mut delay = self.config.backoff;
        loop {
            attempts += 1;
            let failure = match self
                .transport
                .get(&url, self.config.timeout, self.config.max_response_bytes)
                .await
            {
                Ok(response) if (200..300).contains(&response.status) => {
                    return parse_payload(&rendered, &response.body)
                }
                Ok(response) if response.status == 404 => return Err(RemoteError::UnknownSymbol(rendered)),
                Ok(response) if response.status >= 500 => format!("HTTP {}", response.status),
                Ok(response) => {
                    return Err(RemoteError::NetworkFailure {
                        symbol: rendered,
                        attempts,
                        message: format!("HTTP {}", response.status),
                    })
                }
                Err(TransportError::TooLarge(limit)) => {
                    return Err(RemoteError::PayloadTooLarge {
                        symbol: rendered,
                        limit,
                    })
                }
                Err(e) => e.to_string(),
            };
            if attempts > self.config.max_retries {
                return Err(RemoteError::NetworkFailure {
                    symbol: rendered,
                    attempts,
                    message: failure,
                });
            }
            tokio::time::sleep(delay).await;
            delay *= 2;
        }
    }
}

fn parse_payload(symbol: &str, body: &[u8]) -> Result<TimeSeriesFrame, RemoteError> {
    let text = String::from_utf8_lossy(body);
    let trimmed = text.trim();
    if trimmed.is_empty() || trimmed.to_ascii_lowercase().starts_with("no data") {
        return Err(RemoteError::UnknownSymbol(symbol.to_string()));
    }
    ingest::load_csv(body, symbol).map_err(|source| RemoteError::MalformedPayload {
        symbol: symbol.to_string(),
        source,
    })
}

/// A cached frame. `stale` is set when the entry outlived its TTL and the
/// refresh failed.
#[derive(Debug, Clone)]
pub struct CachedQuote {
    pub frame: Arc<TimeSeriesFrame>,
    pub stale: bool,
    pub age: Duration,
}

#[derive(Debug)]
struct Entry {
    frame: Arc<TimeSeriesFrame>,
    fetched_at: Instant,
}

type Slot = Arc<tokio::sync::Mutex<Option<Entry>>>;

/// In-memory store of downloaded frames keyed by rendered symbol.
pub struct QuoteCache {
    client: QuoteClient,
    ttl: Duration,
    slots: Mutex<HashMap<String, Slot>>,
}

impl QuoteCache {
    pub fn new(client: QuoteClient, ttl: Duration) -> Self {
        QuoteCache {
            client,
            ttl,
            slots: Mutex::new(HashMap::new()),
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn client(&self) -> &QuoteClient {
        &self.client
    }

    fn slot(&self, key: &str) -> Slot {
        let mut slots = self.slots.lock().expect("cache map poisoned");
        slots.entry(key.to_string()).or_default().clone()
    }

    /// Returns the cached frame while fresh, otherwise fetches and stores a
    /// new one. Callers racing on the same symbol wait for a single fetch.
    pub async fn get_or_fetch(&self, symbol: &SymbolRef) -> Result<CachedQuote, RemoteError> {
        let slot = self.slot(&symbol.rendered());
        let mut entry = slot.lock().await;
        if let Some(e) = entry.as_ref() {
            let age = e.fetched_at.elapsed();
            if age < self.ttl {
                return Ok(CachedQuote {
                    frame: e.frame.clone(),
                    stale: false,
                    age,
                });
            }
        }
        match self.client.fetch(symbol).await {
            Ok(frame) => {
                let frame = Arc::new(frame);
                *entry = Some(Entry {
                    frame: frame.clone(),
                    fetched_at: Instant::now(),
                });
                Ok(CachedQuote {
                    frame,
                    stale: false,
                    age: Duration::ZERO,
                })
            }
            Err(err) => match entry.as_ref() {
                Some(e) => Ok(CachedQuote {
                    frame: e.frame.clone(),
                    stale: true,
                    age: e.fetched_at.elapsed(),
                }),
                None => Err(err),
            },
        }
    }

    /// Number of symbols holding a frame.
    pub async fn len(&self) -> usize {
        let slots: Vec<Slot> = self
            .slots
            .lock()
            .expect("cache map poisoned")
            .values()
            .cloned()
            .collect();
        let mut n = 0;
        for slot in slots {
            n += usize::from(slot.lock().await.is_some());
        }
        n
    }

    pub async fn is_empty(&self) -> bool {
        self.len().await == 0
    }
}
