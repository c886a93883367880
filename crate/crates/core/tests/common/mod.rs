#![allow(dead_code)]

use std::collections::VecDeque;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use chrono::{Duration as Days, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use tokio::net::TcpListener;
use tokio::sync::oneshot;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

pub fn sample_text() -> String {
    std::fs::read_to_string(fixture("ebay_us.csv")).unwrap()
}

pub fn sample_frame() -> mova::TimeSeriesFrame {
    mova::ingest::load_csv(sample_text().as_bytes(), "sample").unwrap()
}

// ---- oracles -------------------------------------------------------------

/// Sum within one ulp of exact (Shewchuk partials, largest first).
pub fn fsum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut kept = 0;
        for i in 0..partials.len() {
            let mut y = partials[i];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }
    partials.iter().rev().fold(0.0, |acc, p| acc + p)
}

/// Exact product split, so the weighted oracle sums exact terms.
fn exact_product(a: f64, b: f64) -> [f64; 2] {
    let p = a * b;
    [p, a.mul_add(b, -p)]
}

/// Per-window recomputation of SMA; None where any window value is not finite.
pub fn naive_sma(values: &[f64], n: usize) -> Vec<Option<f64>> {
    (0..values.len())
        .map(|i| {
            if i + 1 < n {
                return None;
            }
            let w = &values[i + 1 - n..=i];
            if w.iter().any(|v| !v.is_finite()) {
                return None;
            }
            Some(fsum(w.iter().copied()) / n as f64)
        })
        .collect()
}

/// Per-window dot product with weights 1..n, newest weighted n.
pub fn naive_wma(values: &[f64], n: usize) -> Vec<Option<f64>> {
    let denom = (n * (n + 1) / 2) as f64;
    (0..values.len())
        .map(|i| {
            if i + 1 < n {
                return None;
            }
            let w = &values[i + 1 - n..=i];
            if w.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let terms = w
                .iter()
                .enumerate()
                .flat_map(|(j, &x)| exact_product(x, (j + 1) as f64));
            Some(fsum(terms) / denom)
        })
        .collect()
}

/// Textbook recursion: SMA seed over n consecutive defined values, then
/// q·x + (1−q)·prev; a gap restarts seeding.
pub fn naive_ema(values: &[f64], n: usize) -> Vec<Option<f64>> {
    let q = 2.0 / (n as f64 + 1.0);
    let mut out = Vec::with_capacity(values.len());
    let mut run: Vec<f64> = Vec::new();
    let mut prev: Option<f64> = None;
    for &x in values {
        if !x.is_finite() {
            run.clear();
            prev = None;
            out.push(None);
            continue;
        }
        match prev {
            Some(p) => {
                let e = q * x + (1.0 - q) * p;
                prev = Some(e);
                out.push(Some(e));
            }
            None => {
                run.push(x);
                if run.len() == n {
                    let seed = fsum(run.iter().copied()) / n as f64;
                    prev = Some(seed);
                    out.push(Some(seed));
                } else {
                    out.push(None);
                }
            }
        }
    }
    out
}

pub fn rel_close(got: f64, want: f64, tol: f64) -> bool {
    if got == want {
        return true;
    }
    (got - want).abs() <= tol * want.abs().max(f64::MIN_POSITIVE)
}

/// First mismatch between two optional series under `tol` relative, as text.
pub fn compare_series(got: &[Option<f64>], want: &[Option<f64>], tol: f64) -> Result<(), String> {
    if got.len() != want.len() {
        return Err(format!("length {} != {}", got.len(), want.len()));
    }
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        match (g, w) {
            (None, None) => {}
            (Some(g), Some(w)) if rel_close(*g, *w, tol) => {}
            _ => return Err(format!("index {i}: got {g:?}, want {w:?}")),
        }
    }
    Ok(())
}

pub fn bitwise_eq(a: &[Option<f64>], b: &[Option<f64>]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| match (x, y) {
            (None, None) => true,
            (Some(x), Some(y)) => x.to_bits() == y.to_bits(),
            _ => false,
        })
}

// ---- stub quote endpoint ---------------------------------------------------

#[derive(Debug, Clone)]
pub enum Reply {
    Body(String),
    Status(u16),
    Slow(Duration, String),
}

struct StubShared {
    hits: AtomicUsize,
    script: Mutex<VecDeque<Reply>>,
    fallback: Mutex<Reply>,
    paths: Mutex<Vec<String>>,
}

/// Local HTTP server standing in for the quote provider. Replies are taken
/// from the script in order, then the fallback repeats.
pub struct Stub {
    pub addr: SocketAddr,
    shared: Arc<StubShared>,
    stop: Option<oneshot::Sender<()>>,
    runtime: Option<tokio::runtime::Runtime>,
}

impl Stub {
    pub async fn start(fallback: Reply) -> Stub {
        let (addr, shared, stop) = launch(fallback).await;
        Stub {
            addr,
            shared,
            stop: Some(stop),
            runtime: None,
        }
    }

    /// For synchronous tests: runs the server on its own runtime.
    pub fn start_blocking(fallback: Reply) -> Stub {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(1)
            .enable_all()
            .build()
            .unwrap();
        let (addr, shared, stop) = rt.block_on(launch(fallback));
        Stub {
            addr,
            shared,
            stop: Some(stop),
            runtime: Some(rt),
        }
    }

    pub fn template(&self) -> String {
        format!("http://{}/q/{{symbol}}.csv", self.addr)
    }

    pub fn hits(&self) -> usize {
        self.shared.hits.load(Ordering::SeqCst)
    }

    pub fn paths(&self) -> Vec<String> {
        self.shared.paths.lock().unwrap().clone()
    }

    pub fn script(&self, replies: impl IntoIterator<Item = Reply>) {
        self.shared.script.lock().unwrap().extend(replies);
    }

    pub fn set_fallback(&self, reply: Reply) {
        *self.shared.fallback.lock().unwrap() = reply;
    }
}

impl Drop for Stub {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_background();
        }
    }
}

async fn launch(fallback: Reply) -> (SocketAddr, Arc<StubShared>, oneshot::Sender<()>) {
    let shared = Arc::new(StubShared {
        hits: AtomicUsize::new(0),
        script: Mutex::new(VecDeque::new()),
        fallback: Mutex::new(fallback),
        paths: Mutex::new(Vec::new()),
    });
    let app = Router::new().route("/q/:file", get(reply)).with_state(shared.clone());
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = oneshot::channel::<()>();
    tokio::spawn(async move {
        let _ = axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await;
    });
    (addr, shared, tx)
}

async fn reply(State(shared): State<Arc<StubShared>>, Path(file): Path<String>) -> Response {
    shared.hits.fetch_add(1, Ordering::SeqCst);
    shared.paths.lock().unwrap().push(file);
    let next = shared
        .script
        .lock()
        .unwrap()
        .pop_front()
        .unwrap_or_else(|| shared.fallback.lock().unwrap().clone());
    match next {
        Reply::Body(text) => text.into_response(),
        Reply::Status(code) => StatusCode::from_u16(code).unwrap().into_response(),
        Reply::Slow(delay, text) => {
            tokio::time::sleep(delay).await;
            text.into_response()
        }
    }
}

// ---- HTTP client helpers for the service -----------------------------------

pub const BOUNDARY: &str = "mova-test-boundary";

pub fn multipart_body(name: &str, filename: &str, csv: &str) -> Vec<u8> {
    format!(
        "--{b}\r\nContent-Disposition: form-data; name=\"name\"\r\n\r\n{name}\r\n\
         --{b}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"{filename}\"\r\n\
         Content-Type: text/csv\r\n\r\n{csv}\r\n--{b}--\r\n",
        b = BOUNDARY
    )
    .into_bytes()
}

pub fn multipart_content_type() -> String {
    format!("multipart/form-data; boundary={BOUNDARY}")
}

// ---- random CSV generator ----------------------------------------------------

fn render_value<R: Rng>(rng: &mut R, v: f64) -> String {
    match rng.gen_range(0..4) {
        0 => format!("{v}"),
        1 => format!("{v:e}"),
        2 => format!("{v:.2}"),
        _ => format!("{}", v.round() as i64),
    }
}

/// A valid CSV in one of several shapes: full OHLC (optionally with Volume
/// and an extra column, odd header casing), a single series, or a partial
/// OHLC set. Rows are shuffled; dates use one format per file.
pub fn random_csv<R: Rng>(rng: &mut R) -> String {
    let dmy = rng.gen_bool(0.5);
    let rows = rng.gen_range(0..60);
    let origin = NaiveDate::from_ymd_opt(1990, 1, 1).unwrap();
    let mut offsets: Vec<i64> = (0..rows).map(|_| rng.gen_range(0..15_000)).collect();
    offsets.sort_unstable();
    offsets.dedup();
    offsets.shuffle(rng);

    let shape = rng.gen_range(0..3);
    let header: Vec<String> = match shape {
        0 => {
            let mut h: Vec<String> = ["Open", "High", "Low", "Close"]
                .iter()
                .map(|c| match rng.gen_range(0..3) {
                    0 => c.to_string(),
                    1 => c.to_lowercase(),
                    _ => format!(" {} ", c.to_uppercase()),
                })
                .collect();
            h.shuffle(rng);
            if rng.gen_bool(0.5) {
                h.push("Volume".into());
            }
            if rng.gen_bool(0.3) {
                h.push("Signal".into());
            }
            h
        }
        1 => vec!["Temp".into()],
        _ => vec!["Price".into(), "Close".into()],
    };

    let mut out = String::from("Date");
    for h in &header {
        out.push(',');
        out.push_str(h);
    }
    out.push('\n');
    for off in offsets {
        let date = origin + Days::days(off);
        out.push_str(&if dmy {
            date.format("%d.%m.%Y").to_string()
        } else {
            date.format("%Y-%m-%d").to_string()
        });
        let base: f64 = rng.gen_range(-1e5..1e5);
        let low = base - rng.gen_range(0.0..50.0);
        let high = base + rng.gen_range(0.0..50.0);
        for h in &header {
            out.push(',');
            let v = match h.trim().to_lowercase().as_str() {
                "low" => low,
                "high" => high,
                "open" | "close" if shape == 0 => rng.gen_range(low..=high),
                "volume" => rng.gen_range(0..10_000_000) as f64,
                _ => {
                    if rng.gen_bool(0.05) {
                        continue;
                    }
                    rng.gen_range(-1e6..1e6)
                }
            };
            // render, then make sure OHLC ordering survives the rounding
            let text = render_value(rng, v);
            let text = if shape == 0 && ["low", "high", "open", "close"].contains(&h.trim().to_lowercase().as_str()) {
                format!("{v}")
            } else {
                text
            };
            out.push_str(&text);
        }
        out.push('\n');
    }
    out
}

/// Dates, column names and every value compared bit for bit.
pub fn frames_identical(a: &mova::TimeSeriesFrame, b: &mova::TimeSeriesFrame) -> bool {
    a.dates() == b.dates()
        && a.column_names().eq(b.column_names())
        && a.columns()
            .iter()
            .zip(b.columns())
            .all(|(x, y)| bitwise_eq(&x.values, &y.values))
}

// ---- service under test ------------------------------------------------------

pub struct Service {
    pub base: String,
    stop: Option<oneshot::Sender<()>>,
}

impl Service {
    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
    }
}

/// Runs the API on a free loopback port with quotes served from `template`.
pub async fn spawn_service(template: &str, max_upload_bytes: usize) -> Service {
    use mova::remote::{QuoteCache, QuoteClient, RemoteEndpointConfig};
    use mova::service::{self, AppState, ServiceConfig};

    let mut endpoint = RemoteEndpointConfig::new(template).unwrap();
    endpoint.backoff = Duration::from_millis(5);
    endpoint.max_retries = 1;
    let cache = QuoteCache::new(QuoteClient::new(endpoint), Duration::from_secs(60));
    let config = ServiceConfig {
        port: 0,
        max_upload_bytes,
        ..ServiceConfig::default()
    };
    let state = Arc::new(AppState::new(cache, config.default_period));
    let app = service::router(state, &config);
    let listener = service::bind(&config).await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = oneshot::channel::<()>();
    tokio::spawn(service::serve(listener, app, async {
        let _ = rx.await;
    }));
    Service {
        base: format!("http://{addr}"),
        stop: Some(tx),
    }
}

/// Response status plus parsed JSON (Null for non-JSON bodies).
pub async fn send(req: reqwest::RequestBuilder) -> (u16, serde_json::Value) {
    let resp = req.send().await.unwrap();
    let status = resp.status().as_u16();
    let bytes = resp.bytes().await.unwrap();
    (
        status,
        serde_json::from_slice(&bytes).unwrap_or(serde_json::Value::Null),
    )
}

pub async fn upload(client: &reqwest::Client, svc: &Service, name: &str, csv: &str) -> (u16, serde_json::Value) {
    send(
        client
            .post(svc.url("/api/frames"))
            .header("content-type", multipart_content_type())
            .body(multipart_body(name, "data.csv", csv)),
    )
    .await
}
