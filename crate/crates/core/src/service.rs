//! Local JSON API over loaded frames and computed indicators.
//!
//! All state lives in memory and is lost on restart. Error bodies have the
//! shape `{"error": {"code": "...", "message": "..."}}`.

use std::collections::HashMap;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use crate::indicators::{compute_indicator, IndicatorError};
use crate::ingest::{self, IngestError};
use crate::model::{parse_symbol, IndicatorSpec, ModelError, Period, TimeSeriesFrame};
use crate::remote::{QuoteCache, RemoteError};

pub const DEFAULT_PORT: u16 = 8777;
pub const DEFAULT_PERIOD: usize = 20;
pub const DEFAULT_UPLOAD_LIMIT: usize = 50 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: IpAddr,
    pub port: u16,
    pub default_period: Period,
    pub max_upload_bytes: usize,
    /// Built web UI served at `/` when set.
    pub ui_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: DEFAULT_PORT,
            default_period: Period::new(DEFAULT_PERIOD).expect("positive"),
            max_upload_bytes: DEFAULT_UPLOAD_LIMIT,
            ui_dir: None,
        }
    }
}

/// Session state shared by all handlers.
pub struct AppState {
    frames: RwLock<HashMap<String, Arc<TimeSeriesFrame>>>,
    default_period: RwLock<Period>,
    quotes: QuoteCache,
}

impl AppState {
    pub fn new(quotes: QuoteCache, default_period: Period) -> Self {
        AppState {
            frames: RwLock::new(HashMap::new()),
            default_period: RwLock::new(default_period),
            quotes,
        }
    }

    pub fn default_period(&self) -> Period {
        *self.default_period.read().expect("lock poisoned")
    }

    /// Stores `frame` under `name`, replacing any previous frame whole.
    pub fn insert_frame(&self, name: &str, frame: Arc<TimeSeriesFrame>) {
        self.frames
            .write()
            .expect("lock poisoned")
            .insert(name.to_string(), frame);
    }

    pub fn frame(&self, name: &str) -> Option<Arc<TimeSeriesFrame>> {
        self.frames.read().expect("lock poisoned").get(name).cloned()
    }

    fn frame_or_404(&self, name: &str) -> Result<Arc<TimeSeriesFrame>, ApiError> {
        self.frame(name).ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "frame-not-found",
                format!("no frame named '{name}'"),
            )
        })
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        ApiError::bad_request(e.code(), e.to_string())
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        let status = match e {
            ModelError::UnknownColumn { .. } => StatusCode::NOT_FOUND,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<IndicatorError> for ApiError {
    fn from(e: IndicatorError) -> Self {
        match e {
            IndicatorError::Model(m) => m.into(),
            other => ApiError::bad_request(other.code(), other.to_string()),
        }
    }
}

impl From<RemoteError> for ApiError {
    fn from(e: RemoteError) -> Self {
        let status = match e {
            RemoteError::UnknownSymbol(_) => StatusCode::NOT_FOUND,
            RemoteError::InvalidTemplate(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_GATEWAY,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

#[derive(Debug, Serialize)]
struct DateRange {
    from: NaiveDate,
    to: NaiveDate,
}

#[derive(Debug, Serialize)]
struct FrameSummary {
    name: String,
    row_count: usize,
    date_range: Option<DateRange>,
    columns: Vec<String>,
    source: String,
    stale: bool,
}

impl FrameSummary {
    fn of(name: &str, frame: &TimeSeriesFrame, stale: bool) -> Self {
        FrameSummary {
            name: name.to_string(),
            row_count: frame.len(),
            date_range: frame
                .dates()
                .first()
                .zip(frame.dates().last())
                .map(|(f, t)| DateRange { from: *f, to: *t }),
            columns: frame.column_names().map(str::to_string).collect(),
            source: frame.source_label().to_string(),
            stale,
        }
    }
}

pub fn router(state: Arc<AppState>, config: &ServiceConfig) -> Router {
    let api = Router::new()
        .route("/api/frames", get(list_frames).post(upload_frame))
        .route("/api/frames/:name", get(frame_rows))
        .route("/api/frames/:name/indicators", get(frame_indicators))
        .route("/api/quotes/:symbol", get(fetch_quote))
        .route("/api/config", get(get_config).put(put_config))
        .layer(DefaultBodyLimit::max(config.max_upload_bytes))
        .with_state(state);
    match &config.ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(index)),
    }
}

async fn index() -> Html<&'static str> {
    Html(
        "<!doctype html><title>mova</title><h1>mova</h1>\
         <p>No web UI directory configured. The JSON API lives under <code>/api</code>.</p>",
    )
}

async fn list_frames(State(state): State<Arc<AppState>>) -> Json<Vec<FrameSummary>> {
    let frames = state.frames.read().expect("lock poisoned");
    let mut out: Vec<FrameSummary> = frames
        .iter()
        .map(|(name, f)| FrameSummary::of(name, f, false))
        .collect();
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Json(out)
}

#[derive(Debug, Deserialize)]
struct UploadQuery {
    name: Option<String>,
}

fn payload_error(status: StatusCode, message: String) -> ApiError {
    if status == StatusCode::PAYLOAD_TOO_LARGE {
        ApiError::new(status, "payload-too-large", message)
    } else {
        ApiError::bad_request("bad-upload", message)
    }
}

/// Accepts `multipart/form-data` (a `name` field plus one file field) or a
/// raw CSV body with `?name=`.
async fn upload_frame(
    State(state): State<Arc<AppState>>,
    Query(query): Query<UploadQuery>,
    request: Request,
) -> Result<(StatusCode, Json<FrameSummary>), ApiError> {
    let is_multipart = request
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));

    let mut name = query.name;
    let body: Bytes = if is_multipart {
        let mut multipart = Multipart::from_request(request, &())
            .await
            .map_err(|e| payload_error(e.status(), e.body_text()))?;
        let mut file = None;
        while let Some(field) = multipart
            .next_field()
            .await
            .map_err(|e| payload_error(e.status(), e.body_text()))?
        {
            let is_name = field.name() == Some("name") && field.file_name().is_none();
            let bytes = field
                .bytes()
                .await
                .map_err(|e| payload_error(e.status(), e.body_text()))?;
            if is_name {
                name = Some(String::from_utf8_lossy(&bytes).trim().to_string());
            } else if file.is_none() {
                file = Some(bytes);
            }
        }
        file.ok_or_else(|| ApiError::bad_request("bad-upload", "multipart body has no file field"))?
    } else {
        Bytes::from_request(request, &())
            .await
            .map_err(|e| payload_error(e.status(), e.body_text()))?
    };

    let name = name
        .filter(|n| !n.is_empty() && !n.contains('/'))
        .ok_or_else(|| ApiError::bad_request("missing-name", "a non-empty 'name' without '/' is required"))?;
    let frame = ingest::load_csv(body.as_ref(), &name)?;
    let summary = FrameSummary::of(&name, &frame, false);
    state.insert_frame(&name, Arc::new(frame));
    Ok((StatusCode::CREATED, Json(summary)))
}

#[derive(Debug, Deserialize)]
struct RangeQuery {
    from: Option<String>,
    to: Option<String>,
}

fn parse_bound(text: Option<&str>, which: &str) -> Result<Option<NaiveDate>, ApiError> {
    text.map(|t| {
        ingest::parse_date(t)
            .map_err(|_| ApiError::bad_request("malformed-date", format!("'{which}' bound '{t}' is not a date")))
    })
    .transpose()
}

async fn frame_rows(
    State(state): State<Arc<AppState>>,
    Path(name): Path<String>,
    Query(range): Query<RangeQuery>,
) -> Result<Json<Value>, ApiError> {
    let frame = state.frame_or_404(&name)?;
    let from = parse_bound(range.from.as_deref(), "from")?;
    let to = parse_bound(range.to.as_deref(), "to")?;
    if let (Some(f), Some(t)) = (from, to) {
        if f > t {
            return Err(ApiError::bad_request(
                "invalid-range",
                format!("'from' {f} is after 'to' {t}"),
            ));
        }
    }
    let window = frame.slice_dates(from, to);
    let rows: Vec<Value> = (0..window.len())
        .map(|i| {
            let mut row = Map::new();
            row.insert("date".into(), json!(window.dates()[i]));
            for c in window.columns() {
                row.insert(c.name.clone(), json!(c.values[i]));
            }
            Value::Object(row)
        })
        .collect();
    Ok(Json(json!({
        "name": name,
        "columns": window.column_names().collect::<Vec<_>>(),
        "rows": rows,
    })))
}

#[derive(Debug, Deserialize)]
struct IndicatorQuery {
    spec: Option<String>,
}

#[derive(Debug, Serialize)]
struct IndicatorPayload {
    label: String,
    kind: crate::model::IndicatorKind,
    period: usize,
    column: String,
    warmup_len: usize,
    values: Vec<Option<f64>>,
}

async fn frame_indicators(
    State(state): State<Arc<AppState>>,
    Path(name): Path<String>,
    Query(query): Query<IndicatorQuery>,
) -> Result<Json<Value>, ApiError> {
    let frame = state.frame_or_404(&name)?;
    let default_period = state.default_period();
    let specs = match query.spec.as_deref().map(str::trim) {
        None | Some("") => IndicatorSpec::default_set(default_period),
        Some(text) => IndicatorSpec::parse_list(text, Some(default_period))?,
    };
    let indicators = specs
        .iter()
        .map(|spec| {
            let series = compute_indicator(&frame, spec)?;
            Ok(IndicatorPayload {
                label: series.label(),
                kind: spec.kind,
                period: spec.period.get(),
                column: spec.source_column.clone(),
                warmup_len: series.warmup_len,
                values: series.values,
            })
        })
        .collect::<Result<Vec<_>, ApiError>>()?;
    Ok(Json(json!({
        "name": name,
        "dates": frame.dates(),
        "indicators": indicators,
    })))
}

async fn fetch_quote(
    State(state): State<Arc<AppState>>,
    Path(symbol): Path<String>,
) -> Result<Json<FrameSummary>, ApiError> {
    let symbol = parse_symbol(&symbol)?;
    let quote = state.quotes.get_or_fetch(&symbol).await?;
    let name = symbol.rendered();
    state.insert_frame(&name, quote.frame.clone());
    Ok(Json(FrameSummary::of(&name, &quote.frame, quote.stale)))
}

#[derive(Debug, Serialize, Deserialize)]
struct ConfigBody {
    default_period: i64,
}

async fn get_config(State(state): State<Arc<AppState>>) -> Json<ConfigBody> {
    Json(ConfigBody {
        default_period: state.default_period().get() as i64,
    })
}

async fn put_config(
    State(state): State<Arc<AppState>>,
    body: Result<Json<ConfigBody>, JsonRejection>,
) -> Result<Json<ConfigBody>, ApiError> {
    let Json(body) = body.map_err(|e| ApiError::bad_request("malformed-body", e.body_text()))?;
    let period = Period::try_from(body.default_period)?;
    *state.default_period.write().expect("lock poisoned") = period;
    Ok(Json(ConfigBody {
        default_period: period.get() as i64,
    }))
}

/// Binds the listener described by `config`; port 0 picks a free port.
pub async fn bind(config: &ServiceConfig) -> std::io::Result<TcpListener> {
    TcpListener::bind(SocketAddr::new(config.bind, config.port)).await
}

/// Serves until `shutdown` resolves.
pub async fn serve<F>(listener: TcpListener, app: Router, shutdown: F) -> std::io::Result<()>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
