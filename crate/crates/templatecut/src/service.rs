//! HTTP service: upload a field, render slices, segment from a seed,
//! download the mask.
//!
//! Routes:
//! - `POST /sessions` with a PGM or inline-volume body
//! - `GET /sessions/{id}/slice?axis=z&index=k&window=lo,hi`
//! - `POST /sessions/{id}/segment` with a JSON body
//! - `GET /sessions/{id}/mask`
//! - `GET /templates`
//!
//! Segment responses carry the wall time in the `X-Runtime-Ms` header so the
//! JSON body stays identical for identical requests.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use templatecut_core::{iterate_seed, segment, Dim, ScalarField, SegmentationResult, TemplateShape};

use crate::formats;
use crate::io;
use crate::params::{builtin_template, seed_quality, seed_to_world, SegmentParams, BUILTIN_TEMPLATES};
use crate::slices::{mask_outline, render_slice, Axis};

#[derive(Debug, Clone, clap::Args)]
pub struct ServeArgs {
    #[arg(long, env = "TEMPLATECUT_BIND", default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Idle session lifetime, seconds.
    #[arg(long, env = "TEMPLATECUT_TTL_SECS", default_value_t = 1800)]
    pub ttl_secs: u64,
    /// Upload size cap, megabytes.
    #[arg(long, env = "TEMPLATECUT_MAX_UPLOAD_MB", default_value_t = 512)]
    pub max_upload_mb: usize,
    /// Extra template, `name=path.tpl`; repeatable.
    #[arg(long = "template", value_parser = parse_named_template)]
    pub templates: Vec<(String, String)>,
    /// Allowed browser origin; any origin when omitted.
    #[arg(long, env = "TEMPLATECUT_CORS_ORIGIN")]
    pub cors_origin: Option<String>,
    /// Segmentation request timeout, seconds.
    #[arg(long, default_value_t = 60)]
    pub timeout_secs: u64,
}

fn parse_named_template(s: &str) -> Result<(String, String), String> {
    s.split_once('=').map(|(n, p)| (n.to_string(), p.to_string())).ok_or_else(|| "expected name=path".into())
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub ttl: Duration,
    pub max_upload: usize,
    pub timeout: Duration,
    pub cors_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { ttl: Duration::from_secs(1800), max_upload: 512 << 20, timeout: Duration::from_secs(60), cors_origin: None }
    }
}

pub struct Session {
    pub field: Arc<ScalarField>,
    pub last_result: Option<Arc<SegmentationResult>>,
    pub created_at: std::time::SystemTime,
}

struct Entry {
    session: Arc<tokio::sync::Mutex<Session>>,
    last_access: Instant,
}

pub struct AppState {
    sessions: Mutex<HashMap<String, Entry>>,
    templates: BTreeMap<String, TemplateShape>,
    config: ServiceConfig,
}

impl AppState {
    pub fn new(config: ServiceConfig, extra: BTreeMap<String, TemplateShape>) -> Self {
        let mut templates: BTreeMap<String, TemplateShape> =
            BUILTIN_TEMPLATES.iter().map(|n| (n.to_string(), builtin_template(n).expect("built-in"))).collect();
        templates.extend(extra);
        AppState { sessions: Mutex::new(HashMap::new()), templates, config }
    }

    fn lookup(&self, id: &str) -> Option<Arc<tokio::sync::Mutex<Session>>> {
        let mut map = self.sessions.lock().expect("session map poisoned");
        let now = Instant::now();
        let ttl = self.config.ttl;
        map.retain(|_, e| now.duration_since(e.last_access) < ttl);
        let e = map.get_mut(id)?;
        e.last_access = now;
        Some(e.session.clone())
    }

    fn insert(&self, session: Session) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let mut map = self.sessions.lock().expect("session map poisoned");
        map.insert(id.clone(), Entry { session: Arc::new(tokio::sync::Mutex::new(session)), last_access: Instant::now() });
        id
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = match &state.config.cors_origin {
        Some(o) => CorsLayer::new()
            .allow_origin(AllowOrigin::exact(HeaderValue::from_str(o).unwrap_or(HeaderValue::from_static("null"))))
            .allow_methods(tower_http::cors::Any)
            .allow_headers(tower_http::cors::Any)
            .expose_headers([header::HeaderName::from_static("x-runtime-ms")]),
        None => CorsLayer::permissive().expose_headers([header::HeaderName::from_static("x-runtime-ms")]),
    };
    let limit = state.config.max_upload;
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/slice", get(get_slice))
        .route("/sessions/{id}/segment", post(post_segment))
        .route("/sessions/{id}/mask", get(get_mask))
        .route("/templates", get(get_templates))
        .layer(DefaultBodyLimit::max(limit))
        .layer(cors)
        .with_state(state)
}

fn error(status: StatusCode, token: &str, message: impl std::fmt::Display) -> Response {
    (status, Json(json!({"error": token, "message": message.to_string()}))).into_response()
}

fn not_found() -> Response {
    error(StatusCode::NOT_FOUND, "NotFound", "unknown or expired session")
}

/// Six significant digits.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    json!(rounded)
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let field = match tokio::task::spawn_blocking(move || io::parse_field(&body)).await {
        Ok(Ok(f)) => f,
        Ok(Err(e)) => return error(StatusCode::BAD_REQUEST, e.kind(), e),
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, "InternalError", e),
    };
    let grid = field.grid;
    let dims: Vec<usize> = grid.extents[..grid.dim.as_usize()].to_vec();
    let spacing = nums(&grid.spacing[..grid.dim.as_usize()]);
    let id = state.insert(Session { field: Arc::new(field), last_result: None, created_at: std::time::SystemTime::now() });
    (StatusCode::CREATED, Json(json!({"id": id, "dims": dims, "spacing": spacing}))).into_response()
}

#[derive(Debug, Deserialize)]
pub struct SliceQuery {
    pub axis: Option<String>,
    pub index: Option<usize>,
    pub window: Option<String>,
}

async fn get_slice(State(state): State<Arc<AppState>>, Path(id): Path<String>, Query(q): Query<SliceQuery>) -> Response {
    let Some(session) = state.lookup(&id) else { return not_found() };
    let field = session.lock().await.field.clone();
    let axis = match Axis::parse(q.axis.as_deref().unwrap_or("z")) {
        Some(a) => a,
        None => return error(StatusCode::UNPROCESSABLE_ENTITY, "InvalidAxis", "axis must be x, y or z"),
    };
    let (lo, hi) = match q.window.as_deref() {
        Some(w) => match w.split_once(',').map(|(a, b)| (a.trim().parse::<f64>(), b.trim().parse::<f64>())) {
            Some((Ok(a), Ok(b))) => (a, b),
            _ => return error(StatusCode::UNPROCESSABLE_ENTITY, "InvalidWindow", "window must be lo,hi"),
        },
        None => {
            let lo = field.values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = field.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, if hi > lo { hi } else { lo + 1.0 })
        }
    };
    match render_slice(&field, axis, q.index.unwrap_or(0), lo, hi) {
        Ok(bytes) => ([(header::CONTENT_TYPE, "image/x-portable-graymap")], bytes).into_response(),
        Err(e) => {
            let token = e.to_string().split(':').next().unwrap_or("InvalidSlice").to_string();
            error(StatusCode::UNPROCESSABLE_ENTITY, &token, e)
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TemplateRef {
    Name(String),
    Inline { tpl: String },
}

#[derive(Debug, Clone, Deserialize)]
pub struct IterateRequest {
    pub max_iters: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_eps() -> f64 {
    0.5
}

#[derive(Debug, Clone, Deserialize)]
pub struct SliceRequest {
    pub axis: String,
    pub index: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentRequest {
    /// Voxel indices.
    pub seed: Vec<f64>,
    pub template: TemplateRef,
    #[serde(rename = "R", alias = "rays")]
    pub rays: Option<usize>,
    pub level: Option<u32>,
    #[serde(rename = "P", alias = "nodes")]
    pub nodes: Option<usize>,
    pub delta: Option<usize>,
    pub scale: Option<f64>,
    pub d: Option<f64>,
    pub template_scale: Option<f64>,
    pub rotation: Option<f64>,
    pub iterate: Option<IterateRequest>,
    /// Slices to outline; default is the slice through the seed along z.
    pub slices: Option<Vec<SliceRequest>>,
}

fn validation(msg: &str) -> Response {
    let token = msg.split(':').next().unwrap_or("InvalidRequest");
    error(StatusCode::UNPROCESSABLE_ENTITY, token, msg)
}

async fn post_segment(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Response {
    let Some(session) = state.lookup(&id) else { return not_found() };
    let req: SegmentRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, "InvalidRequest", e),
    };
    // Same-session requests run one at a time; the last one wins the cache.
    let mut guard = session.lock().await;
    let field = guard.field.clone();
    let template = match &req.template {
        TemplateRef::Name(n) => match state.templates.get(n) {
            Some(t) => t.clone(),
            None => return validation(&format!("UnknownTemplate: {n:?}")),
        },
        TemplateRef::Inline { tpl } => match formats::parse_template(tpl) {
            Ok(t) => t,
            Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, e.kind(), e),
        },
    };
    let dim = field.grid.dim;
    let params = SegmentParams {
        rays: req.rays,
        level: req.level,
        nodes: req.nodes,
        delta: req.delta,
        scale: req.scale,
        avg_window: req.d,
        template_scale: req.template_scale,
        rotation: req.rotation,
    };
    let config = match params.to_config(dim) {
        Ok(c) => c,
        Err(m) => return validation(&m),
    };
    let seed = match seed_to_world(&req.seed, field.grid.spacing, dim) {
        Ok(s) => s,
        Err(m) => return validation(&m),
    };
    let slices: Vec<(Axis, usize)> = match &req.slices {
        Some(list) => {
            let mut out = Vec::new();
            for s in list {
                match Axis::parse(&s.axis) {
                    Some(a) => out.push((a, s.index)),
                    None => return validation("InvalidAxis: axis must be x, y or z"),
                }
            }
            out
        }
        None => {
            let k = if dim == Dim::Three { req.seed[2].round().max(0.0) as usize } else { 0 };
            vec![(Axis::Z, k)]
        }
    };
    let iterate = req.iterate.clone();
    if let Some(it) = &iterate {
        if it.max_iters == 0 || !(it.eps > 0.0) {
            return validation("InvalidConfig: iterate needs max_iters >= 1 and eps > 0");
        }
    }

    let started = Instant::now();
    let work_field = field.clone();
    let task = tokio::task::spawn_blocking(move || -> Result<(SegmentationResult, Option<Value>), templatecut_core::Error> {
        match iterate {
            Some(it) => {
                let eps = it.eps * work_field.grid.min_spacing();
                let o = iterate_seed(&work_field, &template, seed, &config, it.max_iters, eps)?;
                let trace: Vec<Value> = o
                    .trace
                    .iter()
                    .map(|s| json!({"seed": nums(&s.seed.to_array()), "centroid": nums(&s.centroid.to_array()), "shift": num(s.shift)}))
                    .collect();
                Ok((o.result, Some(json!({"converged": o.converged, "steps": trace}))))
            }
            None => Ok((segment(&work_field, &template, seed, &config)?, None)),
        }
    });
    let outcome = match tokio::time::timeout(state.config.timeout, task).await {
        Err(_) => return error(StatusCode::GATEWAY_TIMEOUT, "Timeout", "segmentation exceeded the request timeout"),
        Ok(Err(e)) => return error(StatusCode::INTERNAL_SERVER_ERROR, "InternalError", e),
        Ok(Ok(Err(e))) => {
            let status = if e.is_validation() { StatusCode::UNPROCESSABLE_ENTITY } else { StatusCode::INTERNAL_SERVER_ERROR };
            return error(status, e.kind(), e);
        }
        Ok(Ok(Ok(r))) => r,
    };
    let (result, trace) = outcome;
    let runtime_ms = started.elapsed().as_secs_f64() * 1000.0;

    let mut slice_payload = Vec::new();
    for (axis, index) in slices {
        match mask_outline(&result.mask, axis, index) {
            Ok(lines) => slice_payload.push(json!({
                "axis": axis.token(),
                "index": index,
                "polylines": lines.iter().map(|l| l.iter().map(|p| nums(p)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            })),
            Err(e) => {
                let token = e.to_string().split(':').next().unwrap_or("InvalidSlice").to_string();
                return error(StatusCode::UNPROCESSABLE_ENTITY, &token, e);
            }
        }
    }
    let (lo, hi) = result.boundary_range();
    let mut payload = json!({
        "cut_value": num(result.cut_value),
        "boundary_min": lo,
        "boundary_max": hi,
        "seed_quality": seed_quality(result.seed_window),
        "seed_window": {"mean": num(result.seed_window.0), "std": num(result.seed_window.1)},
        "avg_value": num(result.avg_value),
        "stats": {
            "voxel_count": result.stats.voxel_count,
            "volume": num(result.stats.volume),
            "volume_cm": num(result.stats.volume_cm(dim)),
        },
        "rays": result.fan.len(),
        "nodes": result.nodes_per_ray,
        "delta": result.delta,
        "partial": result.is_partial(),
        "empty_rays": result.empty_rays,
        "slices": slice_payload,
    });
    if let Some(t) = trace {
        payload["iterate"] = t;
    }
    guard.last_result = Some(Arc::new(result));
    drop(guard);
    let mut resp = Json(payload).into_response();
    if let Ok(v) = HeaderValue::from_str(&format!("{runtime_ms:.3}")) {
        resp.headers_mut().insert("x-runtime-ms", v);
    }
    resp
}

async fn get_mask(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let Some(session) = state.lookup(&id) else { return not_found() };
    let Some(result) = session.lock().await.last_result.clone() else {
        return error(StatusCode::NOT_FOUND, "NoResult", "run a segmentation first");
    };
    let (bytes, ctype) = match result.mask.grid.dim {
        Dim::Two => (io::encode_mask_pgm(&result.mask), "image/x-portable-graymap"),
        Dim::Three => (io::encode_mask_inline(&result.mask), "application/octet-stream"),
    };
    ([(header::CONTENT_TYPE, ctype)], bytes).into_response()
}

async fn get_templates(State(state): State<Arc<AppState>>) -> Response {
    let list: Vec<Value> = state
        .templates
        .iter()
        .map(|(name, t)| json!({"name": name, "dim": t.dim.as_usize(), "vertices": t.vertices.len()}))
        .collect();
    Json(json!({"templates": list})).into_response()
}

/// Blocking entry point for the `serve` command.
pub fn serve(args: ServeArgs) -> Result<(), String> {
    let mut extra = BTreeMap::new();
    for (name, path) in &args.templates {
        let text = std::fs::read_to_string(path).map_err(|e| format!("Io: {path}: {e}"))?;
        let t = formats::parse_template(&text).map_err(|e| format!("{path}: {e}"))?;
        extra.insert(name.clone(), t);
    }
    let config = ServiceConfig {
        ttl: Duration::from_secs(args.ttl_secs),
        max_upload: args.max_upload_mb << 20,
        timeout: Duration::from_secs(args.timeout_secs),
        cors_origin: args.cors_origin.clone(),
    };
    let state = Arc::new(AppState::new(config, extra));
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| e.to_string())?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(args.bind).await.map_err(|e| format!("bind {}: {e}", args.bind))?;
        println!("listening on http://{}", listener.local_addr().map_err(|e| e.to_string())?);
        axum::serve(listener, router(state)).await.map_err(|e| e.to_string())
    })
}
