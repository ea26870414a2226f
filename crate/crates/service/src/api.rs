//! HTTP/JSON service.

use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tower_http::cors::CorsLayer;

use tvws_core::rfplan::{coverage_csv, CoverageMetric};
use tvws_core::spectrum::TowerLoad;
use tvws_core::{GeoCoordinate, ScanConfig, TerrainGrid};

use crate::error::AppError;
use crate::jobs::Jobs;
use crate::pipeline::{parse_terrain, parse_towers};
use crate::plan::{coverage_report, run_coverage, run_optimize, run_plan, OptimizeRequest, PlanConfig};
use crate::search::search_location;

#[derive(Clone)]
pub struct AppState {
    jobs: Jobs,
    towers: Arc<RwLock<Option<Arc<TowerLoad>>>>,
    terrain: Option<Arc<TerrainGrid>>,
    plan: Arc<RwLock<Option<PlanConfig>>>,
    queue_enabled: bool,
}

/// Service settings.
#[derive(Debug, Clone, Default)]
pub struct ServiceOptions {
    pub data_dir: PathBuf,
    pub towers: Option<TowerLoad>,
    pub terrain: Option<TerrainGrid>,
    /// Reject a scan with 409 while another is pending instead of queueing it.
    pub no_queue: bool,
}

impl AppState {
    /// Must be called inside a tokio runtime (starts the scan worker).
    pub fn new(opts: ServiceOptions) -> Self {
        AppState {
            jobs: Jobs::start(opts.data_dir),
            towers: Arc::new(RwLock::new(opts.towers.map(Arc::new))),
            terrain: opts.terrain.map(Arc::new),
            plan: Arc::default(),
            queue_enabled: !opts.no_queue,
        }
    }

    pub fn jobs(&self) -> &Jobs {
        &self.jobs
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/scan", post(submit_scan))
        .route("/api/jobs", get(list_jobs))
        .route("/api/jobs/{id}", get(job_status))
        .route("/api/availability", get(availability))
        .route("/api/towers", get(get_towers).post(post_towers))
        .route("/api/rfplan", post(rfplan))
        .route("/api/optimize", post(optimize))
        .route("/api/coverage", get(coverage))
        .route("/api/results/{job}", get(results))
        .fallback(|| async { AppError::NotFound("no such endpoint".into()) })
        .layer(CorsLayer::permissive())
        .with_state(state)
}

fn json_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, AppError> {
    Ok(serde_json::from_slice(body)?)
}

#[derive(Deserialize)]
struct ScanRequest {
    config: ScanConfig,
    /// Tower CSV text; the loaded tower set when absent.
    #[serde(default)]
    towers: Option<String>,
    /// ESRI ASCII grid text; the service terrain when absent.
    #[serde(default)]
    terrain: Option<String>,
}

async fn submit_scan(State(s): State<AppState>, body: Bytes) -> Result<Response, AppError> {
    let req: ScanRequest = json_body(&body)?;
    req.config.validate()?;
    let towers = match &req.towers {
        Some(text) => parse_towers(text, Some(&req.config.plan))?,
        None => s
            .towers
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .as_deref()
            .cloned()
            .unwrap_or_default(),
    };
    let terrain = match &req.terrain {
        Some(text) => Some(Arc::new(parse_terrain(text)?)),
        None => s.terrain.clone(),
    };
    if !s.queue_enabled && s.jobs.busy() {
        return Err(AppError::Conflict("scan already running".into()));
    }
    let job = s.jobs.submit(req.config, towers, terrain)?;
    Ok((StatusCode::ACCEPTED, Json(job)).into_response())
}

async fn list_jobs(State(s): State<AppState>) -> impl IntoResponse {
    Json(s.jobs.list())
}

async fn job_status(State(s): State<AppState>, Path(id): Path<String>) -> Result<Response, AppError> {
    let job = s.jobs.get(&id).ok_or_else(|| AppError::NotFound(format!("unknown job {id}")))?;
    Ok(Json(job).into_response())
}

#[derive(Deserialize)]
struct AvailabilityQuery {
    lat: f64,
    lon: f64,
    #[serde(default)]
    max_noise: Option<f64>,
    #[serde(default)]
    job: Option<String>,
}

async fn availability(State(s): State<AppState>, q: Result<Query<AvailabilityQuery>, axum::extract::rejection::QueryRejection>) -> Result<Response, AppError> {
    let Query(q) = q.map_err(|e| AppError::bad_input(e.body_text()))?;
    let data = s.jobs.dataset(q.job.as_deref())?;
    let point = GeoCoordinate::new(q.lat, q.lon).map_err(|e| AppError::invalid("lat", e.to_string()))?;
    Ok(Json(search_location(&data, point, q.max_noise)).into_response())
}

async fn get_towers(State(s): State<AppState>) -> Result<Response, AppError> {
    let guard = s.towers.read().unwrap_or_else(|e| e.into_inner());
    let load = guard.as_deref().ok_or_else(|| AppError::Conflict("no towers loaded".into()))?;
    Ok(Json(json!({ "towers": load.towers, "diagnostics": load.diagnostics })).into_response())
}

async fn post_towers(State(s): State<AppState>, body: Bytes) -> Result<Response, AppError> {
    let text = std::str::from_utf8(&body).map_err(|_| AppError::bad_input("tower file must be UTF-8"))?;
    let load = parse_towers(text, None)?;
    let summary = json!({
        "loaded": load.towers.len(),
        "rejected": load.rejected(),
        "diagnostics": load.diagnostics,
    });
    *s.towers.write().unwrap_or_else(|e| e.into_inner()) = Some(Arc::new(load));
    Ok(Json(summary).into_response())
}

async fn rfplan(State(s): State<AppState>, body: Bytes) -> Result<Response, AppError> {
    let cfg: PlanConfig = json_body(&body)?;
    let terrain = s.terrain.clone();
    let run_cfg = cfg.clone();
    let report = tokio::task::spawn_blocking(move || run_plan(&run_cfg, terrain.as_deref()))
        .await
        .map_err(|e| AppError::Runtime(e.to_string()))??;
    *s.plan.write().unwrap_or_else(|e| e.into_inner()) = Some(cfg);
    Ok(Json(report).into_response())
}

async fn optimize(State(s): State<AppState>, body: Bytes) -> Result<Response, AppError> {
    let req: OptimizeRequest = json_body(&body)?;
    let terrain = s.terrain.clone();
    let report = tokio::task::spawn_blocking(move || run_optimize(&req, terrain.as_deref()))
        .await
        .map_err(|e| AppError::Runtime(e.to_string()))??;
    Ok(Json(report).into_response())
}

#[derive(Deserialize)]
struct CoverageQuery {
    metric: String,
    #[serde(default)]
    format: Option<String>,
}

async fn coverage(State(s): State<AppState>, q: Result<Query<CoverageQuery>, axum::extract::rejection::QueryRejection>) -> Result<Response, AppError> {
    let Query(q) = q.map_err(|e| AppError::bad_input(e.body_text()))?;
    let metric: CoverageMetric = q.metric.parse().map_err(|e: String| AppError::invalid("metric", e))?;
    let cfg = s
        .plan
        .read()
        .unwrap_or_else(|e| e.into_inner())
        .clone()
        .ok_or_else(|| AppError::Conflict("no rf plan loaded; POST /api/rfplan first".into()))?;
    let terrain = s.terrain.clone();
    let (grid, values) = tokio::task::spawn_blocking(move || run_coverage(&cfg, metric, terrain.as_deref()))
        .await
        .map_err(|e| AppError::Runtime(e.to_string()))??;
    match q.format.as_deref() {
        Some("csv") => Ok(([(header::CONTENT_TYPE, "text/csv")], coverage_csv(&grid, &values)).into_response()),
        None | Some("json") => Ok(Json(coverage_report(metric, &grid, &values)).into_response()),
        Some(other) => Err(AppError::invalid("format", format!("unknown format `{other}` (json, csv)"))),
    }
}

async fn results(State(s): State<AppState>, Path(job): Path<String>) -> Result<Response, AppError> {
    let csv = s.jobs.result_csv(&job)?;
    Ok(([(header::CONTENT_TYPE, "text/csv")], csv).into_response())
}

/// Binds and serves until the process is stopped.
pub async fn serve(addr: std::net::SocketAddr, opts: ServiceOptions) -> Result<(), AppError> {
    let state = AppState::new(opts);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| AppError::Runtime(format!("bind {addr}: {e}")))?;
    log::info!("listening on http://{addr}");
    axum::serve(listener, router(state))
        .await
        .map_err(|e| AppError::Runtime(e.to_string()))
}
