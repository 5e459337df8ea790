//! Session-oriented HTTP API for interactive preference training.
//!
//! A client creates a session from a seed color, answers the queries it is
//! served, and finally fetches the ranked corpus plus a newly planned
//! colormap. Sessions live in memory; each one is guarded by its own lock so
//! requests within a session are serialized while distinct sessions proceed
//! concurrently.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::extract::{Path, Query as QueryParams, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response as HttpResponse};
use axum::routing::{get, post};
use axum::{Json, Router};
use huepath_core::colormap::finalize;
use huepath_core::colorspace::LabColor;
use huepath_core::corpus::Corpus;
use huepath_core::environment::StateSpace;
use huepath_core::planner::QLearningConfig;
use huepath_core::preference::{acquire_query, Observation, PreferenceModel, Query, Response, SamplerConfig};
use huepath_core::reward::RewardConfig;
use huepath_core::session::Workbench;
use huepath_core::Error as CoreError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use tower_http::services::ServeDir;

const FALLBACK_INDEX: &str = include_str!("../static/index.html");

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub corpus: Arc<Corpus>,
    /// Seeds every session's sampler and search.
    pub rng_seed: u64,
    /// Seed of the quantized state space.
    pub space_seed: u64,
    pub default_queries: usize,
    pub episodes: usize,
    /// How long a synchronous results call waits before answering 202.
    pub search_budget: Duration,
    /// Directory holding the built browser UI, served at `/`.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            corpus: Arc::new(Corpus::starter()),
            rng_seed: 0,
            space_seed: 0,
            default_queries: huepath_core::preference::DEFAULT_QUERIES,
            episodes: QLearningConfig::default().episodes,
            search_budget: Duration::from_secs(30),
            static_dir: None,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    config: Arc<ServiceConfig>,
    sessions: Arc<RwLock<HashMap<String, Arc<Mutex<Session>>>>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        AppState { config: Arc::new(config), sessions: Arc::default() }
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions.read().unwrap().get(id).cloned().ok_or(ApiError::NotFound)
    }
}

struct Outstanding {
    query_id: String,
    query: Query,
    left: Vec<String>,
    right: Vec<String>,
}

enum ResultsState {
    NotStarted,
    Pending,
    Ready(Arc<String>),
    Failed(String),
}

struct Session {
    workbench: Arc<Workbench>,
    model: PreferenceModel,
    rng: ChaCha8Rng,
    n_queries: usize,
    answered: usize,
    issued: usize,
    outstanding: Option<Outstanding>,
    results: ResultsState,
}

impl Session {
    fn remaining(&self) -> usize {
        self.n_queries - self.answered
    }
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound,
    Conflict(String),
    Unsupported { message: String, suggestions: Vec<String> },
    Internal(String),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    suggestions: Option<&'a [String]>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> HttpResponse {
        let (status, message, suggestions) = match &self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m.as_str(), None),
            ApiError::NotFound => (StatusCode::NOT_FOUND, "unknown session", None),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, m.as_str(), None),
            ApiError::Unsupported { message, suggestions } => {
                (StatusCode::UNPROCESSABLE_ENTITY, message.as_str(), Some(suggestions.as_slice()))
            }
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m.as_str(), None),
        };
        (status, Json(ErrorBody { error: message, suggestions })).into_response()
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::SeedUnsupported { ref suggestions, .. } => ApiError::Unsupported {
                message: e.to_string(),
                suggestions: suggestions.iter().map(LabColor::to_hex).collect(),
            },
            CoreError::ColorParse { .. } => ApiError::BadRequest(e.to_string()),
            CoreError::TooFewCandidates { .. } => ApiError::Unsupported { message: e.to_string(), suggestions: vec![] },
            other => ApiError::Internal(other.to_string()),
        }
    }
}

fn join_error(e: tokio::task::JoinError) -> ApiError {
    ApiError::Internal(format!("worker failed: {e}"))
}

#[derive(Deserialize)]
pub struct CreateSession {
    pub seed: String,
    pub n_queries: Option<usize>,
}

#[derive(Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub candidate_count: usize,
}

#[derive(Serialize, Deserialize)]
pub struct QueryBody {
    pub query_id: String,
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub remaining: usize,
}

#[derive(Deserialize)]
pub struct ResponseBody {
    pub query_id: String,
    /// Kept loose so that a non-integer choice is a 400, not a body error.
    pub choice: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
pub struct Remaining {
    pub remaining: usize,
}

#[derive(Serialize, Deserialize)]
pub struct StatusBody {
    pub session_id: String,
    pub seed: String,
    pub candidate_count: usize,
    pub answered: usize,
    pub remaining: usize,
}

#[derive(Serialize, Deserialize)]
pub struct RankedBody {
    pub id: String,
    pub score: f64,
    pub colors: Vec<String>,
}

#[derive(Serialize, Deserialize)]
pub struct NovelBody {
    pub colors: Vec<String>,
    pub reward: f64,
}

#[derive(Serialize, Deserialize)]
pub struct ResultsBody {
    pub ranking: Vec<RankedBody>,
    pub novel: Option<NovelBody>,
}

#[derive(Serialize, Deserialize)]
pub struct Pending {
    pub status: String,
    pub poll: String,
}

#[derive(Deserialize, Default)]
pub struct ResultsParams {
    #[serde(default)]
    pub early: Option<u8>,
    #[serde(rename = "async", default)]
    pub asynchronous: Option<u8>,
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/:id", get(session_status))
        .route("/sessions/:id/query", get(get_query))
        .route("/sessions/:id/responses", post(post_response))
        .route("/sessions/:id/results", get(get_results))
        .route("/sessions/:id/model", get(get_model));
    let api = match &state.config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(FALLBACK_INDEX) })),
    };
    api.with_state(state)
}

pub async fn serve(config: ServiceConfig, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(AppState::new(config))).await
}

async fn create_session(
    State(state): State<AppState>,
    Json(body): Json<CreateSession>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let seed = LabColor::from_hex(&body.seed).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let config = state.config.clone();
    let workbench = tokio::task::spawn_blocking(move || {
        Workbench::prepare(&config.corpus, seed, StateSpace::shared(config.space_seed), RewardConfig::default())
    })
    .await
    .map_err(join_error)??;
    if workbench.candidates.len() < 2 {
        return Err(CoreError::SeedUnsupported {
            seed,
            suggestions: huepath_core::environment::suggest_seeds(
                &state.config.corpus,
                seed,
                &workbench.graph.shared_space(),
                3,
            ),
        }
        .into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(state.config.rng_seed);
    let model = PreferenceModel::prior(SamplerConfig::default(), &mut rng);
    let id = uuid::Uuid::new_v4().to_string();
    let candidate_count = workbench.candidates.len();
    let session = Session {
        workbench: Arc::new(workbench),
        model,
        rng,
        n_queries: body.n_queries.unwrap_or(state.config.default_queries),
        answered: 0,
        issued: 0,
        outstanding: None,
        results: ResultsState::NotStarted,
    };
    state.sessions.write().unwrap().insert(id.clone(), Arc::new(Mutex::new(session)));
    tracing::info!(session = %id, candidates = candidate_count, "session created");
    Ok((StatusCode::CREATED, Json(Created { session_id: id, candidate_count })))
}

async fn session_status(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<StatusBody>, ApiError> {
    let session = state.session(&id)?;
    let s = session.lock().await;
    Ok(Json(StatusBody {
        session_id: id,
        seed: s.workbench.seed.to_hex(),
        candidate_count: s.workbench.candidates.len(),
        answered: s.answered,
        remaining: s.remaining(),
    }))
}

async fn get_model(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<PreferenceModel>, ApiError> {
    let session = state.session(&id)?;
    let s = session.lock().await;
    Ok(Json(s.model.clone()))
}

async fn get_query(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<QueryBody>, ApiError> {
    let session = state.session(&id)?;
    let mut s = session.lock().await;
    if s.remaining() == 0 {
        return Err(ApiError::Conflict("query budget exhausted".into()));
    }
    if s.outstanding.is_none() {
        let wb = s.workbench.clone();
        let query = acquire_query(&s.model, &wb.ids(), &wb.features)?;
        let render = |i: usize| -> Result<Vec<String>, ApiError> {
            Ok(finalize(&wb.candidates[i].trajectory, wb.graph.seed_state(), wb.seed)?.to_hex_list())
        };
        let (left, right) = (render(query.left)?, render(query.right)?);
        s.issued += 1;
        let query_id = format!("q{}", s.issued);
        s.outstanding = Some(Outstanding { query_id, query, left, right });
    }
    let remaining = s.remaining();
    let q = s.outstanding.as_ref().expect("set above");
    Ok(Json(QueryBody { query_id: q.query_id.clone(), left: q.left.clone(), right: q.right.clone(), remaining }))
}

async fn post_response(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<ResponseBody>,
) -> Result<Json<Remaining>, ApiError> {
    let session = state.session(&id)?;
    let mut s = session.lock().await;
    let response = body
        .choice
        .as_u64()
        .and_then(|c| u8::try_from(c).ok())
        .and_then(|c| Response::try_from(c).ok())
        .ok_or_else(|| ApiError::BadRequest(format!("choice must be 0, 1 or 2, got {}", body.choice)))?;
    let query = match &s.outstanding {
        Some(o) if o.query_id == body.query_id => o.query,
        _ => return Err(ApiError::Conflict(format!("query {} is not outstanding", body.query_id))),
    };
    let wb = s.workbench.clone();
    let observation = Observation {
        left_id: wb.candidates[query.left].id.clone(),
        right_id: wb.candidates[query.right].id.clone(),
        left: wb.features[query.left],
        right: wb.features[query.right],
        response,
    };
    let Session { model, rng, .. } = &mut *s;
    model.update_belief(observation, rng);
    s.outstanding = None;
    s.answered += 1;
    Ok(Json(Remaining { remaining: s.remaining() }))
}

fn compute_results(wb: &Workbench, model: &PreferenceModel, episodes: usize, rng_seed: u64) -> Result<String, CoreError> {
    let ranking = wb
        .rank(model)?
        .into_iter()
        .map(|r| RankedBody { id: r.id, score: r.score, colors: r.colormap.to_hex_list() })
        .collect();
    let config = QLearningConfig { episodes, ..QLearningConfig::default() };
    let found = wb.synthesize(&model.mean(), &config, rng_seed)?;
    let novel = match (found.colormap, found.best_reward) {
        (Some(cm), Some(reward)) => Some(NovelBody { colors: cm.to_hex_list(), reward }),
        _ => None,
    };
    Ok(serde_json::to_string(&ResultsBody { ranking, novel }).expect("results serialize"))
}

fn json_bytes(status: StatusCode, body: Arc<String>) -> HttpResponse {
    (status, [(axum::http::header::CONTENT_TYPE, "application/json")], body.as_str().to_owned()).into_response()
}

fn pending(id: &str) -> HttpResponse {
    (
        StatusCode::ACCEPTED,
        Json(Pending { status: "pending".into(), poll: format!("/sessions/{id}/results") }),
    )
        .into_response()
}

async fn get_results(
    State(state): State<AppState>,
    Path(id): Path<String>,
    params: Option<QueryParams<ResultsParams>>,
) -> Result<HttpResponse, ApiError> {
    let params = params.map(|p| p.0).unwrap_or_default();
    let session = state.session(&id)?;
    let rx = {
        let mut s = session.lock().await;
        match &s.results {
            ResultsState::Ready(body) => return Ok(json_bytes(StatusCode::OK, body.clone())),
            ResultsState::Pending => return Ok(pending(&id)),
            ResultsState::Failed(m) => return Err(ApiError::Internal(m.clone())),
            ResultsState::NotStarted => {}
        }
        if s.remaining() > 0 && params.early != Some(1) {
            return Err(ApiError::Conflict(format!("training incomplete: {} queries remaining", s.remaining())));
        }
        s.results = ResultsState::Pending;
        let (wb, model) = (s.workbench.clone(), s.model.clone());
        let (episodes, seed) = (state.config.episodes, state.config.rng_seed);
        let session = session.clone();
        let (tx, rx) = tokio::sync::oneshot::channel();
        tokio::spawn(async move {
            let outcome = tokio::task::spawn_blocking(move || compute_results(&wb, &model, episodes, seed)).await;
            let mut s = session.lock().await;
            s.results = match outcome {
                Ok(Ok(body)) => ResultsState::Ready(Arc::new(body)),
                Ok(Err(e)) => ResultsState::Failed(e.to_string()),
                Err(e) => ResultsState::Failed(e.to_string()),
            };
            let _ = tx.send(());
        });
        rx
    };
    if params.asynchronous == Some(1) {
        return Ok(pending(&id));
    }
    if tokio::time::timeout(state.config.search_budget, rx).await.is_err() {
        return Ok(pending(&id));
    }
    let s = session.lock().await;
    match &s.results {
        ResultsState::Ready(body) => Ok(json_bytes(StatusCode::OK, body.clone())),
        ResultsState::Failed(m) => Err(ApiError::Internal(m.clone())),
        _ => Ok(pending(&id)),
    }
}
