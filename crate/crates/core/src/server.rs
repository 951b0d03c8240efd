//! HTTP/JSON API over disambiguation sessions.
//!
//! Every error body is `{"error": {"code": ..., "message": ...}}`. Each
//! session sits behind its own mutex, so requests on one session are
//! serialized while different sessions proceed independently.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::emit::BracketStyle;
use crate::lexing::RecognizerRegistry;
use crate::session::{load_grammar, Candidate, FormulaEntry, FormulaStatus, Session, SessionConfig, SessionError, Summary};
use crate::tex::FormulaKind;

const INDEX_HTML: &str = include_str!("../static/index.html");

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Mutex<Session>>>>>,
    registry: Arc<RecognizerRegistry>,
    autosave_dir: Option<PathBuf>,
}

impl AppState {
    /// Sessions are autosaved to `autosave_dir`, or next to their document
    /// in a `.stexify` directory when it is `None`.
    pub fn new(registry: RecognizerRegistry, autosave_dir: Option<PathBuf>) -> Self {
        AppState {
            sessions: Arc::default(),
            registry: Arc::new(registry),
            autosave_dir,
        }
    }

    /// Loads every autosaved session found in the autosave directory.
    pub fn restore(&self) -> Result<usize, SessionError> {
        let Some(dir) = &self.autosave_dir else { return Ok(0) };
        let Ok(listing) = fs::read_dir(dir) else { return Ok(0) };
        let mut n = 0;
        for item in listing {
            let path = item.map_err(|e| SessionError::io(dir, e))?.path();
            if path.extension().is_some_and(|e| e == "json") {
                self.insert(Session::load(&path)?);
                n += 1;
            }
        }
        Ok(n)
    }

    pub fn insert(&self, session: Session) -> String {
        let id = session.id.clone();
        self.sessions.write().expect("session map").insert(id.clone(), Arc::new(Mutex::new(session)));
        id
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .expect("session map")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(id.to_string()).into())
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().expect("session map").keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Creates a session from files on disk.
    pub fn create_session(&self, document: &Path, grammar: &Path, actions: Option<&Path>) -> Result<String, SessionError> {
        let (compiled, table) = load_grammar(grammar, actions)?;
        let default_dir;
        let dir = match &self.autosave_dir {
            Some(d) => d.as_path(),
            None => {
                default_dir = document.parent().unwrap_or(Path::new(".")).join(".stexify");
                default_dir.as_path()
            }
        };
        let session = Session::create(document, &compiled, &table, &self.registry, SessionConfig::default(), Some(dir))?;
        Ok(self.insert(session))
    }
}

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::UnknownSession(_) | SessionError::UnknownFormula(_) => StatusCode::NOT_FOUND,
            SessionError::PendingAmbiguities(_) | SessionError::DocumentChanged(_) => StatusCode::CONFLICT,
            SessionError::Autosave(_) | SessionError::Emit(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError {
            status,
            code: e.code(),
            message: e.to_string(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: "invalid_request",
            message: e.body_text(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Deserialize)]
struct CreateRequest {
    document_path: PathBuf,
    grammar_path: PathBuf,
    #[serde(default)]
    actions_path: Option<PathBuf>,
}

#[derive(Serialize)]
struct SessionInfo {
    session_id: String,
    document_path: PathBuf,
    summary: Summary,
    pending: Vec<usize>,
}

#[derive(Serialize)]
struct FormulaItem {
    id: usize,
    raw: String,
    kind: FormulaKind,
    status: FormulaStatus,
    candidate_count: usize,
}

#[derive(Serialize)]
struct FormulaDetail {
    id: usize,
    raw: String,
    kind: FormulaKind,
    status: FormulaStatus,
    candidates: Vec<Candidate>,
}

impl From<&FormulaEntry> for FormulaDetail {
    fn from(e: &FormulaEntry) -> Self {
        FormulaDetail {
            id: e.formula.id,
            raw: e.formula.raw.clone(),
            kind: e.formula.kind.clone(),
            status: e.status.clone(),
            candidates: e.candidates.clone(),
        }
    }
}

#[derive(Deserialize)]
struct SelectRequest {
    index: usize,
}

#[derive(Deserialize, Default)]
struct ExportRequest {
    #[serde(default)]
    dobrackets_style: Option<BracketStyle>,
    #[serde(default)]
    output_path: Option<PathBuf>,
}

fn info(s: &Session) -> SessionInfo {
    SessionInfo {
        session_id: s.id.clone(),
        document_path: s.document_path.clone(),
        summary: s.summary(),
        pending: s.pending(),
    }
}

async fn create(State(state): State<AppState>, body: Result<Json<CreateRequest>, JsonRejection>) -> ApiResult<SessionInfo> {
    let Json(req) = body?;
    let worker = state.clone();
    let id = tokio::task::spawn_blocking(move || {
        worker.create_session(&req.document_path, &req.grammar_path, req.actions_path.as_deref())
    })
    .await
    .map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        code: "internal",
        message: e.to_string(),
    })??;
    let session = state.get(&id)?;
    let s = session.lock().expect("session lock");
    Ok(Json(info(&s)))
}

async fn list_sessions(State(state): State<AppState>) -> Json<Vec<String>> {
    Json(state.session_ids())
}

async fn summary(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<SessionInfo> {
    let session = state.get(&id)?;
    let s = session.lock().expect("session lock");
    Ok(Json(info(&s)))
}

async fn formulas(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Vec<FormulaItem>> {
    let session = state.get(&id)?;
    let s = session.lock().expect("session lock");
    Ok(Json(
        s.entries
            .iter()
            .map(|e| FormulaItem {
                id: e.formula.id,
                raw: e.formula.raw.clone(),
                kind: e.formula.kind.clone(),
                status: e.status.clone(),
                candidate_count: e.candidates.len(),
            })
            .collect(),
    ))
}

async fn formula(State(state): State<AppState>, UrlPath((id, fid)): UrlPath<(String, usize)>) -> ApiResult<FormulaDetail> {
    let session = state.get(&id)?;
    let s = session.lock().expect("session lock");
    Ok(Json(s.entry(fid)?.into()))
}

async fn select(
    State(state): State<AppState>,
    UrlPath((id, fid)): UrlPath<(String, usize)>,
    body: Result<Json<SelectRequest>, JsonRejection>,
) -> ApiResult<FormulaDetail> {
    let Json(req) = body?;
    let session = state.get(&id)?;
    let mut s = session.lock().expect("session lock");
    Ok(Json(s.select(fid, req.index)?.into()))
}

async fn skip(State(state): State<AppState>, UrlPath((id, fid)): UrlPath<(String, usize)>) -> ApiResult<FormulaDetail> {
    let session = state.get(&id)?;
    let mut s = session.lock().expect("session lock");
    Ok(Json(s.skip(fid)?.into()))
}

async fn export(State(state): State<AppState>, UrlPath(id): UrlPath<String>, body: Bytes) -> Result<Json<serde_json::Value>, ApiError> {
    let req: ExportRequest = if body.iter().all(u8::is_ascii_whitespace) {
        ExportRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError {
            status: StatusCode::BAD_REQUEST,
            code: "invalid_request",
            message: e.to_string(),
        })?
    };
    let session = state.get(&id)?;
    let mut s = session.lock().expect("session lock");
    let path = s.export(req.output_path.as_deref(), req.dobrackets_style)?;
    Ok(Json(json!({"output_path": path})))
}

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        code: "not_found",
        message: "no such route".into(),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/sessions", post(create).get(list_sessions))
        .route("/sessions/:id", get(summary))
        .route("/sessions/:id/formulas", get(formulas))
        .route("/sessions/:id/formulas/:fid", get(formula))
        .route("/sessions/:id/formulas/:fid/selection", post(select))
        .route("/sessions/:id/formulas/:fid/skip", post(skip))
        .route("/sessions/:id/export", post(export))
        .fallback(not_found)
        .with_state(state)
}

/// Serves until the process receives Ctrl-C.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
