//! HTTP API over evaluation rounds.
//!
//! A round collects expert submissions (last write per expert wins), is
//! frozen once, and then serves its result document, per-expert feedback and
//! what-if recomputations. Only one round may be open at a time; each new
//! round is linked to the most recently frozen one, whose merged matrix is
//! blended in at freeze time.
//!
//! With a data directory every state change is appended to disk:
//!
//! ```text
//! rounds/000001/round.json
//! rounds/000001/submissions/000001.json
//! rounds/000001/freeze.json      written last; marks the round frozen
//! rounds/000001/merged.json
//! rounds/000001/result.json
//! ```
//!
//! Files are created, never rewritten. On start the directory is replayed.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use fcmrisk_core::document::{
    DocumentError, ExpertDocument, GraphDocument, MatrixDocument, ReferenceValues,
};
use fcmrisk_core::elicitation::{feedback_report, ExpertEvaluation, MergedMatrix};
use fcmrisk_core::model::Hierarchy;
use fcmrisk_core::pipeline::{run_round, what_if, EngineConfig, Override, PipelineError};
use fcmrisk_core::NodeId;
use serde::{Deserialize, Serialize};

/// Error body: `{"code": ..., "message": ...}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn not_found(what: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    fn schema(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "schema", message)
    }

    fn invalid(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", message)
    }

    fn storage(err: impl std::fmt::Display) -> Self {
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "storage",
            err.to_string(),
        )
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "code": self.code, "message": self.message });
        (self.status, axum::Json(body)).into_response()
    }
}

impl From<DocumentError> for ApiError {
    fn from(e: DocumentError) -> Self {
        match e {
            DocumentError::Json(m) | DocumentError::Csv(m) => ApiError::schema(m),
            other => ApiError::invalid(other.to_string()),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        ApiError::invalid(e.to_string())
    }
}

fn parse<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::schema(e.to_string()))
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RoundRecord {
    id: u64,
    timestamp: String,
    previous: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FreezeRecord {
    lambda: f64,
}

#[derive(Debug, Clone)]
struct Frozen {
    smoothing: f64,
    merged: MergedMatrix,
    result: String,
}

#[derive(Debug, Clone)]
struct Round {
    record: RoundRecord,
    submissions: BTreeMap<String, ExpertEvaluation>,
    seq: u64,
    frozen: Option<Frozen>,
}

#[derive(Debug, Default)]
struct Store {
    rounds: BTreeMap<u64, Round>,
}

impl Store {
    fn open_round(&self) -> Option<u64> {
        self.rounds
            .values()
            .find(|r| r.frozen.is_none())
            .map(|r| r.record.id)
    }

    fn last_frozen(&self) -> Option<u64> {
        self.rounds
            .values()
            .rev()
            .find(|r| r.frozen.is_some())
            .map(|r| r.record.id)
    }
}

/// Shared service state. All mutations go through one lock, which makes
/// submissions and freezes atomic with respect to each other.
pub struct AppState {
    doc: GraphDocument,
    hierarchy: Hierarchy,
    references: BTreeMap<NodeId, ReferenceValues>,
    engine: EngineConfig,
    data_dir: Option<PathBuf>,
    store: Mutex<Store>,
}

fn round_dir(root: &Path, id: u64) -> PathBuf {
    root.join("rounds").join(format!("{id:06}"))
}

fn write_new(path: &Path, contents: &str) -> std::io::Result<()> {
    let mut f = fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)?;
    f.write_all(contents.as_bytes())?;
    f.sync_all()
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ApiError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ApiError::storage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ApiError::storage(format!("{}: {e}", path.display())))
}

impl AppState {
    /// Builds the state, replaying `data_dir` when it holds earlier rounds.
    pub fn new(
        doc: GraphDocument,
        engine: EngineConfig,
        data_dir: Option<PathBuf>,
    ) -> Result<Self, ApiError> {
        engine.validate()?;
        let hierarchy = doc.hierarchy()?;
        let state = AppState {
            references: doc.references(),
            hierarchy,
            doc,
            engine,
            data_dir,
            store: Mutex::new(Store::default()),
        };
        state.replay()?;
        Ok(state)
    }

    fn replay(&self) -> Result<(), ApiError> {
        let Some(root) = &self.data_dir else {
            return Ok(());
        };
        let rounds = root.join("rounds");
        if !rounds.exists() {
            return Ok(());
        }
        let mut ids: Vec<u64> = fs::read_dir(&rounds)
            .map_err(ApiError::storage)?
            .filter_map(|e| e.ok()?.file_name().to_str()?.parse().ok())
            .collect();
        ids.sort_unstable();
        let mut store = self.store.lock().expect("store lock");
        for id in ids {
            let dir = round_dir(root, id);
            let record: RoundRecord = read_json(&dir.join("round.json"))?;
            let mut round = Round {
                record,
                submissions: BTreeMap::new(),
                seq: 0,
                frozen: None,
            };
            let subs = dir.join("submissions");
            let mut seqs: Vec<u64> = match fs::read_dir(&subs) {
                Ok(rd) => rd
                    .filter_map(|e| {
                        let name = e.ok()?.file_name();
                        name.to_str()?.strip_suffix(".json")?.parse().ok()
                    })
                    .collect(),
                Err(_) => Vec::new(),
            };
            seqs.sort_unstable();
            for seq in seqs {
                let doc: ExpertDocument = read_json(&subs.join(format!("{seq:06}.json")))?;
                let eval = doc.to_evaluation().map_err(ApiError::storage)?;
                round.submissions.insert(eval.expert_id.clone(), eval);
                round.seq = seq;
            }
            let freeze = dir.join("freeze.json");
            if freeze.exists() {
                let f: FreezeRecord = read_json(&freeze)?;
                let merged: MatrixDocument = read_json(&dir.join("merged.json"))?;
                let result =
                    fs::read_to_string(dir.join("result.json")).map_err(ApiError::storage)?;
                round.frozen = Some(Frozen {
                    smoothing: f.lambda,
                    merged: merged.to_merged(&self.hierarchy)?,
                    result,
                });
            }
            store.rounds.insert(id, round);
        }
        Ok(())
    }

    fn persist(&self, f: impl FnOnce(&Path) -> std::io::Result<()>) -> Result<(), ApiError> {
        match &self.data_dir {
            Some(root) => f(root).map_err(ApiError::storage),
            None => Ok(()),
        }
    }

    fn create_round(&self, timestamp: Option<String>) -> Result<RoundRecord, ApiError> {
        let mut store = self.store.lock().expect("store lock");
        if let Some(open) = store.open_round() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "round_open",
                format!("round {open} is still open"),
            ));
        }
        let id = store.rounds.keys().next_back().map_or(1, |k| k + 1);
        let record = RoundRecord {
            id,
            timestamp: timestamp.unwrap_or_else(|| self.doc.timestamp.clone()),
            previous: store.last_frozen(),
        };
        self.persist(|root| {
            let dir = round_dir(root, id);
            fs::create_dir_all(dir.join("submissions"))?;
            write_new(&dir.join("round.json"), &to_json(&record))
        })?;
        store.rounds.insert(
            id,
            Round {
                record: record.clone(),
                submissions: BTreeMap::new(),
                seq: 0,
                frozen: None,
            },
        );
        Ok(record)
    }

    fn submit(&self, id: u64, doc: ExpertDocument) -> Result<serde_json::Value, ApiError> {
        let eval = doc.to_evaluation()?;
        eval.validate(&self.hierarchy)
            .map_err(|e| ApiError::invalid(e.to_string()))?;
        let mut store = self.store.lock().expect("store lock");
        let round = store
            .rounds
            .get_mut(&id)
            .ok_or_else(|| ApiError::not_found(format!("round {id}")))?;
        if round.frozen.is_some() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "round_frozen",
                format!("round {id} is frozen"),
            ));
        }
        let seq = round.seq + 1;
        let stored = ExpertDocument::from_evaluation(&eval);
        self.persist(|root| {
            let path = round_dir(root, id)
                .join("submissions")
                .join(format!("{seq:06}.json"));
            write_new(&path, &to_json(&stored))
        })?;
        round.seq = seq;
        let entries = eval.len();
        let expert = eval.expert_id.clone();
        let replaced = round.submissions.insert(expert.clone(), eval).is_some();
        Ok(serde_json::json!({
            "round": id,
            "expert_id": expert,
            "entries": entries,
            "replaced": replaced,
        }))
    }

    fn freeze(&self, id: u64, lambda: Option<f64>) -> Result<String, ApiError> {
        let mut store = self.store.lock().expect("store lock");
        let round = store
            .rounds
            .get(&id)
            .ok_or_else(|| ApiError::not_found(format!("round {id}")))?;
        if let Some(f) = &round.frozen {
            return Ok(f.result.clone());
        }
        if round.submissions.is_empty() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "empty_round",
                format!("round {id} has no submissions"),
            ));
        }
        let previous = round
            .record
            .previous
            .and_then(|p| store.rounds.get(&p))
            .and_then(|p| p.frozen.as_ref())
            .map(|f| f.merged.clone());
        let config = EngineConfig {
            smoothing: lambda.unwrap_or(self.engine.smoothing),
            ..self.engine
        };
        let evals: Vec<ExpertEvaluation> = round.submissions.values().cloned().collect();
        let (merged, assessment) = run_round(
            &self.hierarchy,
            &evals,
            previous.as_ref(),
            &round.record.timestamp,
            config,
        )?;
        let result = assessment
            .document(&self.references, previous.is_some())
            .to_json();
        let matrix = MatrixDocument::from_merged(&merged, round.record.timestamp.clone());
        self.persist(|root| {
            let dir = round_dir(root, id);
            write_new(&dir.join("merged.json"), &to_json(&matrix))?;
            write_new(&dir.join("result.json"), &result)?;
            write_new(
                &dir.join("freeze.json"),
                &to_json(&FreezeRecord {
                    lambda: config.smoothing,
                }),
            )
        })?;
        let round = store.rounds.get_mut(&id).expect("round exists");
        round.frozen = Some(Frozen {
            smoothing: config.smoothing,
            merged,
            result: result.clone(),
        });
        Ok(result)
    }

    fn frozen(&self, id: u64) -> Result<(Round, Frozen), ApiError> {
        let store = self.store.lock().expect("store lock");
        let round = store
            .rounds
            .get(&id)
            .ok_or_else(|| ApiError::not_found(format!("round {id}")))?;
        match &round.frozen {
            Some(f) => Ok((round.clone(), f.clone())),
            None => Err(ApiError::new(
                StatusCode::CONFLICT,
                "round_open",
                format!("round {id} is not frozen yet"),
            )),
        }
    }
}

async fn list_rounds(State(state): State<Arc<AppState>>) -> Response {
    let store = state.store.lock().expect("store lock");
    let rounds: Vec<serde_json::Value> = store
        .rounds
        .values()
        .map(|r| {
            serde_json::json!({
                "id": r.record.id,
                "timestamp": r.record.timestamp,
                "previous": r.record.previous,
                "frozen": r.frozen.is_some(),
                "experts": r.submissions.keys().collect::<Vec<_>>(),
            })
        })
        .collect();
    json_response(StatusCode::OK, to_json(&rounds))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewRound {
    timestamp: Option<String>,
}

async fn create_round(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: NewRound = if body.is_empty() {
        NewRound::default()
    } else {
        parse(&body)?
    };
    let record = state.create_round(req.timestamp)?;
    Ok(json_response(StatusCode::CREATED, to_json(&record)))
}

async fn submit(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<u64>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    let doc: ExpertDocument = parse(&body)?;
    if let Some(h) = headers.get("x-expert-id") {
        let h = h.to_str().unwrap_or_default();
        if h != doc.expert_id {
            return Err(ApiError::new(
                StatusCode::FORBIDDEN,
                "expert_mismatch",
                format!(
                    "header names `{h}` but the document is from `{}`",
                    doc.expert_id
                ),
            ));
        }
    }
    let ack = state.submit(id, doc)?;
    Ok(json_response(StatusCode::OK, to_json(&ack)))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FreezeRequest {
    lambda: Option<f64>,
}

async fn freeze(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<u64>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: FreezeRequest = if body.is_empty() {
        FreezeRequest::default()
    } else {
        parse(&body)?
    };
    let result = state.freeze(id, req.lambda)?;
    Ok(json_response(StatusCode::OK, result))
}

async fn result(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<u64>,
) -> Result<Response, ApiError> {
    let (_, frozen) = state.frozen(id)?;
    Ok(json_response(StatusCode::OK, frozen.result))
}

async fn feedback(
    State(state): State<Arc<AppState>>,
    UrlPath((id, expert)): UrlPath<(u64, String)>,
) -> Result<Response, ApiError> {
    let (round, frozen) = state.frozen(id)?;
    let eval = round
        .submissions
        .get(&expert)
        .ok_or_else(|| ApiError::not_found(format!("expert `{expert}` in round {id}")))?;
    let body = serde_json::json!({
        "round": id,
        "expert_id": expert,
        "records": feedback_report(eval, &frozen.merged),
    });
    Ok(json_response(StatusCode::OK, to_json(&body)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WhatIfRequest {
    overrides: Vec<Override>,
}

async fn whatif(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<u64>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: WhatIfRequest = parse(&body)?;
    let (round, frozen) = state.frozen(id)?;
    let graph = frozen
        .merged
        .to_graph(&state.hierarchy, round.record.timestamp.clone())
        .map_err(|e| ApiError::invalid(e.to_string()))?;
    let config = EngineConfig {
        smoothing: frozen.smoothing,
        ..state.engine
    };
    let report = what_if(&graph, &req.overrides, config)?;
    Ok(json_response(StatusCode::OK, to_json(&report)))
}

async fn hierarchy(State(state): State<Arc<AppState>>) -> Response {
    let mut doc = state.doc.clone();
    doc.edges.clear();
    for n in &mut doc.nodes {
        n.value = None;
    }
    json_response(StatusCode::OK, to_json(&doc))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/hierarchy", get(hierarchy))
        .route("/rounds", get(list_rounds).post(create_round))
        .route("/rounds/{id}/evaluations", post(submit))
        .route("/rounds/{id}/freeze", post(freeze))
        .route("/rounds/{id}/result", get(result))
        .route("/rounds/{id}/feedback/{expert}", get(feedback))
        .route("/rounds/{id}/whatif", post(whatif))
        .with_state(state)
}

/// Binds `127.0.0.1:port` and serves until the process ends.
pub async fn serve(state: AppState, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state))).await
}
