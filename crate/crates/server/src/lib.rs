//! HTTP/JSON service over the query engine and statistics.
//!
//! | route | body / query | response |
//! |---|---|---|
//! | `GET /datasets` | | dataset inventories (loads every dataset) |
//! | `POST /load` | `{"dataset": id}` | inventory plus `load_ms` |
//! | `POST /query` | `QueryState` | page of matches, `total_hits`, `elapsed_ms`, link `state` |
//! | `POST /freq` | `QueryState` | one-variable breakdown |
//! | `POST /crosstab` | `QueryState` | two-variable breakdown with the test |
//! | `POST /compare` | `QueryState` | breakdown of `dataset` vs `compare` |
//! | `GET /state/{token}` | | decoded `QueryState` |
//! | `GET /export.tsv?state=&kind=` | | TSV |
//!
//! Errors are `{code, message, detail}`.

mod registry;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use relscope_core::service::{self, DatasetInfo, ExportKind, QueryResponse, ServiceError};
use relscope_core::state::QueryState;
use relscope_core::stats::Breakdown;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use registry::{Loaded, Registry};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: code.into(),
            message: message.into(),
            detail: Value::Null,
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match e {
            ServiceError::UnknownDataset(_) => StatusCode::NOT_FOUND,
            ServiceError::Query(_) | ServiceError::State(_) => StatusCode::BAD_REQUEST,
            ServiceError::Load { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            code: e.code().to_string(),
            message: e.to_string(),
            detail: e.detail(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Runs engine work off the async workers.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal".into(),
            message: e.to_string(),
            detail: Value::Null,
        }),
    }
}

/// JSON body with errors reported in the service's own format.
fn body<T: for<'de> Deserialize<'de>>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request("invalid_state", e.to_string()))
}

pub type Shared = Arc<Registry>;

pub fn router(registry: Shared) -> Router {
    Router::new()
        .route("/datasets", get(datasets))
        .route("/load", post(load))
        .route("/query", post(query))
        .route("/freq", post(freq))
        .route("/crosstab", post(crosstab))
        .route("/compare", post(compare))
        .route("/state/{token}", get(decode_state))
        .route("/export.tsv", get(export))
        .with_state(registry)
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, registry: Registry) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(Arc::new(registry))).await
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum DatasetRecord {
    Ready(DatasetInfo),
    Failed { dataset_id: String, error: ApiError },
}

async fn datasets(State(reg): State<Shared>) -> Json<Vec<DatasetRecord>> {
    let mut out = Vec::new();
    for id in reg.ids() {
        out.push(match reg.get(id).await {
            Ok(l) => DatasetRecord::Ready(DatasetInfo::of(l.corpus.dataset())),
            Err(e) => DatasetRecord::Failed {
                dataset_id: id.to_string(),
                error: e.into(),
            },
        });
    }
    Json(out)
}

#[derive(Debug, Deserialize)]
struct LoadRequest {
    dataset: String,
}

#[derive(Debug, Serialize)]
struct LoadResponse {
    #[serde(flatten)]
    info: DatasetInfo,
    load_ms: f64,
}

async fn load(State(reg): State<Shared>, bytes: Bytes) -> ApiResult<LoadResponse> {
    let req: LoadRequest = body(&bytes)?;
    let l = reg.get(&req.dataset).await?;
    Ok(Json(LoadResponse {
        info: DatasetInfo::of(l.corpus.dataset()),
        load_ms: l.load_ms,
    }))
}

#[derive(Debug, Serialize)]
struct QueryReply {
    #[serde(flatten)]
    response: QueryResponse,
    /// Shareable-link token for the request.
    state: String,
}

async fn query(State(reg): State<Shared>, bytes: Bytes) -> ApiResult<QueryReply> {
    let state: QueryState = body(&bytes)?;
    let l = reg.get(&state.dataset).await?;
    let token = state.encode();
    let response = blocking(move || service::query(&state, &l.corpus)).await?;
    Ok(Json(QueryReply { response, state: token }))
}

async fn freq(State(reg): State<Shared>, bytes: Bytes) -> Result<Response, ApiError> {
    let state: QueryState = body(&bytes)?;
    let l = reg.get(&state.dataset).await?;
    let r = blocking(move || service::breakdown(&state, &l.corpus, false)).await?;
    Ok(Json(r).into_response())
}

async fn crosstab(State(reg): State<Shared>, bytes: Bytes) -> Result<Response, ApiError> {
    let state: QueryState = body(&bytes)?;
    let l = reg.get(&state.dataset).await?;
    let r = blocking(move || service::breakdown(&state, &l.corpus, true)).await?;
    if let Breakdown::CrossTab { table } = &r.result {
        if table.test.is_none() {
            return Err(ApiError {
                status: StatusCode::BAD_REQUEST,
                code: "test_not_applicable".into(),
                message: "test not applicable: the table has fewer than 2 non-empty rows or columns".into(),
                detail: json!({ "table": table, "total_matches": r.total_matches }),
            });
        }
    }
    Ok(Json(r).into_response())
}

async fn compare(State(reg): State<Shared>, bytes: Bytes) -> Result<Response, ApiError> {
    let state: QueryState = body(&bytes)?;
    let other = state
        .compare
        .clone()
        .ok_or_else(|| ApiError::bad_request("invalid_state", "no comparison dataset selected"))?;
    let a = reg.get(&state.dataset).await?;
    let b = reg.get(&other).await?;
    let r = blocking(move || service::compare(&state, &a.corpus, &b.corpus)).await?;
    Ok(Json(r).into_response())
}

async fn decode_state(Path(token): Path<String>) -> ApiResult<QueryState> {
    Ok(Json(QueryState::decode(&token).map_err(ServiceError::from)?))
}

#[derive(Debug, Deserialize)]
struct ExportParams {
    state: Option<String>,
    kind: Option<String>,
}

async fn export(State(reg): State<Shared>, Query(p): Query<ExportParams>) -> Result<Response, ApiError> {
    let token = p.state.ok_or_else(|| ApiError::bad_request("bad_token", "missing `state` parameter"))?;
    let state = QueryState::decode(&token).map_err(ServiceError::from)?;
    let kind = match p.kind.as_deref() {
        None => ExportKind::infer(&state),
        Some(k) => ExportKind::parse(k).ok_or_else(|| {
            let mut e = ApiError::bad_request("invalid_state", format!("unknown export kind `{k}`"));
            e.detail = json!({ "allowed": ["concordance", "freq", "crosstab", "compare"] });
            e
        })?,
    };
    let corpus = reg.get(&state.dataset).await?;
    let other = match (&kind, &state.compare) {
        (ExportKind::Compare, Some(id)) => Some(reg.get(id).await?),
        _ => None,
    };
    let tsv = blocking(move || {
        service::export_tsv(&state, kind, &corpus.corpus, other.as_ref().map(|o| o.corpus.as_ref()))
    })
    .await?;
    Ok((
        [
            (header::CONTENT_TYPE, "text/tab-separated-values; charset=utf-8"),
            (header::CONTENT_DISPOSITION, "attachment; filename=\"export.tsv\""),
        ],
        tsv,
    )
        .into_response())
}
