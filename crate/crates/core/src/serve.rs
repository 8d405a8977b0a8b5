//! Read-only HTTP service feeding the time-space diagram viewer.
//!
//! Routes:
//! * `GET /api/graph` returns the export JSON as loaded,
//! * `GET /api/search?keyword=K[&mode=substring]` returns matching event ids,
//! * anything else is served from the static bundle directory (404 if absent).

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Deserialize;
use thiserror::Error;
use tower_http::services::ServeDir;

use crate::graph::{CausalGraph, GraphConfig, GraphError, GraphExport};
use crate::search::{keyword_search, KeywordMode};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("UI bundle directory {0} does not exist")]
    MissingBundle(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not a graph export: {source}")]
    BadExport {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("cannot bind port {port}: {source}")]
    Bind {
        port: u16,
        #[source]
        source: std::io::Error,
    },
}

/// Data loaded once at startup and shared by all requests.
#[derive(Debug)]
pub struct ServeState {
    export_json: String,
    graph: CausalGraph,
}

impl ServeState {
    pub fn from_export_json(json: String, cfg: &GraphConfig) -> Result<Self, ServeError> {
        let export: GraphExport = serde_json::from_str(&json).map_err(|source| ServeError::BadExport {
            path: PathBuf::from("<memory>"),
            source,
        })?;
        let graph = export.rebuild(cfg)?;
        Ok(ServeState {
            export_json: json,
            graph,
        })
    }

    pub fn load(data_file: &Path, cfg: &GraphConfig) -> Result<Self, ServeError> {
        let json = std::fs::read_to_string(data_file).map_err(|source| ServeError::Io {
            path: data_file.to_path_buf(),
            source,
        })?;
        Self::from_export_json(json, cfg).map_err(|e| match e {
            ServeError::BadExport { source, .. } => ServeError::BadExport {
                path: data_file.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }
}

#[derive(Debug, Deserialize)]
struct SearchParams {
    keyword: Option<String>,
    #[serde(default)]
    mode: KeywordMode,
}

async fn graph_handler(State(state): State<Arc<ServeState>>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], state.export_json.clone()).into_response()
}

async fn search_handler(State(state): State<Arc<ServeState>>, Query(q): Query<SearchParams>) -> Response {
    let keyword = q.keyword.unwrap_or_default();
    match keyword_search(&state.graph, &keyword, q.mode) {
        Ok(ids) => Json(ids.into_iter().collect::<Vec<_>>()).into_response(),
        Err(e) => (
            StatusCode::BAD_REQUEST,
            Json(serde_json::json!({ "error": e.to_string() })),
        )
            .into_response(),
    }
}

pub fn router(bundle_dir: &Path, state: ServeState) -> Result<Router, ServeError> {
    if !bundle_dir.is_dir() {
        return Err(ServeError::MissingBundle(bundle_dir.to_path_buf()));
    }
    Ok(Router::new()
        .route("/api/graph", get(graph_handler))
        .route("/api/search", get(search_handler))
        .fallback_service(ServeDir::new(bundle_dir))
        .with_state(Arc::new(state)))
}

/// Binds `port` on localhost and serves until the process is stopped.
pub async fn serve(bundle_dir: &Path, data_file: &Path, port: u16, cfg: &GraphConfig) -> Result<(), ServeError> {
    let state = ServeState::load(data_file, cfg)?;
    let app = router(bundle_dir, state)?;
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { port, source })?;
    log::info!("serving on http://{addr}");
    axum::serve(listener, app)
        .await
        .map_err(|source| ServeError::Io {
            path: PathBuf::from(addr.to_string()),
            source,
        })
}
