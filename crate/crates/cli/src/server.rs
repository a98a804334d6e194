//! `GET /graph` and `POST /filter` over a loaded component graph.

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use splift::analysis::GraphDocument;
use splift::featexpr::{FeatureExprError, FeatureModel, FeatureOrigin, Pc, PcStore};

pub const DEFAULT_PORT: u16 = 8080;
pub const PORT_ENV: &str = "SPLIFT_PORT";

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("graph document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("edge `{edge}`: {source}")]
    EdgePc {
        edge: String,
        #[source]
        source: FeatureExprError,
    },
    #[error("feature model: {0}")]
    FeatureModel(#[source] FeatureExprError),
}

/// The immutable snapshot the service answers from.
pub struct AppState {
    graph_text: String,
    edges: Vec<(String, Pc)>,
    fm: Pc,
    use_fm: bool,
    // parsing a request interns nodes, hence the lock
    store: Mutex<PcStore>,
}

impl AppState {
    /// Loads a graph document and an optional feature model. With `use_fm`
    /// false the model is loaded (so its features are known) but not used
    /// when filtering.
    pub fn load(graph_text: String, feature_model: Option<&str>, use_fm: bool) -> Result<Self, LoadError> {
        let doc: GraphDocument = serde_json::from_str(&graph_text)?;
        let mut store = PcStore::new();
        for f in &doc.features {
            store.register(f, FeatureOrigin::DeclaredBoolean);
        }
        let mut edges = Vec::with_capacity(doc.edges.len());
        for e in &doc.edges {
            let pc = store.parse(&e.pc).map_err(|source| LoadError::EdgePc {
                edge: e.id.clone(),
                source,
            })?;
            edges.push((e.id.clone(), pc));
        }
        let fm = match feature_model {
            Some(text) => {
                FeatureModel::parse(text, &mut store)
                    .map_err(LoadError::FeatureModel)?
                    .compiled
            }
            None => Pc::TRUE,
        };
        store.features_mut().set_closed(true);
        Ok(AppState {
            graph_text,
            edges,
            fm,
            use_fm,
            store: Mutex::new(store),
        })
    }

    /// Answers one filter request.
    pub fn filter(&self, expr: &str) -> Result<FilterResponse, FeatureExprError> {
        let mut store = self.store.lock().unwrap_or_else(|e| e.into_inner());
        let pc = store.parse(expr)?;
        let antecedent = if self.use_fm { store.and(pc, self.fm) } else { pc };
        let satisfiable = store.is_sat(antecedent);
        let highlighted = if satisfiable {
            self.edges
                .iter()
                .filter(|(_, e)| store.implies(antecedent, *e))
                .map(|(id, _)| id.clone())
                .collect()
        } else {
            Vec::new()
        };
        Ok(FilterResponse {
            highlighted,
            satisfiable,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterRequest {
    pub expr: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterResponse {
    pub highlighted: Vec<String>,
    pub satisfiable: bool,
}

fn error_response(status: StatusCode, kind: &str, message: String, offset: Option<usize>) -> Response {
    (
        status,
        Json(json!({"error": {"kind": kind, "message": message, "offset": offset}})),
    )
        .into_response()
}

async fn graph(State(state): State<Arc<AppState>>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], state.graph_text.clone()).into_response()
}

async fn filter(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: FilterRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, "malformed-json", e.to_string(), None),
    };
    match state.filter(&req.expr) {
        Ok(resp) => Json(resp).into_response(),
        Err(e) => {
            let kind = match e {
                FeatureExprError::UnknownFeature { .. } => "unknown-feature",
                _ => "syntax",
            };
            error_response(StatusCode::UNPROCESSABLE_ENTITY, kind, e.to_string(), e.offset())
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/graph", get(graph))
        .route("/filter", post(filter))
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, port: u16) -> std::io::Result<()> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
