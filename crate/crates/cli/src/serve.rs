//! Read-only HTTP API over one precomputed layout and its dataset.
//!
//! | route                       | answer                                        |
//! |-----------------------------|-----------------------------------------------|
//! | `GET /layout`               | the layout file, byte for byte, with an ETag  |
//! | `GET /intersections`        | intersection graphs for `t0..=t1`             |
//! | `GET /objects/{id}/track`   | observations of one object                    |
//! | `POST /filter`              | ids passing attribute range predicates        |
//!
//! Every route answers 503 until the files are loaded.

use crate::{read_layout, CliError, ServeArgs};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use morevis_core::explore::{Explorer, RangePredicate};
use morevis_core::{ExploreError, MovingRegionDataset, Timestep};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;
use std::sync::{Arc, OnceLock};
use tower_http::cors::{Any, CorsLayer};

pub struct Served {
    layout_json: Vec<u8>,
    etag: String,
    explorer: Explorer,
}

impl Served {
    /// `layout_json` must be a layout document computed from `dataset`.
    pub fn new(layout_json: Vec<u8>, dataset: MovingRegionDataset) -> Result<Self, CliError> {
        let text = String::from_utf8_lossy(&layout_json);
        let doc = morevis_core::layout_from_json(&text).map_err(|source| CliError::Export {
            path: "layout".into(),
            source,
        })?;
        let etag = format!("\"{}\"", hex::encode(Sha256::digest(&layout_json)));
        Ok(Self {
            explorer: Explorer::new(doc.layout, dataset)?,
            layout_json,
            etag,
        })
    }

    pub fn etag(&self) -> &str {
        &self.etag
    }
}

/// Shared handler state; empty until [`AppState::init`] is called.
#[derive(Clone, Default)]
pub struct AppState {
    served: Arc<OnceLock<Served>>,
}

impl AppState {
    pub fn ready(served: Served) -> Self {
        let state = Self::default();
        state.init(served);
        state
    }

    /// Later calls are ignored.
    pub fn init(&self, served: Served) {
        let _ = self.served.set(served);
    }

    fn get(&self) -> Result<&Served, ApiError> {
        self.served.get().ok_or(ApiError::NotReady)
    }
}

enum ApiError {
    NotReady,
    BadRequest(String),
    NotFound(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, message) = match self {
            ApiError::NotReady => (StatusCode::SERVICE_UNAVAILABLE, "layout is still loading".to_string()),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
        };
        (status, Json(serde_json::json!({ "error": message }))).into_response()
    }
}

impl From<ExploreError> for ApiError {
    fn from(e: ExploreError) -> Self {
        match e {
            ExploreError::UnknownObject(_) => ApiError::NotFound(e.to_string()),
            _ => ApiError::BadRequest(e.to_string()),
        }
    }
}

pub fn router(state: AppState, cors: CorsLayer) -> Router {
    Router::new()
        .route("/layout", get(get_layout))
        .route("/intersections", get(get_intersections))
        .route("/objects/{id}/track", get(get_track))
        .route("/filter", post(filter))
        .layer(cors)
        .with_state(state)
}

pub fn cors_layer(origin: Option<&str>) -> Result<CorsLayer, CliError> {
    let layer = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    Ok(match origin {
        None => layer.allow_origin(Any),
        Some(o) => layer.allow_origin(
            o.parse::<HeaderValue>()
                .map_err(|e| CliError::Usage(format!("bad --cors-origin '{o}': {e}")))?,
        ),
    })
}

async fn get_layout(State(state): State<AppState>, headers: HeaderMap) -> Result<Response, ApiError> {
    let served = state.get()?;
    let etag = HeaderValue::from_str(&served.etag).expect("hex digests are valid header values");
    let matches = headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|tag| tag.trim() == served.etag || tag.trim() == "*"));
    if matches {
        return Ok((StatusCode::NOT_MODIFIED, [(header::ETAG, etag)]).into_response());
    }
    Ok((
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("application/json")),
            (header::ETAG, etag),
        ],
        served.layout_json.clone(),
    )
        .into_response())
}

#[derive(Debug, Deserialize)]
struct IntersectionQuery {
    t0: Option<Timestep>,
    t1: Option<Timestep>,
    /// Comma-separated object ids.
    objects: Option<String>,
}

async fn get_intersections(State(state): State<AppState>, Query(q): Query<IntersectionQuery>) -> Result<Response, ApiError> {
    let served = state.get()?;
    let timesteps = &served.explorer.layout().timesteps;
    let (Some(&first), Some(&last)) = (timesteps.first(), timesteps.last()) else {
        return Err(ApiError::BadRequest("layout has no timesteps".into()));
    };
    let objects: Option<BTreeSet<String>> = q
        .objects
        .as_deref()
        .map(|s| s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect());
    let slices = served
        .explorer
        .get_intersections(q.t0.unwrap_or(first), q.t1.unwrap_or(last), objects.as_ref())
        .map_err(|e| match e {
            // an unknown id in a query filter is a bad request, not a missing resource
            ExploreError::UnknownObject(_) => ApiError::BadRequest(e.to_string()),
            e => e.into(),
        })?;
    Ok(Json(slices).into_response())
}

async fn get_track(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let served = state.get()?;
    Ok(Json(served.explorer.get_object_track(&id)?).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Predicate {
    attribute: String,
    min: Option<f64>,
    max: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterRequest {
    #[serde(default)]
    predicates: Vec<Predicate>,
}

async fn filter(State(state): State<AppState>, body: axum::body::Bytes) -> Result<Response, ApiError> {
    let served = state.get()?;
    let request: FilterRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(format!("bad filter request: {e}")))?;
    let predicates: Vec<RangePredicate> = request
        .predicates
        .into_iter()
        .map(|p| RangePredicate {
            attribute: p.attribute,
            min: p.min.unwrap_or(f64::NEG_INFINITY),
            max: p.max.unwrap_or(f64::INFINITY),
        })
        .collect();
    let ids = served.explorer.filter_objects(&predicates)?;
    Ok(Json(serde_json::json!({ "ids": ids })).into_response())
}

/// Binds first and loads the files in the background, so early requests get 503.
pub fn run(args: &ServeArgs) -> Result<(), CliError> {
    let cors = cors_layer(args.cors_origin.as_deref())?;
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::Server)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
            .await
            .map_err(CliError::Server)?;
        let addr = listener.local_addr().map_err(CliError::Server)?;
        let state = AppState::default();
        let app = router(state.clone(), cors);
        let server = tokio::spawn(async move {
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await
        });
        eprintln!("listening on http://{addr}");

        let (layout_path, dataset_path, dataset_args) =
            (args.layout.clone(), args.dataset.clone(), args.dataset_args.clone());
        let loaded = tokio::task::spawn_blocking(move || -> Result<Served, CliError> {
            let (bytes, _) = read_layout(&layout_path)?;
            let dataset = dataset_args.load(&dataset_path)?;
            Served::new(bytes, dataset)
        })
        .await
        .map_err(|e| CliError::Server(std::io::Error::other(e)))?;
        match loaded {
            Ok(served) => {
                state.init(served);
                eprintln!("layout loaded");
            }
            Err(e) => {
                server.abort();
                return Err(e);
            }
        }
        server
            .await
            .map_err(|e| CliError::Server(std::io::Error::other(e)))?
            .map_err(CliError::Server)
    })
}
