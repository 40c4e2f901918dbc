//! Stateless JSON API over the sensitivity estimators.
//!
//! Every handler is a pure function of its request body. Malformed bodies
//! get 400 with the path of the offending field; inputs that parse but are
//! outside the estimators' domain get 422 with the same message the CLI
//! prints.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod api;

use std::net::SocketAddr;
use std::path::PathBuf;

use axum::body::Bytes;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    /// `schema` or `domain`.
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl From<metasens_core::Error> for ApiError {
    fn from(e: metasens_core::Error) -> Self {
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            body: ErrorBody {
                kind: "domain",
                message: e.to_string(),
                path: None,
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// Deserializes a body, reporting the path of the first offending field.
pub fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let schema = |message: String, path: Option<String>| ApiError {
        status: StatusCode::BAD_REQUEST,
        body: ErrorBody {
            kind: "schema",
            message,
            path,
        },
    };
    let mut de = serde_json::Deserializer::from_slice(body);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        schema(e.into_inner().to_string(), (path != ".").then_some(path))
    })?;
    de.end().map_err(|e| schema(e.to_string(), None))?;
    Ok(value)
}

fn handle<Req, Resp>(
    body: &[u8],
    f: impl FnOnce(Req) -> Result<Resp, metasens_core::Error>,
) -> Result<Json<Resp>, ApiError>
where
    Req: DeserializeOwned,
{
    let req = parse_body(body)?;
    Ok(Json(f(req)?))
}

async fn analyze(body: Bytes) -> Result<Json<api::AnalyzeResponse>, ApiError> {
    handle(&body, api::analyze_request)
}

async fn curve(body: Bytes) -> Result<Json<api::CurveResponse>, ApiError> {
    handle(&body, api::curve_request)
}

async fn table(body: Bytes) -> Result<Json<api::TableResponse>, ApiError> {
    handle(&body, api::table_request)
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    version: &'static str,
}

async fn health() -> Json<Health> {
    Json(Health {
        status: "ok",
        version: VERSION,
    })
}

/// Builds the router. With `static_dir`, unmatched paths are served from it
/// (the built UI bundle).
pub fn router(static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/analyze", post(analyze))
        .route("/api/curve", post(curve))
        .route("/api/table", post(table));
    let app = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.layer(CorsLayer::permissive())
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(static_dir)).await
}
