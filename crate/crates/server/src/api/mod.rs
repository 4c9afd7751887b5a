//! JSON-over-HTTP boundary: routing, authentication and error shaping.

pub mod error;
pub mod extract;
mod handlers;
pub mod routes;

use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Request, State};
use axum::http::header::{AUTHORIZATION, CONTENT_TYPE};
use axum::http::{HeaderValue, Method};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::Router;
use medbook_core::domain::Principal;
use medbook_core::{Error, Medbook};
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::request_id::{MakeRequestUuid, PropagateRequestIdLayer, SetRequestIdLayer};
use tower_http::trace::{DefaultOnResponse, TraceLayer};
use tracing::Level;

pub use error::ApiError;
pub use routes::{openapi_document, Access, Route, ADMIN_PREFIX, ROUTES};

#[derive(Clone)]
pub struct AppState {
    pub app: Arc<Medbook>,
    openapi: Arc<serde_json::Value>,
}

/// Patient sessions never reach an admin handler, whatever the route.
async fn reject_patients(State(state): State<AppState>, request: Request, next: Next) -> Response {
    if let Some(token) = extract::bearer(request.headers()) {
        if let Ok(Principal::Patient(_)) = state.app.authenticate(token) {
            return ApiError::from(Error::Forbidden).into_response();
        }
    }
    next.run(request).await
}

fn cors(origins: &[String]) -> CorsLayer {
    let origins: Vec<HeaderValue> = origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()).collect();
    CorsLayer::new()
        .allow_origin(AllowOrigin::list(origins))
        .allow_methods([Method::GET, Method::POST, Method::DELETE])
        .allow_headers([AUTHORIZATION, CONTENT_TYPE])
        .max_age(Duration::from_secs(600))
}

pub fn router(app: Arc<Medbook>, cors_origins: &[String]) -> Router {
    let state = AppState {
        app,
        openapi: Arc::new(openapi_document()),
    };
    let mut open = Router::new();
    let mut admin = Router::new();
    for route in ROUTES {
        if route.path.starts_with(ADMIN_PREFIX) {
            admin = admin.route(route.path, route.handler());
        } else {
            open = open.route(route.path, route.handler());
        }
    }
    let admin = admin.route_layer(middleware::from_fn_with_state(state.clone(), reject_patients));

    let trace = TraceLayer::new_for_http()
        .make_span_with(|req: &Request| {
            let request_id = req
                .headers()
                .get("x-request-id")
                .and_then(|v| v.to_str().ok())
                .unwrap_or("-");
            // Path only: query strings are never logged.
            tracing::info_span!("request", method = %req.method(), path = %req.uri().path(), request_id)
        })
        .on_response(DefaultOnResponse::new().level(Level::INFO));

    open.merge(admin)
        .fallback(handlers::fallback)
        .method_not_allowed_fallback(handlers::method_not_allowed)
        .layer(cors(cors_origins))
        .layer(PropagateRequestIdLayer::x_request_id())
        .layer(trace)
        .layer(SetRequestIdLayer::x_request_id(MakeRequestUuid))
        .with_state(state)
}
