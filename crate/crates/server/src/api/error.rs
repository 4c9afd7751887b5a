use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use medbook_core::store::StorageError;
use medbook_core::Error;
use serde::{Deserialize, Serialize};

/// Body of every non-2xx response.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
    /// Per-field problems, present for signup validation failures.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<FieldError>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status: status.as_u16(),
            code: code.to_owned(),
            message: message.into(),
            errors: Vec::new(),
        }
    }

    pub fn missing_token() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "missing_token", "a bearer session token is required")
    }

    pub fn route_not_found() -> Self {
        Self::new(StatusCode::NOT_FOUND, "route_not_found", "no such route")
    }

    pub fn method_not_allowed() -> Self {
        Self::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed on this route")
    }

    pub fn internal() -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "internal server error")
    }

    pub fn status_code(&self) -> StatusCode {
        StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }
}

pub fn status_of(err: &Error) -> StatusCode {
    match err {
        Error::Registration(_)
        | Error::InvalidCoordinates
        | Error::InvalidWorkingHours(_)
        | Error::InvalidEmail
        | Error::InvalidField { .. }
        | Error::DateOutOfRange
        | Error::InvalidSlot
        | Error::PastSlot => StatusCode::UNPROCESSABLE_ENTITY,
        Error::SigninFailed | Error::UnknownToken | Error::ExpiredToken => StatusCode::UNAUTHORIZED,
        Error::Forbidden => StatusCode::FORBIDDEN,
        Error::NotFound(_) => StatusCode::NOT_FOUND,
        Error::DuplicateUsername
        | Error::DuplicateEmail
        | Error::SlotTaken
        | Error::AlreadyCancelled
        | Error::DailyLimitReached => StatusCode::CONFLICT,
        Error::Storage(StorageError::ConstraintViolation(_)) => StatusCode::CONFLICT,
        Error::Storage(StorageError::Conflict | StorageError::Unavailable(_)) => StatusCode::SERVICE_UNAVAILABLE,
        Error::Storage(StorageError::Corrupt(_)) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let status = status_of(&err);
        if let Error::Storage(inner) = &err {
            tracing::error!(error = %inner, "storage failure");
            let message = match inner {
                StorageError::Corrupt(_) => "internal server error",
                _ => "storage is temporarily unavailable, try again",
            };
            return Self::new(status, err.code(), message);
        }
        let mut api = Self::new(status, err.code(), err.to_string());
        if let Error::Registration(issues) = &err {
            api.errors = issues
                .iter()
                .map(|i| FieldError {
                    field: i.field().to_owned(),
                    code: i.code().to_owned(),
                    message: i.message().to_owned(),
                })
                .collect();
        }
        api
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        let code = match &rejection {
            JsonRejection::JsonDataError(_) => "invalid_body",
            JsonRejection::JsonSyntaxError(_) => "malformed_json",
            JsonRejection::MissingJsonContentType(_) => "unsupported_media_type",
            _ => "bad_request",
        };
        Self::new(rejection.status(), code, rejection.body_text())
    }
}

impl From<PathRejection> for ApiError {
    fn from(_: PathRejection) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", "no resource with this identifier")
    }
}

impl From<QueryRejection> for ApiError {
    fn from(rejection: QueryRejection) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_query", rejection.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status_code(), Json(self)).into_response()
    }
}
