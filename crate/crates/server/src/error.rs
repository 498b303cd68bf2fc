use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use resched_core::{EngineError, ModelError, ScenarioError};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),

    #[error("{message}")]
    BadRequest { path: Option<String>, message: String },

    #[error("{0}")]
    Unprocessable(String),

    #[error("{0}")]
    Conflict(String),

    #[error("missing or wrong bearer token")]
    Unauthorized,

    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn bad(message: impl Into<String>) -> Self {
        ApiError::BadRequest { path: None, message: message.into() }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ApiError::BadRequest { .. } => StatusCode::BAD_REQUEST,
            ApiError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Unauthorized => StatusCode::UNAUTHORIZED,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<ScenarioError> for ApiError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Model(ModelError::InfeasibleBaseline(v)) => {
                ApiError::Unprocessable(format!("initial schedule is infeasible: {v}"))
            }
            other => ApiError::BadRequest { path: other.path().map(str::to_string), message: other.to_string() },
        }
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        ApiError::BadRequest { path: e.path().map(str::to_string), message: e.to_string() }
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Model(m) => m.into(),
            EngineError::InvalidConfig(m) => ApiError::bad(m),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.to_string() });
        if let ApiError::BadRequest { path: Some(p), .. } = &self {
            body["path"] = p.clone().into();
        }
        (self.status(), Json(body)).into_response()
    }
}
