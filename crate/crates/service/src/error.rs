use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use thiserror::Error;

use tvws_core::geodata::GeoError;
use tvws_core::rfplan::RfError;
use tvws_core::scanner::ScanError;
use tvws_core::spectrum::SpectrumError;
use tvws_core::terrain::TerrainError;
use tvws_core::ValidationError;

/// Failure of a command or request.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("{}", match field { Some(f) => format!("{f}: {message}"), None => message.clone() })]
    Validation { field: Option<String>, message: String },
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Runtime(String),
}

impl AppError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        AppError::Validation { field: Some(field.into()), message: message.into() }
    }

    pub fn bad_input(message: impl Into<String>) -> Self {
        AppError::Validation { field: None, message: message.into() }
    }

    /// Process exit status: 1 for bad input, 2 for anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Validation { .. } => 1,
            _ => 2,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            AppError::Validation { .. } => "validation",
            AppError::NotFound(_) => "not_found",
            AppError::Conflict(_) => "conflict",
            AppError::Runtime(_) => "internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            AppError::Validation { .. } => StatusCode::BAD_REQUEST,
            AppError::NotFound(_) => StatusCode::NOT_FOUND,
            AppError::Conflict(_) => StatusCode::CONFLICT,
            AppError::Runtime(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn message(&self) -> String {
        match self {
            AppError::Validation { message, .. } => message.clone(),
            other => other.to_string(),
        }
    }

    /// The `{error: {code, message, field?}}` envelope.
    pub fn envelope(&self) -> serde_json::Value {
        let mut body = json!({ "code": self.code(), "message": self.message() });
        if let AppError::Validation { field: Some(f), .. } = self {
            body["field"] = json!(f);
        }
        json!({ "error": body })
    }
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.envelope())).into_response()
    }
}

impl From<ValidationError> for AppError {
    fn from(e: ValidationError) -> Self {
        AppError::Validation { field: Some(e.field), message: e.message }
    }
}

impl From<GeoError> for AppError {
    fn from(e: GeoError) -> Self {
        AppError::invalid("boundary", e.to_string())
    }
}

impl From<SpectrumError> for AppError {
    fn from(e: SpectrumError) -> Self {
        match e {
            SpectrumError::TooManyReserved(_) => AppError::invalid("reserved", e.to_string()),
            other => AppError::bad_input(other.to_string()),
        }
    }
}

impl From<TerrainError> for AppError {
    fn from(e: TerrainError) -> Self {
        match e {
            TerrainError::Io(_) => AppError::Runtime(format!("terrain: {e}")),
            other => AppError::invalid("terrain", other.to_string()),
        }
    }
}

impl From<ScanError> for AppError {
    fn from(e: ScanError) -> Self {
        match e {
            ScanError::Validation(v) => v.into(),
            ScanError::Geo(g) => g.into(),
            ScanError::Spectrum(s) => s.into(),
            ScanError::MissingThreshold { .. } => AppError::invalid("thresholds", e.to_string()),
            ScanError::NoiseNotComputed | ScanError::Csv { .. } => AppError::bad_input(e.to_string()),
            ScanError::Propagation(_) | ScanError::Io(_) => AppError::Runtime(e.to_string()),
        }
    }
}

impl From<RfError> for AppError {
    fn from(e: RfError) -> Self {
        match e {
            RfError::Validation(v) => v.into(),
            RfError::InvalidBandwidth(_) => AppError::invalid("bandwidth_hz", e.to_string()),
            RfError::Propagation(_) => AppError::Runtime(e.to_string()),
            other => AppError::bad_input(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for AppError {
    fn from(e: serde_json::Error) -> Self {
        AppError::bad_input(format!("invalid json: {e}"))
    }
}
