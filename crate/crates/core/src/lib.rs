//! TV white space spectrum engine.
//!
//! Computes, for every pixel of a region, which TV channels a white space
//! device may use given a tower dataset, a terrain model and regulator
//! parameters, and evaluates TVWS base-station links.

pub mod geodata;
pub mod propagation;
pub mod rfplan;
pub mod scanner;
pub mod spectrum;
pub mod terrain;

mod par;

pub use geodata::{GeoCoordinate, PixelGrid, RegionBoundary};
pub use propagation::{ModelKind, PathlossResult, PropagationParams};
pub use scanner::{PixelResult, ScanConfig, ScanResults};
pub use spectrum::{ChannelPlan, TvTower};
pub use terrain::{TerrainGrid, TerrainProfile};

/// Field-level validation failure for configuration documents.
#[derive(Debug, Clone, PartialEq, thiserror::Error, serde::Serialize)]
#[error("{field}: {message}")]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

/// Received level reported when no signal or no noise is present, in dBm.
pub const NO_SIGNAL_DBM: f64 = -1000.0;
