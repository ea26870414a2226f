//! Steps shared by the command line and the HTTP service, so both produce
//! the same bytes from the same inputs.

use tvws_core::geodata::load_geojson_polygon;
use tvws_core::scanner::{export_csv_string, scan};
use tvws_core::spectrum::{load_towers, TowerLoad};
use tvws_core::terrain::load_terrain;
use tvws_core::{ChannelPlan, ModelKind, ScanConfig, ScanResults, TerrainGrid};

use crate::error::AppError;

pub fn parse_scan_config(text: &str) -> Result<ScanConfig, AppError> {
    let cfg: ScanConfig = serde_json::from_str(text)?;
    Ok(cfg)
}

pub fn parse_towers(text: &str, plan: Option<&ChannelPlan>) -> Result<TowerLoad, AppError> {
    let load = load_towers(text.as_bytes(), plan)?;
    for d in &load.diagnostics {
        log::warn!("towers: {d}");
    }
    Ok(load)
}

pub fn parse_terrain(text: &str) -> Result<TerrainGrid, AppError> {
    Ok(load_terrain(text.as_bytes())?)
}

/// Optional overrides applied on top of a scan config file.
#[derive(Debug, Clone, Default)]
pub struct ScanOverrides {
    pub boundary_geojson: Option<String>,
    pub model: Option<ModelKind>,
}

impl ScanOverrides {
    pub fn apply(&self, cfg: &mut ScanConfig) -> Result<(), AppError> {
        if let Some(text) = &self.boundary_geojson {
            cfg.boundary = load_geojson_polygon(text.as_bytes())?;
        }
        if let Some(model) = self.model {
            cfg.model = model;
        }
        Ok(())
    }
}

/// Runs a scan and renders the result table.
pub fn run_scan(
    cfg: &ScanConfig,
    towers: &TowerLoad,
    terrain: Option<&TerrainGrid>,
    threads: Option<usize>,
    progress: &(dyn Fn(f64) + Sync),
) -> Result<(ScanResults, String), AppError> {
    let go = || scan(cfg, &towers.towers, terrain, progress);
    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| AppError::Runtime(format!("thread pool: {e}")))?
            .install(go)?,
        None => go()?,
    };
    let csv = export_csv_string(&results);
    Ok((results, csv))
}
