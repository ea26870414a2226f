//! wasm-bindgen surface for the static demo page in `www/`.
//!
//! Every export takes and returns JSON text; the `*_json` functions hold the
//! logic so they can be tested natively.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use tvws_core::geodata::build_pixel_grid;
use tvws_core::rfplan::{antenna_gain, coverage_map, Antenna, CoverageMetric, LinkDirection, LinkSetup, Orientation, RadioEndpoint};
use tvws_core::scanner::{no_progress, scan, scan_grid, ThresholdTable};
use tvws_core::spectrum::Band;
use tvws_core::{ChannelPlan, GeoCoordinate, ModelKind, PropagationParams, RegionBoundary, ScanConfig, TvTower};

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[derive(Debug, Deserialize)]
pub struct PatternRequest {
    pub antenna: Antenna,
    /// "azimuth" sweeps azimuth at `at` elevation, "elevation" the reverse.
    #[serde(default = "azimuth_cut")]
    pub cut: String,
    #[serde(default)]
    pub at: f64,
}

fn azimuth_cut() -> String {
    "azimuth".into()
}

#[derive(Debug, Serialize)]
pub struct Pattern {
    pub angles: Vec<f64>,
    pub gain_dbi: Vec<f64>,
}

/// Gain cut at 1 degree steps.
pub fn pattern_json(request: &str) -> Result<String, String> {
    let req: PatternRequest = serde_json::from_str(request).map_err(err)?;
    if let Antenna::Ura(u) = &req.antenna {
        u.validate().map_err(err)?;
    }
    let angles: Vec<f64> = match req.cut.as_str() {
        "azimuth" => (-180..180).map(f64::from).collect(),
        "elevation" => (-90..=90).map(f64::from).collect(),
        other => return Err(format!("cut: unknown cut {other:?}")),
    };
    let gain_dbi = angles
        .iter()
        .map(|a| {
            let dir = if req.cut == "azimuth" {
                Orientation { azimuth: *a, elevation: req.at }
            } else {
                Orientation { azimuth: req.at, elevation: *a }
            };
            antenna_gain(&req.antenna, dir, 600.0)
        })
        .collect();
    serde_json::to_string(&Pattern { angles, gain_dbi }).map_err(err)
}

#[derive(Debug, Deserialize)]
pub struct CoverageRequest {
    pub bs: RadioEndpoint,
    pub ue: RadioEndpoint,
    pub frequency_mhz: f64,
    pub bandwidth_hz: f64,
    pub radius_km: f64,
    pub pixel_km: f64,
    #[serde(default = "default_metric")]
    pub metric: String,
    #[serde(default)]
    pub direction: LinkDirection,
}

fn default_metric() -> String {
    "rss".into()
}

#[derive(Debug, Serialize)]
pub struct Raster {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<Option<f64>>,
}

/// Free-space coverage raster in a circle around the base station.
pub fn coverage_json(request: &str) -> Result<String, String> {
    let req: CoverageRequest = serde_json::from_str(request).map_err(err)?;
    let metric: CoverageMetric = req.metric.parse().map_err(err)?;
    let boundary = RegionBoundary::circle(req.bs.location, req.radius_km).map_err(err)?;
    let grid = build_pixel_grid(&boundary, req.pixel_km).map_err(err)?;
    if grid.len() > 40_000 {
        return Err("pixel_km: raster too large for the demo".into());
    }
    let setup = LinkSetup {
        frequency_mhz: req.frequency_mhz,
        bandwidth_hz: req.bandwidth_hz,
        model: ModelKind::FreeSpace,
        propagation: PropagationParams::default(),
    };
    let values = coverage_map(&req.bs, &grid, metric, &req.ue, req.direction, &setup, None).map_err(err)?;
    serde_json::to_string(&Raster { rows: grid.rows, cols: grid.cols, values }).map_err(err)
}

#[derive(Debug, Deserialize)]
pub struct DemoTower {
    pub lat: f64,
    pub lon: f64,
    pub erp_kw: f64,
    pub channel: u32,
    #[serde(default = "default_tower_height")]
    pub height_m: f64,
}

fn default_tower_height() -> f64 {
    100.0
}

#[derive(Debug, Deserialize)]
pub struct MiniScanRequest {
    pub center: GeoCoordinate,
    pub radius_km: f64,
    pub pixel_km: f64,
    pub towers: Vec<DemoTower>,
    #[serde(default = "default_threshold")]
    pub threshold_dbm: f64,
    #[serde(default)]
    pub sep_co: f64,
    #[serde(default)]
    pub sep_adj: f64,
    #[serde(default)]
    pub reserved: Vec<u32>,
}

fn default_threshold() -> f64 {
    -60.0
}

#[derive(Debug, Serialize)]
pub struct MiniScan {
    pub rows: usize,
    pub cols: usize,
    pub channels: Vec<u32>,
    /// Available channel count per grid cell, `None` outside the region.
    pub totals: Vec<Option<u32>>,
    pub max_range_km: f64,
}

/// Free-space availability scan over UHF 14-20.
pub fn mini_scan_json(request: &str) -> Result<String, String> {
    let req: MiniScanRequest = serde_json::from_str(request).map_err(err)?;
    let towers = req
        .towers
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut tower = TvTower::synthetic(i as i64 + 1, GeoCoordinate::new(t.lat, t.lon).map_err(err)?, t.erp_kw, t.channel);
            tower.height_agl_m = t.height_m;
            tower.frequency_mhz = 473.0 + 6.0 * (f64::from(t.channel) - 14.0);
            Ok(tower)
        })
        .collect::<Result<Vec<_>, String>>()?;
    let cfg = ScanConfig {
        boundary: RegionBoundary::circle(req.center, req.radius_km).map_err(err)?,
        pixel_size: req.pixel_km,
        plan: ChannelPlan::single(Band::Uhf, 14, 20, 473.0, 6.0),
        channels: (14..=20).collect(),
        reserved: req.reserved,
        wsd_height: 10.0,
        wsd_gain: 0.0,
        tv_rx_height: 10.0,
        tv_rx_gain: 0.0,
        thresholds: ThresholdTable::uniform(req.threshold_dbm),
        sep_co: req.sep_co,
        sep_adj: req.sep_adj,
        model: ModelKind::FreeSpace,
        propagation: PropagationParams { max_range_km: 150.0, ..Default::default() },
        radials: 36,
        compute_noise: false,
        max_noise: -85.0,
        erp_dipole: false,
    };
    let grid = scan_grid(&cfg, &towers).map_err(err)?;
    if grid.len() > 20_000 {
        return Err("pixel_km: grid too large for the demo".into());
    }
    let results = scan(&cfg, &towers, None, &no_progress).map_err(err)?;
    let mut values = results.pixels.iter().map(|p| p.total_available);
    let totals = grid.mask.iter().map(|inside| if *inside { values.next() } else { None }).collect();
    serde_json::to_string(&MiniScan {
        rows: grid.rows,
        cols: grid.cols,
        channels: results.channels,
        totals,
        max_range_km: cfg.propagation.max_range_km,
    })
    .map_err(err)
}

#[wasm_bindgen]
pub fn antenna_pattern(request: &str) -> Result<String, JsValue> {
    pattern_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn coverage_raster(request: &str) -> Result<String, JsValue> {
    coverage_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn mini_scan(request: &str) -> Result<String, JsValue> {
    mini_scan_json(request).map_err(|e| JsValue::from_str(&e))
}
