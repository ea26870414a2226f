//! Point-to-point and point-to-multipoint planning documents.

use serde::{Deserialize, Serialize};

use tvws_core::geodata::build_pixel_grid;
use tvws_core::rfplan::{
    coverage_map, evaluate_link, evaluate_ptmp, optimize_orientation, with_orientation, CoverageMetric, LinkDirection,
    LinkMetrics, LinkSetup, OrientationResult, OrientationScan, OrientationTarget, RadioEndpoint,
};
use tvws_core::{GeoCoordinate, PixelGrid, RegionBoundary, TerrainGrid};

use crate::error::AppError;

/// Region and receiver used for coverage rasters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSpec {
    pub boundary: RegionBoundary,
    /// km.
    pub pixel_size: f64,
    /// Radio parameters of the UE placed at each pixel; the first UE when absent.
    #[serde(default)]
    pub ue_template: Option<RadioEndpoint>,
}

/// A planning scenario: one base station and its UEs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    #[serde(flatten)]
    pub setup: LinkSetup,
    pub bs: RadioEndpoint,
    pub ues: Vec<RadioEndpoint>,
    #[serde(default)]
    pub direction: LinkDirection,
    #[serde(default)]
    pub coverage: Option<CoverageSpec>,
}

impl PlanConfig {
    pub fn validate(&self) -> Result<(), AppError> {
        self.setup.validate()?;
        self.bs
            .validate()
            .map_err(|e| AppError::invalid(format!("bs.{}", e.field), e.message))?;
        if self.ues.is_empty() {
            return Err(AppError::invalid("ues", "at least one UE is required"));
        }
        for (i, ue) in self.ues.iter().enumerate() {
            ue.validate()
                .map_err(|e| AppError::invalid(format!("ues[{i}].{}", e.field), e.message))?;
            if ue.location == self.bs.location {
                return Err(AppError::invalid(format!("ues[{i}].location"), "coincides with the base station"));
            }
        }
        if let Some(cov) = &self.coverage {
            cov.boundary
                .validate()
                .map_err(|e| AppError::invalid("coverage.boundary", e.to_string()))?;
            if !(cov.pixel_size.is_finite() && cov.pixel_size > 0.0) {
                return Err(AppError::invalid("coverage.pixel_size", "must be > 0 km"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanReport {
    pub direction: LinkDirection,
    pub links: Vec<LinkMetrics>,
}

pub fn run_plan(cfg: &PlanConfig, terrain: Option<&TerrainGrid>) -> Result<PlanReport, AppError> {
    cfg.validate()?;
    let links = evaluate_ptmp(&cfg.bs, &cfg.ues, cfg.direction, &cfg.setup, terrain)?;
    Ok(PlanReport { direction: cfg.direction, links })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub metric: CoverageMetric,
    pub rows: usize,
    pub cols: usize,
    pub pixel_size: f64,
    pub cells: Vec<CoverageCell>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageCell {
    pub lat: f64,
    pub lon: f64,
    pub value: Option<f64>,
}

pub fn run_coverage(
    cfg: &PlanConfig,
    metric: CoverageMetric,
    terrain: Option<&TerrainGrid>,
) -> Result<(PixelGrid, Vec<Option<f64>>), AppError> {
    cfg.validate()?;
    let cov = cfg
        .coverage
        .as_ref()
        .ok_or_else(|| AppError::invalid("coverage", "plan has no coverage region"))?;
    let grid = build_pixel_grid(&cov.boundary, cov.pixel_size)?;
    let template = cov.ue_template.as_ref().unwrap_or(&cfg.ues[0]);
    let values = coverage_map(&cfg.bs, &grid, metric, template, cfg.direction, &cfg.setup, terrain)?;
    Ok((grid, values))
}

pub fn coverage_report(metric: CoverageMetric, grid: &PixelGrid, values: &[Option<f64>]) -> CoverageReport {
    CoverageReport {
        metric,
        rows: grid.rows,
        cols: grid.cols,
        pixel_size: grid.pixel_size_km,
        cells: grid
            .centers
            .iter()
            .zip(values)
            .map(|(c, v): (&GeoCoordinate, _)| CoverageCell { lat: c.lat, lon: c.lon, value: *v })
            .collect(),
    }
}

/// Orientation search request: a plan, the grid to search and the UE to aim at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeRequest {
    #[serde(flatten)]
    pub plan: PlanConfig,
    pub scan: OrientationScan,
    #[serde(default)]
    pub ue_index: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeReport {
    pub target: OrientationTarget,
    #[serde(flatten)]
    pub best: OrientationResult,
    /// Received level with the orientations given in the request, dBm.
    pub baseline_rss: f64,
    /// Full link budget at the best orientation.
    pub link: LinkMetrics,
}

pub fn run_optimize(req: &OptimizeRequest, terrain: Option<&TerrainGrid>) -> Result<OptimizeReport, AppError> {
    req.plan.validate()?;
    let ue = req
        .plan
        .ues
        .get(req.ue_index)
        .ok_or_else(|| AppError::invalid("ue_index", format!("no UE at index {}", req.ue_index)))?;
    let mut scan = req.scan.clone();
    scan.direction = req.plan.direction;
    let best = optimize_orientation(&scan, &req.plan.bs, ue, &req.plan.setup, terrain)?;

    let (tx, rx) = roles(req.plan.direction, &req.plan.bs, ue);
    let baseline = evaluate_link(tx, rx, &req.plan.setup, terrain)?;
    let bs = best.bs.map_or_else(|| req.plan.bs.clone(), |o| with_orientation(&req.plan.bs, o));
    let ue = best.ue.map_or_else(|| ue.clone(), |o| with_orientation(ue, o));
    let (tx, rx) = roles(req.plan.direction, &bs, &ue);
    let link = evaluate_link(tx, rx, &req.plan.setup, terrain)?;
    Ok(OptimizeReport { target: scan.target, best, baseline_rss: baseline.rss, link })
}

fn roles<'a>(d: LinkDirection, bs: &'a RadioEndpoint, ue: &'a RadioEndpoint) -> (&'a RadioEndpoint, &'a RadioEndpoint) {
    match d {
        LinkDirection::Downlink => (bs, ue),
        LinkDirection::Uplink => (ue, bs),
    }
}
