//! Pathloss and received signal strength.
//!
//! Two models sit behind [`ModelKind`]: free space, and a composite terrain
//! model that adds single equivalent knife-edge (Bullington) diffraction over
//! an earth-curvature-corrected profile. [`PropagationParams`] carries the
//! full set of irregular-terrain parameters; only the effective earth factor,
//! maximum range and resolution influence these two models; the rest are
//! validated and stored so a fuller model can use them later.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodata::{haversine_distance, GeoCoordinate, EARTH_RADIUS_KM};
use crate::terrain::{elevation_or_sea_level, extract_profile, TerrainError, TerrainGrid, TerrainProfile};
use crate::{ValidationError, NO_SIGNAL_DBM};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Free-space constant for km and MHz.
const FSPL_CONST_DB: f64 = 32.45;

/// Knife-edge loss vanishes at or below this Fresnel parameter.
const KNIFE_EDGE_CUTOFF: f64 = -0.78;

/// Default spacing of terrain samples, meters.
pub const DEFAULT_SPACING_M: f64 = 90.0;

// Horizontal separation below which a path is treated as purely vertical.
const VERTICAL_PATH_KM: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("{what} must be > 0, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("profile needs at least 2 samples, got {0}")]
    ShortProfile(usize),
    #[error("unknown propagation model `{0}` (expected free_space or terrain)")]
    UnknownModel(String),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
}

fn positive(what: &'static str, value: f64) -> Result<f64, PropagationError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(PropagationError::NonPositive { what, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    Horizontal,
    #[default]
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClimateZone {
    Equatorial,
    ContinentalSubtropical,
    MaritimeSubtropical,
    Desert,
    #[default]
    ContinentalTemperate,
    MaritimeOverLand,
    MaritimeOverSea,
}

/// Terrain sample spacing: fixed meters or scaled to the path length.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Resolution {
    #[default]
    Auto,
    Meters(f64),
}

impl Resolution {
    /// Sample spacing for a path of `path_km`. `Auto` is
    /// `max(90 m, path / 2000)`.
    pub fn spacing_m(&self, path_km: f64) -> f64 {
        match *self {
            Resolution::Auto => DEFAULT_SPACING_M.max(path_km * 1000.0 / 2000.0),
            Resolution::Meters(m) => m,
        }
    }
}

impl Serialize for Resolution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Resolution::Auto => s.serialize_str("auto"),
            Resolution::Meters(m) => s.serialize_f64(*m),
        }
    }
}

impl<'de> Deserialize<'de> for Resolution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Number(m) => Ok(Resolution::Meters(m)),
            Raw::Text(t) if t.eq_ignore_ascii_case("auto") => Ok(Resolution::Auto),
            Raw::Text(t) => t
                .parse::<f64>()
                .map(Resolution::Meters)
                .map_err(|_| serde::de::Error::custom(format!("resolution must be \"auto\" or meters, got `{t}`"))),
        }
    }
}

/// Propagation model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationParams {
    pub polarization: Polarization,
    pub time_variability: f64,
    pub situation_variability: f64,
    /// S/m.
    pub ground_conductivity: f64,
    pub ground_permittivity: f64,
    /// N-units.
    pub refractivity: f64,
    /// g/m³.
    pub humidity: f64,
    pub climate_zone: ClimateZone,
    pub effective_earth_factor: f64,
    pub max_range_km: f64,
    pub resolution: Resolution,
}

impl Default for PropagationParams {
    fn default() -> Self {
        Self {
            polarization: Polarization::Vertical,
            time_variability: 0.5,
            situation_variability: 0.5,
            ground_conductivity: 0.005,
            ground_permittivity: 15.0,
            refractivity: 301.0,
            humidity: 10.0,
            climate_zone: ClimateZone::ContinentalTemperate,
            effective_earth_factor: 4.0 / 3.0,
            max_range_km: 100.0,
            resolution: Resolution::Auto,
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let in_range = |field: &str, v: f64, lo: f64, hi: f64| {
            if v.is_finite() && (lo..=hi).contains(&v) {
                Ok(())
            } else {
                Err(ValidationError::new(field, format!("must be within [{lo}, {hi}], got {v}")))
            }
        };
        let pos = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ValidationError::new(field, format!("must be > 0, got {v}")))
            }
        };
        in_range("time_variability", self.time_variability, 0.001, 0.999)?;
        in_range("situation_variability", self.situation_variability, 0.001, 0.999)?;
        pos("ground_conductivity", self.ground_conductivity)?;
        pos("ground_permittivity", self.ground_permittivity)?;
        in_range("refractivity", self.refractivity, 250.0, 400.0)?;
        in_range("humidity", self.humidity, 0.0, 110.0)?;
        pos("effective_earth_factor", self.effective_earth_factor)?;
        pos("max_range_km", self.max_range_km)?;
        if let Resolution::Meters(m) = self.resolution {
            pos("resolution", m)?;
        }
        Ok(())
    }
}

/// Pathloss and its decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathlossResult {
    pub pathloss: f64,
    pub fspl_component: f64,
    pub diffraction_component: f64,
    pub los: bool,
}

/// Free-space loss in dB for km and MHz.
pub fn free_space_pathloss(distance_km: f64, frequency_mhz: f64) -> Result<f64, PropagationError> {
    let d = positive("distance", distance_km)?;
    let f = positive("frequency", frequency_mhz)?;
    Ok(FSPL_CONST_DB + 20.0 * d.log10() + 20.0 * f.log10())
}

pub fn wavelength_m(frequency_mhz: f64) -> f64 {
    SPEED_OF_LIGHT / (frequency_mhz * 1e6)
}

/// Fresnel-Kirchhoff diffraction parameter for an obstacle `h_m` above the
/// direct ray (negative below it), `d1_km`/`d2_km` from the two ends.
pub fn fresnel_parameter(h_m: f64, d1_km: f64, d2_km: f64, frequency_mhz: f64) -> Result<f64, PropagationError> {
    let d1 = positive("d1", d1_km)? * 1000.0;
    let d2 = positive("d2", d2_km)? * 1000.0;
    let lambda = wavelength_m(positive("frequency", frequency_mhz)?);
    Ok(h_m * (2.0 * (d1 + d2) / (lambda * d1 * d2)).sqrt())
}

/// Single knife-edge loss J(v) in dB, zero at and below v = -0.78.
pub fn knife_edge_loss(v: f64) -> f64 {
    if v <= KNIFE_EDGE_CUTOFF {
        return 0.0;
    }
    let t = v - 0.1;
    (6.9 + 20.0 * ((t * t + 1.0).sqrt() + t).log10()).max(0.0)
}

/// Free space plus Bullington diffraction over a terrain profile.
pub fn terrain_pathloss(
    profile: &TerrainProfile,
    tx_height_agl: f64,
    rx_height_agl: f64,
    frequency_mhz: f64,
    params: &PropagationParams,
) -> Result<PathlossResult, PropagationError> {
    pathloss_over(
        &profile.distances_km,
        &profile.elevations_m,
        tx_height_agl,
        rx_height_agl,
        frequency_mhz,
        params.effective_earth_factor,
    )
}

// Profile geometry relative to the direct ray between antenna tops.
struct RayGeometry<'a> {
    distances_km: &'a [f64],
    elevations_m: &'a [f64],
    tx_top: f64,
    rx_top: f64,
    total_m: f64,
    earth_m: f64,
}

impl RayGeometry<'_> {
    // Earth-curvature-corrected elevation of sample i.
    fn corrected(&self, i: usize) -> f64 {
        let d1 = self.distances_km[i] * 1000.0;
        let d2 = self.total_m - d1;
        self.elevations_m[i] - d1 * d2 / (2.0 * self.earth_m)
    }

    fn ray_at(&self, d_m: f64) -> f64 {
        self.tx_top + (self.rx_top - self.tx_top) * d_m / self.total_m
    }

    fn interior(&self) -> std::ops::Range<usize> {
        1..self.distances_km.len() - 1
    }

    fn line_of_sight(&self) -> bool {
        self.interior()
            .all(|i| self.corrected(i) <= self.ray_at(self.distances_km[i] * 1000.0))
    }
}

pub(crate) fn pathloss_over(
    distances_km: &[f64],
    elevations_m: &[f64],
    tx_height_agl: f64,
    rx_height_agl: f64,
    frequency_mhz: f64,
    effective_earth_factor: f64,
) -> Result<PathlossResult, PropagationError> {
    let n = distances_km.len();
    if n < 2 || elevations_m.len() != n {
        return Err(PropagationError::ShortProfile(n.min(elevations_m.len())));
    }
    positive("frequency", frequency_mhz)?;
    let geo = RayGeometry {
        distances_km,
        elevations_m,
        tx_top: elevations_m[0] + tx_height_agl,
        rx_top: elevations_m[n - 1] + rx_height_agl,
        total_m: distances_km[n - 1] * 1000.0,
        earth_m: effective_earth_factor * EARTH_RADIUS_KM * 1000.0,
    };
    let path_km = (geo.total_m.powi(2) + (geo.rx_top - geo.tx_top).powi(2)).sqrt() / 1000.0;
    let fspl = free_space_pathloss(path_km.max(VERTICAL_PATH_KM), frequency_mhz)?;

    let los = geo.line_of_sight();
    let v = if los {
        // Clear path: the interior sample with the least clearance.
        let mut v_max = f64::NEG_INFINITY;
        for i in geo.interior() {
            let d1 = distances_km[i];
            let h = geo.corrected(i) - geo.ray_at(d1 * 1000.0);
            v_max = v_max.max(fresnel_parameter(h, d1, distances_km[n - 1] - d1, frequency_mhz)?);
        }
        v_max
    } else {
        bullington_parameter(&geo, frequency_mhz)?
    };
    let diffraction = if v.is_finite() { knife_edge_loss(v) } else { 0.0 };
    Ok(PathlossResult {
        pathloss: fspl + diffraction,
        fspl_component: fspl,
        diffraction_component: diffraction,
        los,
    })
}

// Equivalent knife edge at the intersection of the steepest rays seen from
// each terminal.
fn bullington_parameter(geo: &RayGeometry<'_>, frequency_mhz: f64) -> Result<f64, PropagationError> {
    let total = geo.total_m;
    let mut slope_tx = f64::NEG_INFINITY;
    let mut slope_rx = f64::NEG_INFINITY;
    for i in geo.interior() {
        let d1 = geo.distances_km[i] * 1000.0;
        let c = geo.corrected(i);
        slope_tx = slope_tx.max((c - geo.tx_top) / d1);
        slope_rx = slope_rx.max((c - geo.rx_top) / (total - d1));
    }
    let d_edge = ((geo.rx_top - geo.tx_top + slope_rx * total) / (slope_tx + slope_rx)).clamp(1e-6, total - 1e-6);
    let h = geo.tx_top + slope_tx * d_edge - geo.ray_at(d_edge);
    fresnel_parameter(h, d_edge / 1000.0, (total - d_edge) / 1000.0, frequency_mhz)
}

/// Received level from EIRP, receive gain and pathloss.
pub fn received_signal_strength(eirp_dbm: f64, rx_gain_dbi: f64, pathloss_db: f64) -> f64 {
    eirp_dbm + rx_gain_dbi - pathloss_db
}

/// Selectable propagation model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    FreeSpace,
    #[default]
    Terrain,
}

impl FromStr for ModelKind {
    type Err = PropagationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "free_space" => Ok(ModelKind::FreeSpace),
            "terrain" => Ok(ModelKind::Terrain),
            other => Err(PropagationError::UnknownModel(other.to_string())),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::FreeSpace => "free_space",
            ModelKind::Terrain => "terrain",
        })
    }
}

/// An antenna position: ground point plus height above ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub location: GeoCoordinate,
    pub height_agl_m: f64,
}

impl Site {
    pub fn new(location: GeoCoordinate, height_agl_m: f64) -> Self {
        Self { location, height_agl_m }
    }
}

/// Pathloss between two sites, or `None` beyond `params.max_range_km`.
///
/// Sites closer than a meter horizontally are joined by a vertical
/// free-space path of at least one meter.
pub fn model_pathloss(
    model: ModelKind,
    tx: Site,
    rx: Site,
    frequency_mhz: f64,
    terrain: Option<&TerrainGrid>,
    params: &PropagationParams,
) -> Result<Option<PathlossResult>, PropagationError> {
    positive("frequency", frequency_mhz)?;
    let ground_km = haversine_distance(tx.location, rx.location);
    if ground_km > params.max_range_km {
        return Ok(None);
    }
    let tx_ground = elevation_or_sea_level(terrain, tx.location);
    let rx_ground = elevation_or_sea_level(terrain, rx.location);
    if model == ModelKind::FreeSpace || ground_km < VERTICAL_PATH_KM {
        let dh = (rx_ground + rx.height_agl_m) - (tx_ground + tx.height_agl_m);
        let path_km = (ground_km.powi(2) + (dh / 1000.0).powi(2)).sqrt().max(VERTICAL_PATH_KM);
        let fspl = free_space_pathloss(path_km, frequency_mhz)?;
        // Free space carries no terrain knowledge, so the path counts as clear.
        return Ok(Some(PathlossResult {
            pathloss: fspl,
            fspl_component: fspl,
            diffraction_component: 0.0,
            los: true,
        }));
    }
    let spacing = params.resolution.spacing_m(ground_km);
    let profile = extract_profile(terrain, tx.location, rx.location, spacing)?;
    terrain_pathloss(&profile, tx.height_agl_m, rx.height_agl_m, frequency_mhz, params).map(Some)
}

/// Received signal strength through the selected model; [`NO_SIGNAL_DBM`]
/// beyond the maximum range.
#[allow(clippy::too_many_arguments)]
pub fn model_rss(
    model: ModelKind,
    tx: Site,
    rx: Site,
    eirp_dbm: f64,
    rx_gain_dbi: f64,
    frequency_mhz: f64,
    terrain: Option<&TerrainGrid>,
    params: &PropagationParams,
) -> Result<f64, PropagationError> {
    Ok(match model_pathloss(model, tx, rx, frequency_mhz, terrain, params)? {
        Some(pl) => received_signal_strength(eirp_dbm, rx_gain_dbi, pl.pathloss),
        None => NO_SIGNAL_DBM,
    })
}

/// Whether the curvature-corrected terrain clears the direct ray.
pub fn line_of_sight(
    terrain: Option<&TerrainGrid>,
    a: Site,
    b: Site,
    params: &PropagationParams,
) -> Result<bool, PropagationError> {
    let ground_km = haversine_distance(a.location, b.location);
    if ground_km < VERTICAL_PATH_KM {
        return Ok(true);
    }
    let profile = extract_profile(terrain, a.location, b.location, params.resolution.spacing_m(ground_km))?;
    let n = profile.len();
    let geo = RayGeometry {
        distances_km: &profile.distances_km,
        elevations_m: &profile.elevations_m,
        tx_top: profile.elevations_m[0] + a.height_agl_m,
        rx_top: profile.elevations_m[n - 1] + b.height_agl_m,
        total_m: profile.length_km() * 1000.0,
        earth_m: params.effective_earth_factor * EARTH_RADIUS_KM * 1000.0,
    };
    Ok(geo.line_of_sight())
}
