//! Channel availability and noise scanning.
//!
//! Each tower's protected contour is sampled along equally spaced radials.
//! A pixel loses channel `n` when it falls inside the contour (plus the
//! separation distance) of any tower on `n` or on an adjacent channel.
//! Noise on `n` is the strongest co-channel tower signal seen by a white
//! space device at the pixel.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodata::{
    auto_boundary, build_pixel_grid, destination_point, haversine_distance, initial_bearing, GeoCoordinate,
    GeoError, PixelGrid, RegionBoundary,
};
use crate::propagation::{
    free_space_pathloss, model_rss, pathloss_over, received_signal_strength, ModelKind, PropagationError,
    PropagationParams, Site,
};
use crate::spectrum::{
    build_channel_index, channel_center_frequency, reserved_filter, Band, ChannelPlan, EmissionClass,
    SpectrumError, TvTower, MAX_RESERVED,
};
use crate::terrain::{elevation_or_sea_level, TerrainGrid};
use crate::{par, ValidationError, NO_SIGNAL_DBM};

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("invalid config: {0}")]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error("no RSS threshold for {band} {class:?} (needed by tower {tower})")]
    MissingThreshold { tower: i64, band: Band, class: EmissionClass },
    #[error("usability needs noise levels, but the scan ran without noise computation")]
    NoiseNotComputed,
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// RSS thresholds for one band, dBm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ClassThresholds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analog: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digital: Option<f64>,
}

/// TV receiver threshold RSS keyed by band and emission class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct ThresholdTable(pub BTreeMap<Band, ClassThresholds>);

impl ThresholdTable {
    pub fn uniform(rss_dbm: f64) -> Self {
        let both = ClassThresholds { analog: Some(rss_dbm), digital: Some(rss_dbm) };
        Self([Band::LowVhf, Band::HighVhf, Band::Uhf].into_iter().map(|b| (b, both)).collect())
    }

    /// Illustrative values only; they are not any regulator's numbers.
    pub fn placeholder() -> Self {
        let mut t = BTreeMap::new();
        t.insert(Band::LowVhf, ClassThresholds { analog: Some(-70.0), digital: Some(-84.0) });
        t.insert(Band::HighVhf, ClassThresholds { analog: Some(-68.0), digital: Some(-84.0) });
        t.insert(Band::Uhf, ClassThresholds { analog: Some(-64.0), digital: Some(-84.0) });
        Self(t)
    }

    pub fn lookup(&self, band: Band, class: EmissionClass) -> Option<f64> {
        let entry = self.0.get(&band)?;
        match class {
            EmissionClass::Analog => entry.analog,
            EmissionClass::Digital => entry.digital,
        }
    }
}

fn default_radials() -> usize {
    72
}

fn default_true() -> bool {
    true
}

fn default_max_noise() -> f64 {
    -85.0
}

/// Everything a scan needs besides towers and terrain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub boundary: RegionBoundary,
    /// Pixel edge, km.
    pub pixel_size: f64,
    pub plan: ChannelPlan,
    pub channels: Vec<u32>,
    #[serde(default)]
    pub reserved: Vec<u32>,
    /// White space device antenna height AGL, m.
    pub wsd_height: f64,
    /// dBi.
    pub wsd_gain: f64,
    pub tv_rx_height: f64,
    pub tv_rx_gain: f64,
    pub thresholds: ThresholdTable,
    /// Co-channel separation distance, km.
    pub sep_co: f64,
    /// Adjacent-channel separation distance, km.
    pub sep_adj: f64,
    #[serde(default)]
    pub model: ModelKind,
    #[serde(default)]
    pub propagation: PropagationParams,
    #[serde(default = "default_radials")]
    pub radials: usize,
    #[serde(default = "default_true")]
    pub compute_noise: bool,
    /// Usability threshold, dBm.
    #[serde(default = "default_max_noise")]
    pub max_noise: f64,
    /// Treat the dataset power column as dipole-referenced ERP.
    #[serde(default)]
    pub erp_dipole: bool,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<(), ValidationError> {
        self.boundary
            .validate()
            .map_err(|e| ValidationError::new("boundary", e.to_string()))?;
        if !(self.pixel_size.is_finite() && self.pixel_size > 0.0) {
            return Err(ValidationError::new("pixel_size", format!("must be > 0 km, got {}", self.pixel_size)));
        }
        self.plan.validate()?;
        if self.channels.is_empty() {
            return Err(ValidationError::new("channels", "at least one channel must be scanned"));
        }
        for (i, c) in self.channels.iter().enumerate() {
            if !self.plan.contains(*c) {
                return Err(ValidationError::new("channels", format!("channel {c} not in plan")));
            }
            if self.channels[..i].contains(c) {
                return Err(ValidationError::new("channels", format!("channel {c} listed twice")));
            }
        }
        if self.reserved.len() > MAX_RESERVED {
            return Err(ValidationError::new(
                "reserved",
                format!("at most {MAX_RESERVED} reserved channels, got {}", self.reserved.len()),
            ));
        }
        for (field, v) in [("wsd_height", self.wsd_height), ("tv_rx_height", self.tv_rx_height)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ValidationError::new(field, format!("must be >= 0 m, got {v}")));
            }
        }
        for (field, v) in [("wsd_gain", self.wsd_gain), ("tv_rx_gain", self.tv_rx_gain), ("max_noise", self.max_noise)] {
            if !v.is_finite() {
                return Err(ValidationError::new(field, "must be finite"));
            }
        }
        for (field, v) in [("sep_co", self.sep_co), ("sep_adj", self.sep_adj)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ValidationError::new(field, format!("must be >= 0 km, got {v}")));
            }
        }
        if self.radials < 4 {
            return Err(ValidationError::new("radials", format!("must be >= 4, got {}", self.radials)));
        }
        self.propagation
            .validate()
            .map_err(|e| ValidationError::new(format!("propagation.{}", e.field), e.message))?;
        Ok(())
    }

    /// Distance between contour samples along a radial, km.
    pub fn contour_step_km(&self) -> f64 {
        self.propagation.resolution.spacing_m(self.propagation.max_range_km) / 1000.0
    }
}

/// Contour radius per radial, radials clockwise from north.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectedContour {
    /// Position of the tower in the scanned tower list.
    pub tower: usize,
    pub center: GeoCoordinate,
    pub radii_km: Vec<f64>,
}

impl ProtectedContour {
    /// Radius of the radial closest to `bearing_deg`.
    pub fn radius_toward(&self, bearing_deg: f64) -> f64 {
        let n = self.radii_km.len();
        let k = (bearing_deg / (360.0 / n as f64)).round() as usize % n;
        self.radii_km[k]
    }
}

/// Sample distances along a radial: `step, 2·step, …` and `max_range` itself.
pub fn contour_sample_distances(max_range_km: f64, step_km: f64) -> Vec<f64> {
    let n = (max_range_km / step_km + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (1..=n).map(|j| j as f64 * step_km).collect();
    if out.last().is_none_or(|d| *d < max_range_km - 1e-9) {
        out.push(max_range_km);
    }
    out
}

fn tower_threshold(tower: &TvTower, cfg: &ScanConfig) -> Result<f64, ScanError> {
    let band = cfg
        .plan
        .band_of(tower.channel)
        .ok_or(SpectrumError::ChannelNotInPlan(tower.channel))?;
    cfg.thresholds
        .lookup(band, tower.emission_class)
        .ok_or(ScanError::MissingThreshold { tower: tower.index, band, class: tower.emission_class })
}

/// Protected contour of one tower (`position` is its index in the tower list).
///
/// Along each radial the RSS at a TV receiver is sampled at the contour
/// step out to the maximum range; the radius is the farthest sample still at
/// or above threshold, so coverage re-emerging past a shadowed valley counts.
pub fn protected_contour(
    position: usize,
    tower: &TvTower,
    cfg: &ScanConfig,
    terrain: Option<&TerrainGrid>,
) -> Result<ProtectedContour, ScanError> {
    let threshold = tower_threshold(tower, cfg)?;
    let frequency = channel_center_frequency(&cfg.plan, tower.channel)?;
    let eirp = tower.eirp_dbm(cfg.erp_dipole);
    let params = &cfg.propagation;
    let distances = contour_sample_distances(params.max_range_km, cfg.contour_step_km());
    let tower_ground = elevation_or_sea_level(terrain, tower.location);

    let mut radii_km = Vec::with_capacity(cfg.radials);
    let mut prof_d = Vec::with_capacity(distances.len() + 1);
    let mut prof_e = Vec::with_capacity(distances.len() + 1);
    for k in 0..cfg.radials {
        let bearing = k as f64 * 360.0 / cfg.radials as f64;
        prof_d.clear();
        prof_e.clear();
        prof_d.push(0.0);
        prof_e.push(tower_ground);
        let mut radius = 0.0;
        for (j, &d) in distances.iter().enumerate() {
            let point = destination_point(tower.location, bearing, d);
            let ground = elevation_or_sea_level(terrain, point);
            prof_d.push(d);
            prof_e.push(ground);
            let pathloss = match cfg.model {
                ModelKind::FreeSpace => {
                    let dh = (ground + cfg.tv_rx_height) - (tower_ground + tower.height_agl_m);
                    free_space_pathloss((d * d + (dh / 1000.0).powi(2)).sqrt(), frequency)?
                }
                ModelKind::Terrain => {
                    pathloss_over(
                        &prof_d[..j + 2],
                        &prof_e[..j + 2],
                        tower.height_agl_m,
                        cfg.tv_rx_height,
                        frequency,
                        params.effective_earth_factor,
                    )?
                    .pathloss
                }
            };
            if received_signal_strength(eirp, cfg.tv_rx_gain, pathloss) >= threshold {
                radius = d;
            }
        }
        radii_km.push(radius);
    }
    Ok(ProtectedContour { tower: position, center: tower.location, radii_km })
}

/// Whether `p` lies within the contour radius plus `separation_km`.
pub fn in_protected_region(contour: &ProtectedContour, separation_km: f64, p: GeoCoordinate) -> bool {
    let distance = haversine_distance(contour.center, p);
    let Ok(bearing) = initial_bearing(contour.center, p) else {
        return true;
    };
    distance <= contour.radius_toward(bearing) + separation_km
}

/// Strongest co-channel signal at a white space device at `p`, dBm, or
/// [`NO_SIGNAL_DBM`] when no tower reaches it.
pub fn channel_noise(
    p: GeoCoordinate,
    co_towers: &[&TvTower],
    cfg: &ScanConfig,
    terrain: Option<&TerrainGrid>,
) -> Result<f64, ScanError> {
    let mut noise = NO_SIGNAL_DBM;
    for tower in co_towers {
        let frequency = channel_center_frequency(&cfg.plan, tower.channel)?;
        let rss = model_rss(
            cfg.model,
            Site::new(tower.location, tower.height_agl_m),
            Site::new(p, cfg.wsd_height),
            tower.eirp_dbm(cfg.erp_dipole),
            cfg.wsd_gain,
            frequency,
            terrain,
            &cfg.propagation,
        )?;
        noise = noise.max(rss);
    }
    Ok(noise)
}

/// Verdict for one pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelResult {
    pub center: GeoCoordinate,
    /// 1 = available, per scanned channel.
    pub availability: Vec<u8>,
    /// dBm per scanned channel; absent when noise was not computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_dbm: Option<Vec<f64>>,
    pub total_available: u32,
}

/// Scan output in pixel-grid row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResults {
    pub channels: Vec<u32>,
    pub with_noise: bool,
    pub pixels: Vec<PixelResult>,
}

impl ScanResults {
    pub fn column(&self, channel: u32) -> Option<usize> {
        self.channels.iter().position(|c| *c == channel)
    }
}

// Monotone progress reporting shared by worker threads.
struct Progress<'a> {
    sink: &'a (dyn Fn(f64) + Sync),
    total: usize,
    state: Mutex<(usize, f64)>,
}

impl<'a> Progress<'a> {
    fn new(sink: &'a (dyn Fn(f64) + Sync), total: usize) -> Self {
        Self { sink, total: total.max(1), state: Mutex::new((0, 0.0)) }
    }

    fn tick(&self) {
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        state.0 += 1;
        let fraction = (state.0 as f64 / self.total as f64).min(1.0);
        if fraction > state.1 {
            state.1 = fraction;
            (self.sink)(fraction);
        }
    }

    fn finish(&self) {
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        if state.1 < 1.0 {
            state.1 = 1.0;
            (self.sink)(1.0);
        }
    }
}

/// Progress sink that discards updates.
pub fn no_progress(_: f64) {}

/// Resolves an auto boundary against the tower set.
pub fn resolve_boundary(cfg: &ScanConfig, towers: &[TvTower]) -> Result<RegionBoundary, ScanError> {
    Ok(match &cfg.boundary {
        RegionBoundary::Auto => auto_boundary(towers, cfg.propagation.max_range_km)?,
        other => other.clone(),
    })
}

/// The pixel grid a scan with this config evaluates.
pub fn scan_grid(cfg: &ScanConfig, towers: &[TvTower]) -> Result<PixelGrid, ScanError> {
    Ok(build_pixel_grid(&resolve_boundary(cfg, towers)?, cfg.pixel_size)?)
}

/// Runs a full availability scan.
pub fn scan(
    cfg: &ScanConfig,
    towers: &[TvTower],
    terrain: Option<&TerrainGrid>,
    progress: &(dyn Fn(f64) + Sync),
) -> Result<ScanResults, ScanError> {
    cfg.validate()?;
    if let Some(t) = terrain {
        t.reset_warnings();
    }
    let reserved = reserved_filter(&cfg.channels, &cfg.reserved)?;
    let index = build_channel_index(towers, &cfg.plan, &cfg.channels);
    let relevant = index.relevant_towers();
    for &pos in &relevant {
        tower_threshold(&towers[pos], cfg)?;
    }
    let grid = scan_grid(cfg, towers)?;
    let pixels: Vec<GeoCoordinate> = grid.unmasked().map(|(_, c)| c).collect();
    let tracker = Progress::new(progress, relevant.len() + pixels.len());

    let contours = par::map_ordered(&relevant, |_, &pos| {
        let c = protected_contour(pos, &towers[pos], cfg, terrain);
        tracker.tick();
        c
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let mut by_tower: Vec<Option<&ProtectedContour>> = vec![None; towers.len()];
    for c in &contours {
        by_tower[c.tower] = Some(c);
    }

    let plan: Vec<_> = cfg
        .channels
        .iter()
        .zip(&reserved.reserved)
        .map(|(n, is_reserved)| {
            let entry = index.get(*n).cloned().unwrap_or_default();
            let co: Vec<&TvTower> = entry.co_channel.iter().map(|p| &towers[*p]).collect();
            (*is_reserved, entry, co)
        })
        .collect();

    let results = par::map_ordered(&pixels, |_, &center| -> Result<PixelResult, ScanError> {
        let mut availability = Vec::with_capacity(plan.len());
        let mut noise = cfg.compute_noise.then(|| Vec::with_capacity(plan.len()));
        for (is_reserved, entry, co) in &plan {
            let protected = |list: &[usize], sep: f64| {
                list.iter()
                    .any(|p| by_tower[*p].is_some_and(|c| in_protected_region(c, sep, center)))
            };
            let free = !is_reserved && !protected(&entry.co_channel, cfg.sep_co) && !protected(&entry.adjacent, cfg.sep_adj);
            availability.push(u8::from(free));
            if let Some(noise) = noise.as_mut() {
                noise.push(channel_noise(center, co, cfg, terrain)?);
            }
        }
        tracker.tick();
        Ok(PixelResult {
            center,
            total_available: availability.iter().map(|a| u32::from(*a)).sum(),
            availability,
            noise_dbm: noise,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    tracker.finish();

    Ok(ScanResults { channels: cfg.channels.clone(), with_noise: cfg.compute_noise, pixels: results })
}

/// Availability and usability of one channel at one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChannelClass {
    pub available: bool,
    pub usable: bool,
}

/// Whether a noise level is acceptable under `max_noise_dbm` (inclusive).
pub fn is_usable(noise_dbm: f64, max_noise_dbm: f64) -> bool {
    noise_dbm == NO_SIGNAL_DBM || noise_dbm <= max_noise_dbm
}

/// Per pixel, per channel availability and usability flags.
pub fn classify_usability(results: &ScanResults, max_noise_dbm: f64) -> Result<Vec<Vec<ChannelClass>>, ScanError> {
    if !results.with_noise {
        return Err(ScanError::NoiseNotComputed);
    }
    results
        .pixels
        .iter()
        .map(|px| {
            let noise = px.noise_dbm.as_ref().ok_or(ScanError::NoiseNotComputed)?;
            Ok(px
                .availability
                .iter()
                .zip(noise)
                .map(|(a, n)| ChannelClass { available: *a == 1, usable: is_usable(*n, max_noise_dbm) })
                .collect())
        })
        .collect()
}

/// Writes the result table: `lat,lon,ch_<n>…,noise_<n>…,total`.
///
/// Noise columns are omitted when the scan ran without noise.
pub fn export_csv<W: Write>(results: &ScanResults, mut sink: W) -> Result<(), ScanError> {
    let mut header = String::from("lat,lon");
    for c in &results.channels {
        header.push_str(&format!(",ch_{c}"));
    }
    if results.with_noise {
        for c in &results.channels {
            header.push_str(&format!(",noise_{c}"));
        }
    }
    header.push_str(",total\n");
    sink.write_all(header.as_bytes())?;

    let mut line = String::new();
    for px in &results.pixels {
        line.clear();
        line.push_str(&format!("{:.6},{:.6}", px.center.lat, px.center.lon));
        for a in &px.availability {
            line.push(',');
            line.push(if *a == 1 { '1' } else { '0' });
        }
        if let Some(noise) = px.noise_dbm.as_ref().filter(|_| results.with_noise) {
            for n in noise {
                line.push_str(&format!(",{n:.2}"));
            }
        }
        line.push_str(&format!(",{}\n", px.total_available));
        sink.write_all(line.as_bytes())?;
    }
    sink.flush()?;
    Ok(())
}

pub fn export_csv_string(results: &ScanResults) -> String {
    let mut buf = Vec::new();
    export_csv(results, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("csv is ascii")
}

/// Reads a table written by [`export_csv`].
pub fn import_csv<R: Read>(source: R) -> Result<ScanResults, ScanError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(source);
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| ScanError::Csv { line: 1, message: e.to_string() })?,
        None => return Err(ScanError::Csv { line: 1, message: "empty file".into() }),
    };
    let cols: Vec<&str> = header.iter().collect();
    let bad_header = |message: String| ScanError::Csv { line: 1, message };
    if cols.len() < 4 || cols[0] != "lat" || cols[1] != "lon" || cols[cols.len() - 1] != "total" {
        return Err(bad_header("header must be lat,lon,ch_<n>...,[noise_<n>...,]total".into()));
    }
    let middle = &cols[2..cols.len() - 1];
    let mut channels = Vec::new();
    for name in middle.iter().take_while(|c| c.starts_with("ch_")) {
        let n = name[3..].parse::<u32>().map_err(|_| bad_header(format!("bad channel column `{name}`")))?;
        channels.push(n);
    }
    let rest = &middle[channels.len()..];
    let with_noise = !rest.is_empty();
    if with_noise {
        if rest.len() != channels.len() {
            return Err(bad_header("noise columns must pair with channel columns".into()));
        }
        for (name, c) in rest.iter().zip(&channels) {
            if *name != format!("noise_{c}") {
                return Err(bad_header(format!("expected noise_{c}, found `{name}`")));
            }
        }
    }
    if channels.is_empty() {
        return Err(bad_header("no channel columns".into()));
    }

    let mut pixels = Vec::new();
    for record in records {
        let record = record.map_err(|e| ScanError::Csv { line: 0, message: e.to_string() })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let err = |message: String| ScanError::Csv { line, message };
        if record.len() != cols.len() {
            return Err(err(format!("expected {} fields, found {}", cols.len(), record.len())));
        }
        let num = |i: usize| -> Result<f64, ScanError> {
            record[i]
                .parse::<f64>()
                .map_err(|_| err(format!("`{}` in column {} is not a number", &record[i], cols[i])))
        };
        let center = GeoCoordinate::new(num(0)?, num(1)?).map_err(|e| err(e.to_string()))?;
        let mut availability = Vec::with_capacity(channels.len());
        for i in 0..channels.len() {
            match &record[2 + i] {
                "0" => availability.push(0),
                "1" => availability.push(1),
                other => return Err(err(format!("availability must be 0 or 1, got `{other}`"))),
            }
        }
        let noise_dbm = if with_noise {
            Some((0..channels.len()).map(|i| num(2 + channels.len() + i)).collect::<Result<Vec<_>, _>>()?)
        } else {
            None
        };
        let total_raw = &record[cols.len() - 1];
        let total_available: u32 = total_raw.parse().map_err(|_| err(format!("bad total `{total_raw}`")))?;
        let popcount: u32 = availability.iter().map(|a| u32::from(*a)).sum();
        if total_available != popcount {
            return Err(err(format!("total {total_available} does not match {popcount} available channels")));
        }
        pixels.push(PixelResult { center, availability, noise_dbm, total_available });
    }
    Ok(ScanResults { channels, with_noise, pixels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Band;

    fn c(lat: f64, lon: f64) -> GeoCoordinate {
        GeoCoordinate::new(lat, lon).unwrap()
    }

    fn base_config() -> ScanConfig {
        ScanConfig {
            boundary: RegionBoundary::circle(c(0.0, 0.0), 30.0).unwrap(),
            pixel_size: 10.0,
            plan: ChannelPlan::single(Band::Uhf, 14, 20, 473.0, 6.0),
            channels: (14..=20).collect(),
            reserved: vec![],
            wsd_height: 10.0,
            wsd_gain: 0.0,
            tv_rx_height: 10.0,
            tv_rx_gain: 0.0,
            thresholds: ThresholdTable::uniform(-60.0),
            sep_co: 0.0,
            sep_adj: 0.0,
            model: ModelKind::FreeSpace,
            propagation: PropagationParams { max_range_km: 60.0, resolution: crate::propagation::Resolution::Meters(500.0), ..Default::default() },
            radials: 8,
            compute_noise: true,
            max_noise: -85.0,
            erp_dipole: false,
        }
    }

    #[test]
    fn sample_distances_cover_range() {
        assert_eq!(contour_sample_distances(1.0, 0.25), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(contour_sample_distances(1.0, 0.3).last().copied(), Some(1.0));
        assert_eq!(contour_sample_distances(0.1, 0.3), vec![0.1]);
    }

    #[test]
    fn unreachable_threshold_gives_zero_radius() {
        let mut cfg = base_config();
        cfg.thresholds = ThresholdTable::uniform(100.0);
        let t = TvTower::synthetic(0, c(0.0, 0.0), 1.0, 14);
        let contour = protected_contour(0, &t, &cfg, None).unwrap();
        assert!(contour.radii_km.iter().all(|r| *r == 0.0));
    }

    #[test]
    fn region_membership() {
        let contour = ProtectedContour { tower: 0, center: c(0.0, 0.0), radii_km: vec![39.76; 72] };
        assert!(in_protected_region(&contour, 10.0, c(0.0, 0.0)));
        let at = |km| destination_point(c(0.0, 0.0), 33.0, km);
        assert!(in_protected_region(&contour, 10.0, at(49.0)));
        assert!(!in_protected_region(&contour, 10.0, at(50.5)));
        assert!(in_protected_region(&contour, 0.0, at(39.7)));
        assert!(!in_protected_region(&contour, 0.0, at(39.8)));
    }

    #[test]
    fn nearest_radial() {
        let contour = ProtectedContour { tower: 0, center: c(0.0, 0.0), radii_km: vec![1.0, 2.0, 3.0, 4.0] };
        assert_eq!(contour.radius_toward(0.0), 1.0);
        assert_eq!(contour.radius_toward(44.0), 1.0);
        assert_eq!(contour.radius_toward(46.0), 2.0);
        assert_eq!(contour.radius_toward(359.0), 1.0);
        assert_eq!(contour.radius_toward(270.0), 4.0);
    }

    #[test]
    fn noise_is_max_over_towers() {
        let cfg = base_config();
        let p = c(0.0, 0.0);
        assert_eq!(channel_noise(p, &[], &cfg, None).unwrap(), NO_SIGNAL_DBM);
        let near = TvTower::synthetic(0, destination_point(p, 0.0, 5.0), 1.0, 14);
        let far = TvTower::synthetic(1, destination_point(p, 90.0, 20.0), 1.0, 14);
        let n_near = channel_noise(p, &[&near], &cfg, None).unwrap();
        let n_far = channel_noise(p, &[&far], &cfg, None).unwrap();
        assert!(n_near > n_far);
        assert_eq!(channel_noise(p, &[&far, &near], &cfg, None).unwrap(), n_near);
        let beyond = TvTower::synthetic(2, destination_point(p, 90.0, 80.0), 1.0, 14);
        assert_eq!(channel_noise(p, &[&beyond], &cfg, None).unwrap(), NO_SIGNAL_DBM);
    }

    #[test]
    fn empty_tower_set_leaves_everything_available() {
        let cfg = base_config();
        let r = scan(&cfg, &[], None, &no_progress).unwrap();
        assert!(!r.pixels.is_empty());
        for px in &r.pixels {
            assert_eq!(px.total_available, 7);
            assert!(px.noise_dbm.as_ref().unwrap().iter().all(|n| *n == NO_SIGNAL_DBM));
        }
    }

    #[test]
    fn reserved_channel_is_never_available() {
        let mut cfg = base_config();
        cfg.reserved = vec![17];
        let r = scan(&cfg, &[], None, &no_progress).unwrap();
        let col = r.column(17).unwrap();
        assert!(r.pixels.iter().all(|p| p.availability[col] == 0 && p.total_available == 6));
    }

    #[test]
    fn co_channel_tower_blocks_its_channel() {
        let cfg = base_config();
        let tower = TvTower::synthetic(0, c(0.0, 0.0), 1.0, 16);
        let r = scan(&cfg, &[tower], None, &no_progress).unwrap();
        // The contour (about 49 km at 485 MHz) covers the whole 30 km region,
        // blocking channel 16 and its neighbours; everything else stays open.
        for px in &r.pixels {
            for (i, ch) in r.channels.iter().enumerate() {
                let want = u8::from(!(15..=17).contains(ch));
                assert_eq!(px.availability[i], want, "channel {ch}");
            }
            assert_eq!(px.total_available, 4);
        }
    }

    #[test]
    fn missing_threshold_is_fatal() {
        let mut cfg = base_config();
        cfg.thresholds = ThresholdTable::default();
        let tower = TvTower::synthetic(7, c(0.0, 0.0), 1.0, 16);
        match scan(&cfg, &[tower], None, &no_progress) {
            Err(ScanError::MissingThreshold { tower: 7, band: Band::Uhf, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validation_names_fields() {
        let mut cfg = base_config();
        cfg.pixel_size = 0.0;
        assert_eq!(cfg.validate().unwrap_err().field, "pixel_size");
        let mut cfg = base_config();
        cfg.radials = 3;
        assert_eq!(cfg.validate().unwrap_err().field, "radials");
        let mut cfg = base_config();
        cfg.channels.push(99);
        assert_eq!(cfg.validate().unwrap_err().field, "channels");
        let mut cfg = base_config();
        cfg.propagation.humidity = 200.0;
        assert_eq!(cfg.validate().unwrap_err().field, "propagation.humidity");
    }

    #[test]
    fn usability_rules() {
        assert!(is_usable(NO_SIGNAL_DBM, -85.0));
        assert!(!is_usable(-80.0, -85.0));
        assert!(is_usable(-85.0, -85.0));
        let mut cfg = base_config();
        cfg.compute_noise = false;
        let r = scan(&cfg, &[], None, &no_progress).unwrap();
        assert!(matches!(classify_usability(&r, -85.0), Err(ScanError::NoiseNotComputed)));
    }

    #[test]
    fn progress_is_monotone_and_ends_at_one() {
        let cfg = base_config();
        let seen = Mutex::new(Vec::new());
        let tower = TvTower::synthetic(0, c(0.1, 0.1), 1.0, 16);
        scan(&cfg, &[tower], None, &|f| seen.lock().unwrap().push(f)).unwrap();
        let seen = seen.into_inner().unwrap();
        assert!(seen.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(seen.last().copied(), Some(1.0));
        assert!(seen.iter().all(|f| (0.0..=1.0).contains(f)));
    }

    #[test]
    fn csv_layout() {
        let mut cfg = base_config();
        cfg.radials = 4;
        let r = scan(&cfg, &[], None, &no_progress).unwrap();
        let text = export_csv_string(&r);
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "lat,lon,ch_14,ch_15,ch_16,ch_17,ch_18,ch_19,ch_20,noise_14,noise_15,noise_16,noise_17,noise_18,noise_19,noise_20,total"
        );
        let row = lines.next().unwrap();
        assert!(row.ends_with(",1,1,1,1,1,1,1,-1000.00,-1000.00,-1000.00,-1000.00,-1000.00,-1000.00,-1000.00,7"), "{row}");
        assert_eq!(import_csv(text.as_bytes()).unwrap().pixels.len(), r.pixels.len());

        cfg.compute_noise = false;
        let r = scan(&cfg, &[], None, &no_progress).unwrap();
        let text = export_csv_string(&r);
        assert!(!text.contains("noise_"));
        let back = import_csv(text.as_bytes()).unwrap();
        assert!(!back.with_noise);
        assert_eq!(export_csv_string(&back), text);
    }

    #[test]
    fn import_errors_carry_line_numbers() {
        let bad = "lat,lon,ch_14,total\n1.000000,2.000000,1,1\n1.000000,2.000000,2,1\n";
        match import_csv(bad.as_bytes()) {
            Err(ScanError::Csv { line: 3, message }) => assert!(message.contains("0 or 1")),
            other => panic!("unexpected {other:?}"),
        }
        let mismatch = "lat,lon,ch_14,total\n1.000000,2.000000,1,0\n";
        assert!(matches!(import_csv(mismatch.as_bytes()), Err(ScanError::Csv { line: 2, .. })));
        assert!(matches!(import_csv("x,y\n".as_bytes()), Err(ScanError::Csv { line: 1, .. })));
    }
}
