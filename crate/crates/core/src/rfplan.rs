//! Base station to device link budgets, coverage rasters and antenna
//! orientation search.
//!
//! Every metric derives from the received level `rss` of the selected
//! propagation model:
//!
//! * pathloss `PL = P_tx + G_tx − L_tx + G_rx − L_rx − RSS`
//! * noise `P_n = −174 + NF + 10·log10(BW)` (dBm, BW in Hz)
//! * `SNR = RSS − P_n`
//! * Shannon capacity `C = BW·log2(1 + 10^(SNR/10))·1e−6` Mbps
//! * fade margin `FM = RSS − RSS_min`

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodata::{haversine_distance, initial_bearing, normalize_lon, GeoCoordinate, PixelGrid};
use crate::propagation::{
    line_of_sight, model_pathloss, received_signal_strength, ModelKind, PropagationError, PropagationParams, Site,
};
use crate::terrain::{elevation_or_sea_level, TerrainGrid};
use crate::{par, ValidationError, NO_SIGNAL_DBM};

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

// Floor on the normalized array factor power, keeps pattern nulls finite.
const ARRAY_FACTOR_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RfError {
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error("transmitter and receiver share a location")]
    CoincidentEndpoints,
    #[error("bandwidth must be > 0 Hz, got {0}")]
    InvalidBandwidth(f64),
    #[error("point-to-multipoint needs at least one UE")]
    NoUes,
    #[error("orientation undefined for isotropic antenna")]
    IsotropicTarget,
    #[error("invalid orientation scan: {0}")]
    InvalidScan(String),
    #[error("invalid input: {0}")]
    Validation(#[from] ValidationError),
}

/// Uniform rectangular array. `tilt` is the boresight elevation (positive
/// up), `azimuth` the boresight bearing; beamwidths and angles in degrees,
/// `spacing` in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UraAntenna {
    pub tilt: f64,
    pub azimuth: f64,
    pub h_bw: f64,
    pub v_bw: f64,
    pub sla: f64,
    pub spacing: f64,
    pub rows: u32,
    pub cols: u32,
}

impl UraAntenna {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(-90.0..=90.0).contains(&self.tilt) {
            return Err(ValidationError::new("tilt", format!("must be within [-90, 90], got {}", self.tilt)));
        }
        if !(-180.0..=180.0).contains(&self.azimuth) {
            return Err(ValidationError::new("azimuth", format!("must be within [-180, 180], got {}", self.azimuth)));
        }
        for (field, v) in [("h_bw", self.h_bw), ("v_bw", self.v_bw), ("sla", self.sla), ("spacing", self.spacing)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ValidationError::new(field, format!("must be > 0, got {v}")));
            }
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(ValidationError::new("rows", "array needs at least one row and one column"));
        }
        Ok(())
    }

    fn oriented(&self, o: Orientation) -> UraAntenna {
        UraAntenna { azimuth: o.azimuth, tilt: o.elevation, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Antenna {
    /// 0 dBi in every direction.
    #[default]
    Isotropic,
    Ura(UraAntenna),
}

/// Pointing direction: azimuth clockwise from north, elevation above the
/// horizon, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub azimuth: f64,
    pub elevation: f64,
}

fn wrap_deg(angle: f64) -> f64 {
    normalize_lon(angle)
}

// sin(N·x/2) / (N·sin(x/2)), 1 at x = 0.
fn normalized_array_factor(n: u32, psi: f64) -> f64 {
    let half = psi / 2.0;
    if half.sin().abs() < 1e-12 {
        return 1.0;
    }
    let n = f64::from(n);
    (n * half).sin() / (n * half.sin())
}

/// Gain of a URA toward `direction`, dBi.
///
/// Element pattern `−min(12(Δφ/h_bw)² + 12(Δθ/v_bw)², SLA)` relative to
/// boresight, plus an array term of `10·log10(rows·cols)` scaled by the
/// normalized uniform array factor for the element spacing.
pub fn ura_gain(ant: &UraAntenna, direction: Orientation, _frequency_mhz: f64) -> f64 {
    let d_az = wrap_deg(direction.azimuth - ant.azimuth);
    let d_el = direction.elevation - ant.tilt;
    let element = -(12.0 * (d_az / ant.h_bw).powi(2) + 12.0 * (d_el / ant.v_bw).powi(2)).min(ant.sla);

    let u = d_az.to_radians().sin() * d_el.to_radians().cos();
    let v = d_el.to_radians().sin();
    let k = 2.0 * std::f64::consts::PI * ant.spacing;
    let af = normalized_array_factor(ant.cols, k * u) * normalized_array_factor(ant.rows, k * v);
    let array = 10.0 * f64::from(ant.rows * ant.cols).log10() + 10.0 * (af * af).max(ARRAY_FACTOR_FLOOR).log10();
    element + array
}

/// Gain of any antenna toward `direction`, dBi.
pub fn antenna_gain(antenna: &Antenna, direction: Orientation, frequency_mhz: f64) -> f64 {
    match antenna {
        Antenna::Isotropic => 0.0,
        Antenna::Ura(ura) => ura_gain(ura, direction, frequency_mhz),
    }
}

/// One end of a link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioEndpoint {
    pub location: GeoCoordinate,
    pub height_agl: f64,
    /// dBm.
    pub tx_power: f64,
    /// dB.
    pub cable_loss: f64,
    /// Receiver sensitivity, dBm.
    pub sensitivity: f64,
    /// dB.
    pub noise_figure: f64,
    #[serde(default)]
    pub antenna: Antenna,
}

impl RadioEndpoint {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.height_agl.is_finite() && self.height_agl >= 0.0) {
            return Err(ValidationError::new("height_agl", "must be >= 0 m"));
        }
        if !(self.cable_loss.is_finite() && self.cable_loss >= 0.0) {
            return Err(ValidationError::new("cable_loss", "must be >= 0 dB"));
        }
        if !(self.noise_figure.is_finite() && self.noise_figure >= 0.0) {
            return Err(ValidationError::new("noise_figure", "must be >= 0 dB"));
        }
        if !self.tx_power.is_finite() || !self.sensitivity.is_finite() {
            return Err(ValidationError::new("tx_power", "power levels must be finite"));
        }
        if let Antenna::Ura(ura) = &self.antenna {
            ura.validate()
                .map_err(|e| ValidationError::new(format!("antenna.{}", e.field), e.message))?;
        }
        Ok(())
    }

    fn site(&self) -> Site {
        Site::new(self.location, self.height_agl)
    }
}

/// Carrier and propagation settings shared by every link in a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSetup {
    pub frequency_mhz: f64,
    pub bandwidth_hz: f64,
    #[serde(default)]
    pub model: ModelKind,
    #[serde(default)]
    pub propagation: PropagationParams,
}

impl LinkSetup {
    pub fn validate(&self) -> Result<(), RfError> {
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(RfError::InvalidBandwidth(self.bandwidth_hz));
        }
        if !(self.frequency_mhz.is_finite() && self.frequency_mhz > 0.0) {
            return Err(ValidationError::new("frequency_mhz", "must be > 0").into());
        }
        self.propagation
            .validate()
            .map_err(|e| ValidationError::new(format!("propagation.{}", e.field), e.message))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    /// dBm.
    pub rss: f64,
    /// dB.
    pub pathloss: f64,
    /// dB.
    pub snr: f64,
    /// dBm.
    pub noise_power: f64,
    /// Mbps.
    pub capacity: f64,
    /// dB.
    pub fade_margin: f64,
    pub los: bool,
    /// dBi toward the other end.
    pub tx_dir_gain: f64,
    pub rx_dir_gain: f64,
}

/// Thermal noise power for a receiver, dBm.
pub fn noise_power_dbm(noise_figure_db: f64, bandwidth_hz: f64) -> f64 {
    THERMAL_NOISE_DBM_HZ + noise_figure_db + 10.0 * bandwidth_hz.log10()
}

/// Shannon capacity, Mbps.
pub fn shannon_capacity_mbps(snr_db: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * (1.0 + 10f64.powf(snr_db / 10.0)).log2() * 1e-6
}

/// Link pathloss implied by a received level.
pub fn link_pathloss(tx: &RadioEndpoint, tx_gain: f64, rx: &RadioEndpoint, rx_gain: f64, rss: f64) -> f64 {
    tx.tx_power + tx_gain - tx.cable_loss + rx_gain - rx.cable_loss - rss
}

// Received level for the given directional gains over a model pathloss.
fn link_rss(tx: &RadioEndpoint, tx_gain: f64, rx: &RadioEndpoint, rx_gain: f64, pathloss: Option<f64>) -> f64 {
    match pathloss {
        Some(pl) => received_signal_strength(tx.tx_power + tx_gain - tx.cable_loss, rx_gain - rx.cable_loss, pl),
        None => NO_SIGNAL_DBM,
    }
}

/// Metrics for a received level; every field follows from `rss`.
pub fn metrics_from_rss(
    tx: &RadioEndpoint,
    tx_gain: f64,
    rx: &RadioEndpoint,
    rx_gain: f64,
    rss: f64,
    bandwidth_hz: f64,
    los: bool,
) -> LinkMetrics {
    let noise_power = noise_power_dbm(rx.noise_figure, bandwidth_hz);
    let snr = rss - noise_power;
    LinkMetrics {
        rss,
        pathloss: link_pathloss(tx, tx_gain, rx, rx_gain, rss),
        snr,
        noise_power,
        capacity: shannon_capacity_mbps(snr, bandwidth_hz),
        fade_margin: rss - rx.sensitivity,
        los,
        tx_dir_gain: tx_gain,
        rx_dir_gain: rx_gain,
    }
}

/// Direction from one site toward another: bearing and geometric elevation
/// between antenna tops.
pub fn pointing(from: Site, to: Site, terrain: Option<&TerrainGrid>) -> Result<Orientation, RfError> {
    let bearing = initial_bearing(from.location, to.location).map_err(|_| RfError::CoincidentEndpoints)?;
    let ground_m = haversine_distance(from.location, to.location) * 1000.0;
    let from_top = elevation_or_sea_level(terrain, from.location) + from.height_agl_m;
    let to_top = elevation_or_sea_level(terrain, to.location) + to.height_agl_m;
    Ok(Orientation {
        azimuth: wrap_deg(bearing),
        elevation: (to_top - from_top).atan2(ground_m).to_degrees(),
    })
}

/// Whether the terrain between two antennas clears the direct ray.
pub fn los_available(
    terrain: Option<&TerrainGrid>,
    a: Site,
    b: Site,
    params: &PropagationParams,
) -> Result<bool, RfError> {
    if a.location == b.location {
        return Err(RfError::CoincidentEndpoints);
    }
    Ok(line_of_sight(terrain, a, b, params)?)
}

// Geometry and pathloss of a link, independent of antenna orientation.
struct LinkPath {
    tx_dir: Orientation,
    rx_dir: Orientation,
    pathloss: Option<f64>,
    los: bool,
}

fn link_path(
    tx: &RadioEndpoint,
    rx: &RadioEndpoint,
    setup: &LinkSetup,
    terrain: Option<&TerrainGrid>,
) -> Result<LinkPath, RfError> {
    setup.validate()?;
    if haversine_distance(tx.location, rx.location) < 1e-9 {
        return Err(RfError::CoincidentEndpoints);
    }
    let (ts, rs) = (tx.site(), rx.site());
    let pathloss = model_pathloss(setup.model, ts, rs, setup.frequency_mhz, terrain, &setup.propagation)?;
    Ok(LinkPath {
        tx_dir: pointing(ts, rs, terrain)?,
        rx_dir: pointing(rs, ts, terrain)?,
        pathloss: pathloss.map(|p| p.pathloss),
        los: line_of_sight(terrain, ts, rs, &setup.propagation)?,
    })
}

/// Full link budget from `tx` to `rx`.
pub fn evaluate_link(
    tx: &RadioEndpoint,
    rx: &RadioEndpoint,
    setup: &LinkSetup,
    terrain: Option<&TerrainGrid>,
) -> Result<LinkMetrics, RfError> {
    let path = link_path(tx, rx, setup, terrain)?;
    let tx_gain = antenna_gain(&tx.antenna, path.tx_dir, setup.frequency_mhz);
    let rx_gain = antenna_gain(&rx.antenna, path.rx_dir, setup.frequency_mhz);
    let rss = link_rss(tx, tx_gain, rx, rx_gain, path.pathloss);
    Ok(metrics_from_rss(tx, tx_gain, rx, rx_gain, rss, setup.bandwidth_hz, path.los))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LinkDirection {
    /// Base station transmits.
    #[default]
    Downlink,
    Uplink,
}

impl LinkDirection {
    fn roles<'a>(&self, bs: &'a RadioEndpoint, ue: &'a RadioEndpoint) -> (&'a RadioEndpoint, &'a RadioEndpoint) {
        match self {
            LinkDirection::Downlink => (bs, ue),
            LinkDirection::Uplink => (ue, bs),
        }
    }
}

/// One link per UE, in input order.
pub fn evaluate_ptmp(
    bs: &RadioEndpoint,
    ues: &[RadioEndpoint],
    direction: LinkDirection,
    setup: &LinkSetup,
    terrain: Option<&TerrainGrid>,
) -> Result<Vec<LinkMetrics>, RfError> {
    if ues.is_empty() {
        return Err(RfError::NoUes);
    }
    ues.iter()
        .map(|ue| {
            let (tx, rx) = direction.roles(bs, ue);
            evaluate_link(tx, rx, setup, terrain)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMetric {
    Rss,
    Snr,
    Pathloss,
    FadeMargin,
    Capacity,
}

impl CoverageMetric {
    pub fn pick(&self, m: &LinkMetrics) -> f64 {
        match self {
            CoverageMetric::Rss => m.rss,
            CoverageMetric::Snr => m.snr,
            CoverageMetric::Pathloss => m.pathloss,
            CoverageMetric::FadeMargin => m.fade_margin,
            CoverageMetric::Capacity => m.capacity,
        }
    }
}

impl std::str::FromStr for CoverageMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rss" => Ok(Self::Rss),
            "snr" => Ok(Self::Snr),
            "pathloss" => Ok(Self::Pathloss),
            "fade_margin" => Ok(Self::FadeMargin),
            "capacity" => Ok(Self::Capacity),
            other => Err(format!("unknown metric `{other}` (rss, snr, pathloss, fade_margin, capacity)")),
        }
    }
}

/// Metric raster in grid order with a UE (radio parameters from
/// `ue_template`) at every unmasked pixel. Masked cells, and a cell that
/// coincides with the base station, are `None`.
pub fn coverage_map(
    bs: &RadioEndpoint,
    grid: &PixelGrid,
    metric: CoverageMetric,
    ue_template: &RadioEndpoint,
    direction: LinkDirection,
    setup: &LinkSetup,
    terrain: Option<&TerrainGrid>,
) -> Result<Vec<Option<f64>>, RfError> {
    setup.validate()?;
    let cells: Vec<(GeoCoordinate, bool)> = grid.centers.iter().copied().zip(grid.mask.iter().copied()).collect();
    par::map_ordered(&cells, |_, &(center, inside)| {
        if !inside || haversine_distance(center, bs.location) < 1e-9 {
            return Ok(None);
        }
        let ue = RadioEndpoint { location: center, ..ue_template.clone() };
        let (tx, rx) = direction.roles(bs, &ue);
        evaluate_link(tx, rx, setup, terrain).map(|m| Some(metric.pick(&m)))
    })
    .into_iter()
    .collect()
}

/// `lat,lon,value` rows for every cell; masked cells have an empty value.
pub fn coverage_csv(grid: &PixelGrid, values: &[Option<f64>]) -> String {
    let mut out = String::from("lat,lon,value\n");
    for (c, v) in grid.centers.iter().zip(values) {
        match v {
            Some(v) => out.push_str(&format!("{:.6},{:.6},{:.2}\n", c.lat, c.lon, v)),
            None => out.push_str(&format!("{:.6},{:.6},\n", c.lat, c.lon)),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationTarget {
    Bs,
    Ue,
    Both,
}

impl std::str::FromStr for OrientationTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bs" => Ok(Self::Bs),
            "ue" => Ok(Self::Ue),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown target `{other}` (bs, ue, both)")),
        }
    }
}

fn default_az_range() -> [f64; 2] {
    [-180.0, 180.0]
}

fn default_el_range() -> [f64; 2] {
    [-90.0, 90.0]
}

fn default_step() -> f64 {
    5.0
}

/// Exhaustive azimuth/elevation grid for the orientation search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationScan {
    pub target: OrientationTarget,
    #[serde(default = "default_az_range")]
    pub az_range: [f64; 2],
    #[serde(default = "default_el_range")]
    pub el_range: [f64; 2],
    #[serde(default = "default_step")]
    pub az_step: f64,
    #[serde(default = "default_step")]
    pub el_step: f64,
    #[serde(default)]
    pub direction: LinkDirection,
}

impl OrientationScan {
    pub fn new(target: OrientationTarget) -> Self {
        Self {
            target,
            az_range: default_az_range(),
            el_range: default_el_range(),
            az_step: default_step(),
            el_step: default_step(),
            direction: LinkDirection::Downlink,
        }
    }

    /// Candidate orientations: elevation outer ascending, azimuth inner ascending.
    pub fn candidates(&self) -> Result<Vec<Orientation>, RfError> {
        let azimuths = sweep("az", self.az_range, self.az_step, 180.0)?;
        let elevations = sweep("el", self.el_range, self.el_step, 90.0)?;
        Ok(elevations
            .iter()
            .flat_map(|&elevation| azimuths.iter().map(move |&azimuth| Orientation { azimuth, elevation }))
            .collect())
    }
}

fn sweep(name: &str, range: [f64; 2], step: f64, limit: f64) -> Result<Vec<f64>, RfError> {
    let [lo, hi] = range;
    if !(step.is_finite() && step > 0.0) {
        return Err(RfError::InvalidScan(format!("{name}_step must be > 0")));
    }
    if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo < -limit || hi > limit {
        return Err(RfError::InvalidScan(format!("{name}_range must satisfy -{limit} <= lo <= hi <= {limit}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientationResult {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bs: Option<Orientation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ue: Option<Orientation>,
    /// Received level at the best orientation, dBm.
    pub rss: f64,
}

fn ura_of(endpoint: &RadioEndpoint) -> Result<UraAntenna, RfError> {
    match endpoint.antenna {
        Antenna::Ura(ura) => Ok(ura),
        Antenna::Isotropic => Err(RfError::IsotropicTarget),
    }
}

/// Grid search for the antenna orientation(s) maximizing the received level.
///
/// Pathloss does not depend on orientation, so it is computed once and only
/// the directional gains are re-evaluated. For `Both`, base station
/// orientations form the outer loop of the joint product. Ties keep the first
/// maximum in scan order.
pub fn optimize_orientation(
    scan: &OrientationScan,
    bs: &RadioEndpoint,
    ue: &RadioEndpoint,
    setup: &LinkSetup,
    terrain: Option<&TerrainGrid>,
) -> Result<OrientationResult, RfError> {
    let bs_ura = matches!(scan.target, OrientationTarget::Bs | OrientationTarget::Both)
        .then(|| ura_of(bs))
        .transpose()?;
    let ue_ura = matches!(scan.target, OrientationTarget::Ue | OrientationTarget::Both)
        .then(|| ura_of(ue))
        .transpose()?;
    let candidates = scan.candidates()?;

    let (tx, rx) = scan.direction.roles(bs, ue);
    let path = link_path(tx, rx, setup, terrain)?;
    let bs_is_tx = scan.direction == LinkDirection::Downlink;
    let (bs_dir, ue_dir) = if bs_is_tx { (path.tx_dir, path.rx_dir) } else { (path.rx_dir, path.tx_dir) };
    let f = setup.frequency_mhz;

    let gains = |ura: Option<UraAntenna>, endpoint: &RadioEndpoint, dir: Orientation| -> Vec<f64> {
        match ura {
            Some(ura) => candidates.iter().map(|o| ura_gain(&ura.oriented(*o), dir, f)).collect(),
            None => vec![antenna_gain(&endpoint.antenna, dir, f)],
        }
    };
    let bs_gains = gains(bs_ura, bs, bs_dir);
    let ue_gains = gains(ue_ura, ue, ue_dir);

    let mut best: Option<(usize, usize, f64)> = None;
    for (i, gb) in bs_gains.iter().enumerate() {
        for (j, gu) in ue_gains.iter().enumerate() {
            let (g_tx, g_rx) = if bs_is_tx { (*gb, *gu) } else { (*gu, *gb) };
            let rss = link_rss(tx, g_tx, rx, g_rx, path.pathloss);
            if best.is_none_or(|(_, _, b)| rss > b) {
                best = Some((i, j, rss));
            }
        }
    }
    let (i, j, rss) = best.expect("candidate grid is never empty");
    Ok(OrientationResult {
        bs: bs_ura.map(|_| candidates[i]),
        ue: ue_ura.map(|_| candidates[j]),
        rss,
    })
}

/// Copy of `endpoint` with its URA pointed at `o`.
pub fn with_orientation(endpoint: &RadioEndpoint, o: Orientation) -> RadioEndpoint {
    let mut out = endpoint.clone();
    if let Antenna::Ura(ura) = &mut out.antenna {
        ura.azimuth = o.azimuth;
        ura.tilt = o.elevation;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::destination_point;

    fn ura(rows: u32, cols: u32) -> UraAntenna {
        UraAntenna { tilt: 0.0, azimuth: 0.0, h_bw: 60.0, v_bw: 30.0, sla: 25.0, spacing: 0.5, rows, cols }
    }

    fn endpoint(lat: f64, lon: f64) -> RadioEndpoint {
        RadioEndpoint {
            location: GeoCoordinate::new(lat, lon).unwrap(),
            height_agl: 30.0,
            tx_power: 30.0,
            cable_loss: 0.0,
            sensitivity: -90.0,
            noise_figure: 6.0,
            antenna: Antenna::Isotropic,
        }
    }

    fn setup() -> LinkSetup {
        LinkSetup { frequency_mhz: 600.0, bandwidth_hz: 6e6, model: ModelKind::FreeSpace, propagation: PropagationParams::default() }
    }

    #[test]
    fn ura_examples() {
        let bore = Orientation { azimuth: 0.0, elevation: 0.0 };
        assert!(ura_gain(&ura(1, 1), bore, 600.0).abs() < 1e-12);
        let half = Orientation { azimuth: 30.0, elevation: 0.0 };
        assert!((ura_gain(&ura(1, 1), half, 600.0) + 3.0).abs() < 1e-12);
        assert!((ura_gain(&ura(2, 2), bore, 600.0) - 6.0206).abs() < 1e-3);
        assert_eq!(antenna_gain(&Antenna::Isotropic, half, 600.0), 0.0);
        // Side lobes are floored at the SLA for a single element.
        let back = Orientation { azimuth: 180.0, elevation: 0.0 };
        assert!((ura_gain(&ura(1, 1), back, 600.0) + 25.0).abs() < 1e-12);
    }

    #[test]
    fn noise_and_capacity() {
        assert!((noise_power_dbm(6.0, 6e6) + 100.22).abs() < 0.01);
        assert!((shannon_capacity_mbps(0.0, 6e6) - 6.0).abs() < 1e-9);
        assert!((shannon_capacity_mbps(30.0, 6e6) - 59.80).abs() < 0.01);
    }

    #[test]
    fn pathloss_identity_example() {
        let mut tx = endpoint(0.0, 0.0);
        tx.tx_power = 30.0;
        tx.cable_loss = 2.0;
        let mut rx = endpoint(0.0, 0.1);
        rx.cable_loss = 1.0;
        assert!((link_pathloss(&tx, 10.0, &rx, 5.0, -58.0) - 100.0).abs() < 1e-12);
        rx.sensitivity = -90.0;
        let m = metrics_from_rss(&tx, 10.0, &rx, 5.0, -60.0, 6e6, true);
        assert!((m.fade_margin - 30.0).abs() < 1e-12);
        let mut rx = endpoint(0.0, 0.1);
        rx.noise_figure = 6.0;
        let m = metrics_from_rss(&tx, 0.0, &rx, 0.0, -70.22, 6e6, true);
        assert!((m.snr - 30.0).abs() < 0.01);
        assert!((m.capacity - 59.80).abs() < 0.02);
    }

    #[test]
    fn link_errors() {
        let a = endpoint(0.0, 0.0);
        let mut s = setup();
        s.bandwidth_hz = 0.0;
        assert!(matches!(evaluate_link(&a, &endpoint(0.0, 0.1), &s, None), Err(RfError::InvalidBandwidth(_))));
        assert!(matches!(evaluate_link(&a, &a, &setup(), None), Err(RfError::CoincidentEndpoints)));
        assert!(matches!(evaluate_ptmp(&a, &[], LinkDirection::Downlink, &setup(), None), Err(RfError::NoUes)));
    }

    #[test]
    fn ptmp_keeps_order_and_reciprocity() {
        let bs = endpoint(0.0, 0.0);
        let ues = vec![endpoint(0.05, 0.0), endpoint(0.0, 0.1), endpoint(0.0, 0.1)];
        let down = evaluate_ptmp(&bs, &ues, LinkDirection::Downlink, &setup(), None).unwrap();
        let up = evaluate_ptmp(&bs, &ues, LinkDirection::Uplink, &setup(), None).unwrap();
        assert_eq!(down.len(), 3);
        assert!(down[0].rss > down[1].rss);
        assert_eq!(down[1], down[2]);
        for (d, u) in down.iter().zip(&up) {
            assert!((d.pathloss - u.pathloss).abs() < 1e-9);
        }
        let single = evaluate_link(&bs, &ues[0], &setup(), None).unwrap();
        assert_eq!(single, down[0]);
    }

    #[test]
    fn los_examples() {
        let params = PropagationParams::default();
        let a = Site::new(GeoCoordinate::new(0.0, 0.0).unwrap(), 10.0);
        let b = Site::new(destination_point(a.location, 90.0, 2.0), 10.0);
        let flat = TerrainGrid::flat(GeoCoordinate::new(-0.5, -0.5).unwrap(), 100, 100, 0.01, 20.0);
        assert!(los_available(Some(&flat), a, b, &params).unwrap());

        // A 60 m ridge across the middle of the path, 50 m above the ray.
        let mut ridge = flat.clone();
        for row in 0..ridge.nrows {
            for col in 0..ridge.ncols {
                let lon = ridge.cell_center(row, col).lon;
                if (lon - 0.009).abs() < 0.006 {
                    ridge.elevations[row * ridge.ncols + col] = 80.0;
                }
            }
        }
        assert!(!los_available(Some(&ridge), a, b, &params).unwrap());
        let raised = |s: Site| Site::new(s.location, s.height_agl_m + 100.0);
        assert!(los_available(Some(&ridge), raised(a), raised(b), &params).unwrap());
        assert!(los_available(None, a, a, &params).is_err());
    }

    #[test]
    fn orientation_rejects_isotropic_and_bad_grids() {
        let bs = endpoint(0.0, 0.0);
        let ue = endpoint(0.0, 0.1);
        let scan = OrientationScan::new(OrientationTarget::Bs);
        let err = optimize_orientation(&scan, &bs, &ue, &setup(), None).unwrap_err();
        assert_eq!(err.to_string(), "orientation undefined for isotropic antenna");

        let mut bad = OrientationScan::new(OrientationTarget::Bs);
        bad.az_step = 0.0;
        assert!(bad.candidates().is_err());
        bad.az_step = 5.0;
        bad.el_range = [10.0, -10.0];
        assert!(bad.candidates().is_err());
    }

    #[test]
    fn singleton_search() {
        let mut bs = endpoint(0.0, 0.0);
        bs.antenna = Antenna::Ura(ura(2, 2));
        let ue = endpoint(0.0, 0.1);
        let scan = OrientationScan { az_range: [42.0, 42.0], el_range: [-7.0, -7.0], ..OrientationScan::new(OrientationTarget::Bs) };
        let best = optimize_orientation(&scan, &bs, &ue, &setup(), None).unwrap();
        assert_eq!(best.bs, Some(Orientation { azimuth: 42.0, elevation: -7.0 }));
        assert!(best.ue.is_none());
    }

    #[test]
    fn coverage_masks_and_grows_with_distance() {
        let bs = endpoint(0.0, 0.0);
        let boundary = crate::geodata::RegionBoundary::circle(bs.location, 5.0).unwrap();
        let grid = crate::geodata::build_pixel_grid(&boundary, 1.0).unwrap();
        let ue = endpoint(0.0, 0.0);
        let values = coverage_map(&bs, &grid, CoverageMetric::Pathloss, &ue, LinkDirection::Downlink, &setup(), None).unwrap();
        assert_eq!(values.len(), grid.len());
        for (v, m) in values.iter().zip(&grid.mask) {
            if !m {
                assert!(v.is_none());
            }
        }
        let csv = coverage_csv(&grid, &values);
        assert!(csv.starts_with("lat,lon,value\n"));
        assert_eq!(csv.lines().count(), grid.len() + 1);
    }
}
