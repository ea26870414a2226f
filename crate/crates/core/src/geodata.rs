//! Geographic primitives: coordinates, spherical great-circle math, region
//! boundaries and the pixel grid that discretizes a scan region.
//!
//! All distances use a spherical earth of radius [`EARTH_RADIUS_KM`].
//! Polygon membership is planar even-odd in lat/lon space, which is fine for
//! sub-continental regions and wrong near the poles or across the
//! antimeridian.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectrum::TvTower;

/// Mean earth radius in km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

// Coincidence threshold for great-circle operations, km.
const COINCIDENT_KM: f64 = 1e-12;
// Tolerance for on-edge tests in polygon membership, degrees.
const EDGE_EPS_DEG: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    InvalidLatitude(f64),
    #[error("longitude {0} is not finite")]
    InvalidLongitude(f64),
    #[error("coincident points have no defined bearing")]
    CoincidentPoints,
    #[error("circle radius must be > 0 km, got {0}")]
    InvalidRadius(f64),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("pixel size must be > 0 km, got {0}")]
    InvalidPixelSize(f64),
    #[error("auto boundary must be resolved against a tower set before gridding")]
    UnresolvedAuto,
    #[error("auto boundary needs at least one tower")]
    NoTowers,
    #[error("max range must be >= 0 km, got {0}")]
    InvalidRange(f64),
    #[error("geojson: {0}")]
    GeoJson(String),
}

/// A point on the sphere in decimal degrees.
///
/// Longitude is always normalized to `[-180, 180)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoordinate")]
pub struct GeoCoordinate {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Deserialize)]
struct RawCoordinate {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawCoordinate> for GeoCoordinate {
    type Error = GeoError;

    fn try_from(raw: RawCoordinate) -> Result<Self, Self::Error> {
        GeoCoordinate::new(raw.lat, raw.lon)
    }
}

impl GeoCoordinate {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::InvalidLatitude(lat));
        }
        if !lon.is_finite() {
            return Err(GeoError::InvalidLongitude(lon));
        }
        Ok(Self {
            lat,
            lon: normalize_lon(lon),
        })
    }

    fn lat_rad(&self) -> f64 {
        self.lat.to_radians()
    }

    fn lon_rad(&self) -> f64 {
        self.lon.to_radians()
    }
}

/// Wraps a longitude into `[-180, 180)`.
pub fn normalize_lon(lon: f64) -> f64 {
    if (-180.0..180.0).contains(&lon) {
        return lon;
    }
    let wrapped = (lon + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can return exactly 360.0 for tiny negative inputs.
    if wrapped >= 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

/// Great-circle distance in km.
pub fn haversine_distance(a: GeoCoordinate, b: GeoCoordinate) -> f64 {
    let dphi = b.lat_rad() - a.lat_rad();
    let dlambda = b.lon_rad() - a.lon_rad();
    let h = (dphi / 2.0).sin().powi(2)
        + a.lat_rad().cos() * b.lat_rad().cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Forward azimuth from `a` to `b`, degrees clockwise from north in `[0, 360)`.
pub fn initial_bearing(a: GeoCoordinate, b: GeoCoordinate) -> Result<f64, GeoError> {
    if haversine_distance(a, b) < COINCIDENT_KM {
        return Err(GeoError::CoincidentPoints);
    }
    let (phi1, phi2) = (a.lat_rad(), b.lat_rad());
    let dlambda = b.lon_rad() - a.lon_rad();
    let y = dlambda.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlambda.cos();
    let deg = y.atan2(x).to_degrees().rem_euclid(360.0);
    Ok(if deg >= 360.0 { 0.0 } else { deg })
}

/// Point reached by travelling `distance_km` from `origin` along the great
/// circle with initial bearing `bearing_deg`.
pub fn destination_point(origin: GeoCoordinate, bearing_deg: f64, distance_km: f64) -> GeoCoordinate {
    if distance_km == 0.0 {
        return origin;
    }
    let delta = distance_km / EARTH_RADIUS_KM;
    let theta = bearing_deg.to_radians();
    let phi1 = origin.lat_rad();
    let sin_phi2 = (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * theta.cos()).clamp(-1.0, 1.0);
    let phi2 = sin_phi2.asin();
    let lambda2 = origin.lon_rad()
        + (theta.sin() * delta.sin() * phi1.cos()).atan2(delta.cos() - phi1.sin() * sin_phi2);
    GeoCoordinate {
        lat: phi2.to_degrees().clamp(-90.0, 90.0),
        lon: normalize_lon(lambda2.to_degrees()),
    }
}

/// Point at `fraction` of the way along the great circle from `a` to `b`.
pub fn intermediate_point(a: GeoCoordinate, b: GeoCoordinate, fraction: f64) -> GeoCoordinate {
    let delta = haversine_distance(a, b) / EARTH_RADIUS_KM;
    if delta < COINCIDENT_KM / EARTH_RADIUS_KM {
        return a;
    }
    let wa = ((1.0 - fraction) * delta).sin() / delta.sin();
    let wb = (fraction * delta).sin() / delta.sin();
    let (pa, la) = (a.lat_rad(), a.lon_rad());
    let (pb, lb) = (b.lat_rad(), b.lon_rad());
    let x = wa * pa.cos() * la.cos() + wb * pb.cos() * lb.cos();
    let y = wa * pa.cos() * la.sin() + wb * pb.cos() * lb.sin();
    let z = wa * pa.sin() + wb * pb.sin();
    GeoCoordinate {
        lat: z.atan2((x * x + y * y).sqrt()).to_degrees().clamp(-90.0, 90.0),
        lon: normalize_lon(y.atan2(x).to_degrees()),
    }
}

/// Geographic bounding box in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub south: f64,
    pub west: f64,
    pub north: f64,
    pub east: f64,
}

impl BoundingBox {
    fn ring(&self) -> Vec<GeoCoordinate> {
        let c = |lat, lon| GeoCoordinate { lat, lon };
        vec![
            c(self.south, self.west),
            c(self.north, self.west),
            c(self.north, self.east),
            c(self.south, self.east),
            c(self.south, self.west),
        ]
    }
}

/// Region selection for a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RegionBoundary {
    /// Expanded bounding box of the tower set; resolved with [`auto_boundary`].
    Auto,
    Circle { center: GeoCoordinate, radius_km: f64 },
    /// Closed ring, first vertex repeated at the end.
    Polygon { ring: Vec<GeoCoordinate> },
}

impl RegionBoundary {
    pub fn circle(center: GeoCoordinate, radius_km: f64) -> Result<Self, GeoError> {
        let b = RegionBoundary::Circle { center, radius_km };
        b.validate()?;
        Ok(b)
    }

    /// Builds a polygon boundary, closing the ring when the last vertex does
    /// not repeat the first.
    pub fn polygon(mut ring: Vec<GeoCoordinate>) -> Result<Self, GeoError> {
        if let (Some(first), Some(last)) = (ring.first().copied(), ring.last().copied()) {
            if first != last {
                ring.push(first);
            }
        }
        let b = RegionBoundary::Polygon { ring };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        match self {
            RegionBoundary::Auto => Ok(()),
            RegionBoundary::Circle { radius_km, .. } => {
                if radius_km.is_finite() && *radius_km > 0.0 {
                    Ok(())
                } else {
                    Err(GeoError::InvalidRadius(*radius_km))
                }
            }
            RegionBoundary::Polygon { ring } => {
                if ring.len() < 4 || ring.first() != ring.last() {
                    return Err(GeoError::InvalidPolygon("ring must be closed".into()));
                }
                let mut distinct: Vec<GeoCoordinate> = Vec::new();
                for p in &ring[..ring.len() - 1] {
                    if !distinct.contains(p) {
                        distinct.push(*p);
                    }
                }
                if distinct.len() < 3 {
                    return Err(GeoError::InvalidPolygon(format!(
                        "ring needs at least 3 distinct vertices, got {}",
                        distinct.len()
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn bounding_box(&self) -> Option<BoundingBox> {
        match self {
            RegionBoundary::Auto => None,
            RegionBoundary::Circle { center, radius_km } => {
                let delta = radius_km / EARTH_RADIUS_KM;
                let dlat = delta.to_degrees();
                let south = (center.lat - dlat).max(-90.0);
                let north = (center.lat + dlat).min(90.0);
                let (west, east) = lon_extent(center.lon, center.lat, delta);
                Some(BoundingBox { south, west, north, east })
            }
            RegionBoundary::Polygon { ring } => {
                let mut bb = BoundingBox {
                    south: f64::INFINITY,
                    west: f64::INFINITY,
                    north: f64::NEG_INFINITY,
                    east: f64::NEG_INFINITY,
                };
                for p in ring {
                    bb.south = bb.south.min(p.lat);
                    bb.north = bb.north.max(p.lat);
                    bb.west = bb.west.min(p.lon);
                    bb.east = bb.east.max(p.lon);
                }
                Some(bb)
            }
        }
    }
}

// Longitude half-extent of a spherical cap of angular radius `delta` (rad)
// centered at latitude `lat` degrees, clamped to [-180, 180).
fn lon_extent(lon: f64, lat: f64, delta: f64) -> (f64, f64) {
    let s = delta.sin() / lat.to_radians().cos();
    if !s.is_finite() || s >= 1.0 || delta >= std::f64::consts::FRAC_PI_2 {
        return (-180.0, MAX_LON);
    }
    let dlon = s.asin().to_degrees();
    ((lon - dlon).max(-180.0), (lon + dlon).min(MAX_LON))
}

const MAX_LON: f64 = 180.0 - 1e-9;

/// Membership test for a boundary. Edges are inclusive.
pub fn boundary_contains(b: &RegionBoundary, p: GeoCoordinate) -> bool {
    match b {
        RegionBoundary::Auto => true,
        RegionBoundary::Circle { center, radius_km } => haversine_distance(*center, p) <= *radius_km,
        RegionBoundary::Polygon { ring } => ring_contains(ring, p),
    }
}

fn ring_contains(ring: &[GeoCoordinate], p: GeoCoordinate) -> bool {
    let (x, y) = (p.lon, p.lat);
    let mut inside = false;
    for edge in ring.windows(2) {
        let (xi, yi) = (edge[0].lon, edge[0].lat);
        let (xj, yj) = (edge[1].lon, edge[1].lat);
        if on_segment((xi, yi), (xj, yj), (x, y)) {
            return true;
        }
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
    }
    inside
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt().max(1.0);
    cross.abs() <= EDGE_EPS_DEG * len
        && p.0 >= a.0.min(b.0) - EDGE_EPS_DEG
        && p.0 <= a.0.max(b.0) + EDGE_EPS_DEG
        && p.1 >= a.1.min(b.1) - EDGE_EPS_DEG
        && p.1 <= a.1.max(b.1) + EDGE_EPS_DEG
}

/// Bounding box of all tower positions expanded by `max_range_km` in the four
/// cardinal directions, returned as a polygon.
pub fn auto_boundary(towers: &[TvTower], max_range_km: f64) -> Result<RegionBoundary, GeoError> {
    if towers.is_empty() {
        return Err(GeoError::NoTowers);
    }
    if !max_range_km.is_finite() || max_range_km < 0.0 {
        return Err(GeoError::InvalidRange(max_range_km));
    }
    let mut bb = BoundingBox {
        south: f64::INFINITY,
        west: f64::INFINITY,
        north: f64::NEG_INFINITY,
        east: f64::NEG_INFINITY,
    };
    let mut widest_lat: f64 = 0.0;
    for t in towers {
        let p = t.location;
        bb.south = bb.south.min(p.lat);
        bb.north = bb.north.max(p.lat);
        bb.west = bb.west.min(p.lon);
        bb.east = bb.east.max(p.lon);
        widest_lat = widest_lat.max(p.lat.abs());
    }
    let delta = max_range_km / EARTH_RADIUS_KM;
    if delta > 0.0 {
        let dlat = delta.to_degrees();
        bb.south = (bb.south - dlat).max(-90.0);
        bb.north = (bb.north + dlat).min(90.0);
        // Expand longitudes at the most poleward tower, where a degree is
        // shortest, so every tower keeps its full range inside the box.
        let (w, _) = lon_extent(bb.west, widest_lat, delta);
        let (_, e) = lon_extent(bb.east, widest_lat, delta);
        bb.west = w;
        bb.east = e;
    }
    // Built directly: a zero-range single tower yields a degenerate point box,
    // which is still a usable (edge-inclusive) membership region.
    Ok(RegionBoundary::Polygon { ring: bb.ring() })
}

/// Square analysis cells covering a boundary's bounding box.
///
/// Rows run north to south at constant latitude, spaced `pixel_size_km`
/// along the meridian. Within a row, adjacent centers are exactly
/// `pixel_size_km` apart by great-circle distance. The grid is centered on
/// the bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid {
    pub pixel_size_km: f64,
    /// Center of the northwest cell.
    pub origin: GeoCoordinate,
    pub rows: usize,
    pub cols: usize,
    pub lat_step_deg: f64,
    /// Longitude step per row, degrees.
    pub row_lon_steps: Vec<f64>,
    /// Cell centers, row-major from the northwest corner.
    pub centers: Vec<GeoCoordinate>,
    /// `true` where the cell center lies inside the boundary.
    pub mask: Vec<bool>,
}

impl PixelGrid {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn unmasked_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Unmasked cell centers in row-major order.
    pub fn unmasked(&self) -> impl Iterator<Item = (usize, GeoCoordinate)> + '_ {
        self.centers
            .iter()
            .zip(&self.mask)
            .enumerate()
            .filter(|(_, (_, m))| **m)
            .map(|(i, (c, _))| (i, *c))
    }
}

/// Latitude step of a pixel, degrees.
pub fn pixel_lat_step(pixel_size_km: f64) -> f64 {
    (pixel_size_km / EARTH_RADIUS_KM).to_degrees()
}

/// Longitude step that puts two centers at latitude `lat` exactly
/// `pixel_size_km` apart by haversine distance.
pub fn pixel_lon_step(pixel_size_km: f64, lat: f64) -> f64 {
    let s = (pixel_size_km / (2.0 * EARTH_RADIUS_KM)).sin() / lat.to_radians().cos();
    2.0 * s.clamp(0.0, 1.0).asin().to_degrees()
}

/// Whether `query` falls inside the square cell centered at `center`.
pub fn pixel_cell_contains(center: GeoCoordinate, pixel_size_km: f64, query: GeoCoordinate) -> bool {
    let half_lat = pixel_lat_step(pixel_size_km) / 2.0;
    let half_lon = pixel_lon_step(pixel_size_km, center.lat) / 2.0;
    let dlon = normalize_lon(query.lon - center.lon);
    (query.lat - center.lat).abs() <= half_lat && dlon.abs() <= half_lon
}

pub fn build_pixel_grid(b: &RegionBoundary, pixel_size_km: f64) -> Result<PixelGrid, GeoError> {
    if !pixel_size_km.is_finite() || pixel_size_km <= 0.0 {
        return Err(GeoError::InvalidPixelSize(pixel_size_km));
    }
    b.validate()?;
    let bb = b.bounding_box().ok_or(GeoError::UnresolvedAuto)?;

    let lat_step = pixel_lat_step(pixel_size_km);
    let height_km = (bb.north - bb.south).to_radians() * EARTH_RADIUS_KM;
    let rows = cells_needed(height_km, pixel_size_km);
    let lat_center = (bb.south + bb.north) / 2.0;
    let lon_center = (bb.west + bb.east) / 2.0;

    // Widest parallel inside the box sets the column count.
    let widest_lat = if bb.south <= 0.0 && bb.north >= 0.0 {
        0.0
    } else {
        bb.south.abs().min(bb.north.abs())
    };
    let width_km = (bb.east - bb.west).to_radians() * EARTH_RADIUS_KM * widest_lat.to_radians().cos();
    let cols = cells_needed(width_km, pixel_size_km);

    let row_mid = (rows as f64 - 1.0) / 2.0;
    let col_mid = (cols as f64 - 1.0) / 2.0;
    let mut centers = Vec::with_capacity(rows * cols);
    let mut mask = Vec::with_capacity(rows * cols);
    let mut row_lon_steps = Vec::with_capacity(rows);
    for r in 0..rows {
        let lat = (lat_center + (row_mid - r as f64) * lat_step).clamp(-90.0, 90.0);
        let lon_step = pixel_lon_step(pixel_size_km, lat);
        row_lon_steps.push(lon_step);
        for c in 0..cols {
            let center = GeoCoordinate {
                lat,
                lon: normalize_lon(lon_center + (c as f64 - col_mid) * lon_step),
            };
            mask.push(boundary_contains(b, center));
            centers.push(center);
        }
    }
    Ok(PixelGrid {
        pixel_size_km,
        origin: centers[0],
        rows,
        cols,
        lat_step_deg: lat_step,
        row_lon_steps,
        centers,
        mask,
    })
}

fn cells_needed(extent_km: f64, pixel_size_km: f64) -> usize {
    let n = (extent_km / pixel_size_km - 1e-9).ceil();
    if n.is_finite() && n >= 1.0 {
        n as usize
    } else {
        1
    }
}

/// Reads a polygon boundary from a GeoJSON `Polygon` geometry (bare, or
/// wrapped in a `Feature`). Only the outer ring is accepted.
pub fn load_geojson_polygon<R: Read>(reader: R) -> Result<RegionBoundary, GeoError> {
    let value: serde_json::Value =
        serde_json::from_reader(reader).map_err(|e| GeoError::GeoJson(e.to_string()))?;
    let geometry = match value.get("type").and_then(|t| t.as_str()) {
        Some("Feature") => value
            .get("geometry")
            .ok_or_else(|| GeoError::GeoJson("feature has no geometry".into()))?,
        Some("Polygon") => &value,
        Some(other) => return Err(GeoError::GeoJson(format!("expected a Polygon, got {other}"))),
        None => return Err(GeoError::GeoJson("missing \"type\"".into())),
    };
    if geometry.get("type").and_then(|t| t.as_str()) != Some("Polygon") {
        return Err(GeoError::GeoJson("geometry is not a Polygon".into()));
    }
    let rings = geometry
        .get("coordinates")
        .and_then(|c| c.as_array())
        .ok_or_else(|| GeoError::GeoJson("missing coordinates".into()))?;
    match rings.len() {
        0 => return Err(GeoError::GeoJson("polygon has no rings".into())),
        1 => {}
        n => return Err(GeoError::GeoJson(format!("polygon holes are not supported ({} rings)", n))),
    }
    let ring = rings[0]
        .as_array()
        .ok_or_else(|| GeoError::GeoJson("ring is not an array".into()))?
        .iter()
        .map(|pos| {
            let pair = pos.as_array().filter(|a| a.len() >= 2);
            match pair.map(|a| (a[0].as_f64(), a[1].as_f64())) {
                Some((Some(lon), Some(lat))) => GeoCoordinate::new(lat, lon),
                _ => Err(GeoError::GeoJson("position must be [lon, lat]".into())),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    RegionBoundary::polygon(ring)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(lat: f64, lon: f64) -> GeoCoordinate {
        GeoCoordinate::new(lat, lon).unwrap()
    }

    #[test]
    fn haversine_examples() {
        assert_eq!(haversine_distance(c(10.0, 20.0), c(10.0, 20.0)), 0.0);
        assert!((haversine_distance(c(0.0, 0.0), c(1.0, 0.0)) - 111.195).abs() < 1e-3);
        assert!((haversine_distance(c(0.0, 0.0), c(0.0, 180.0)) - 20015.1).abs() < 0.1);
    }

    #[test]
    fn longitude_normalization() {
        assert_eq!(c(0.0, 180.0).lon, -180.0);
        assert_eq!(c(0.0, 190.0).lon, -170.0);
        assert_eq!(c(0.0, -180.0).lon, -180.0);
        assert!(GeoCoordinate::new(95.0, 0.0).is_err());
        assert!(GeoCoordinate::new(0.0, f64::NAN).is_err());
    }

    #[test]
    fn bearings() {
        let o = c(0.0, 0.0);
        assert!(initial_bearing(o, c(1.0, 0.0)).unwrap().abs() < 1e-12);
        assert!((initial_bearing(o, c(0.0, 1.0)).unwrap() - 90.0).abs() < 1e-12);
        assert!((initial_bearing(o, c(-1.0, 0.0)).unwrap() - 180.0).abs() < 1e-12);
        assert_eq!(initial_bearing(o, o), Err(GeoError::CoincidentPoints));
    }

    #[test]
    fn destinations() {
        assert_eq!(destination_point(c(5.0, 5.0), 123.0, 0.0), c(5.0, 5.0));
        let n = destination_point(c(0.0, 0.0), 0.0, 111.195);
        assert!((n.lat - 1.0).abs() < 1e-4 && n.lon.abs() < 1e-9);
        let e = destination_point(c(0.0, 0.0), 90.0, 111.195);
        assert!(e.lat.abs() < 1e-9 && (e.lon - 1.0).abs() < 1e-4);
        // Exact inverse of the one-degree arc.
        let arc = 2.0 * std::f64::consts::PI * EARTH_RADIUS_KM / 360.0;
        let n = destination_point(c(0.0, 0.0), 0.0, arc);
        assert!((n.lat - 1.0).abs() < 1e-6);
    }

    #[test]
    fn circle_and_polygon_membership() {
        let circle = RegionBoundary::circle(c(0.0, 0.0), 10.0).unwrap();
        assert!(boundary_contains(&circle, c(0.0, 0.0)));
        assert!(!boundary_contains(&circle, c(1.0, 0.0)));

        let square = RegionBoundary::polygon(vec![c(0.0, 0.0), c(0.0, 1.0), c(1.0, 1.0), c(1.0, 0.0)]).unwrap();
        assert!(boundary_contains(&square, c(0.5, 0.5)));
        assert!(!boundary_contains(&square, c(1.5, 0.5)));
        // Edges and vertices are inside.
        assert!(boundary_contains(&square, c(0.0, 0.5)));
        assert!(boundary_contains(&square, c(1.0, 1.0)));
        assert!(boundary_contains(&RegionBoundary::Auto, c(-45.0, 100.0)));
    }

    #[test]
    fn polygon_validation() {
        assert!(RegionBoundary::polygon(vec![c(0.0, 0.0), c(1.0, 1.0)]).is_err());
        assert!(RegionBoundary::polygon(vec![c(0.0, 0.0), c(1.0, 1.0), c(1.0, 1.0)]).is_err());
        assert!(RegionBoundary::circle(c(0.0, 0.0), 0.0).is_err());
        let closed = RegionBoundary::polygon(vec![c(0.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)]).unwrap();
        match closed {
            RegionBoundary::Polygon { ring } => assert_eq!(ring.first(), ring.last()),
            _ => unreachable!(),
        }
    }

    fn tower_at(lat: f64, lon: f64) -> TvTower {
        TvTower::synthetic(0, c(lat, lon), 1.0, 14)
    }

    #[test]
    fn auto_boundary_examples() {
        let b = auto_boundary(&[tower_at(0.0, 0.0)], 111.195).unwrap();
        let bb = b.bounding_box().unwrap();
        for (got, want) in [(bb.south, -1.0), (bb.west, -1.0), (bb.north, 1.0), (bb.east, 1.0)] {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }

        let b = auto_boundary(&[tower_at(0.0, 0.0), tower_at(2.0, 2.0)], 0.0).unwrap();
        assert_eq!(
            b.bounding_box().unwrap(),
            BoundingBox { south: 0.0, west: 0.0, north: 2.0, east: 2.0 }
        );

        let b = auto_boundary(&[tower_at(3.0, 4.0)], 0.0).unwrap();
        assert!(boundary_contains(&b, c(3.0, 4.0)));
        assert!(!boundary_contains(&b, c(3.0, 4.1)));

        assert_eq!(auto_boundary(&[], 10.0), Err(GeoError::NoTowers));
    }

    #[test]
    fn grid_examples() {
        let circle = RegionBoundary::circle(c(10.0, 20.0), 0.5).unwrap();
        let g = build_pixel_grid(&circle, 2.0).unwrap();
        assert_eq!(g.unmasked_count(), 1);
        let (_, center) = g.unmasked().next().unwrap();
        assert!(haversine_distance(center, c(10.0, 20.0)) < 1e-9);

        // 4 km x 4 km square centered on the equator.
        let half = pixel_lat_step(2.0);
        let sq = RegionBoundary::polygon(vec![c(-half, -half), c(-half, half), c(half, half), c(half, -half)]).unwrap();
        let g = build_pixel_grid(&sq, 2.0).unwrap();
        assert_eq!((g.rows, g.cols), (2, 2));
        assert_eq!(g.unmasked_count(), 4);

        let again = build_pixel_grid(&sq, 2.0).unwrap();
        assert_eq!(g, again);

        assert!(build_pixel_grid(&sq, 0.0).is_err());
        assert_eq!(build_pixel_grid(&RegionBoundary::Auto, 1.0), Err(GeoError::UnresolvedAuto));
    }

    #[test]
    fn grid_spacing_is_pixel_size() {
        let b = RegionBoundary::circle(c(45.0, 10.0), 12.0).unwrap();
        let g = build_pixel_grid(&b, 1.5).unwrap();
        for r in 0..g.rows {
            let a = g.centers[r * g.cols];
            let b = g.centers[r * g.cols + 1];
            assert!((haversine_distance(a, b) - 1.5).abs() < 1e-9, "row {r}: {}", haversine_distance(a, b));
        }
        // Rows share no meridian in general, so compare along one.
        let a = c(g.centers[0].lat, 10.0);
        let b = c(g.centers[g.cols].lat, 10.0);
        assert!((haversine_distance(a, b) - 1.5).abs() < 1e-9);
    }

    #[test]
    fn cell_bounds() {
        let center = c(30.0, 40.0);
        assert!(pixel_cell_contains(center, 2.0, center));
        let inside = destination_point(center, 90.0, 0.99);
        assert!(pixel_cell_contains(center, 2.0, inside));
        let outside = destination_point(center, 0.0, 1.01);
        assert!(!pixel_cell_contains(center, 2.0, outside));
    }

    #[test]
    fn geojson_polygon() {
        let doc = r#"{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}"#;
        let b = load_geojson_polygon(doc.as_bytes()).unwrap();
        assert!(boundary_contains(&b, c(0.5, 0.5)));

        let feature = format!(r#"{{"type":"Feature","properties":{{}},"geometry":{doc}}}"#);
        assert_eq!(load_geojson_polygon(feature.as_bytes()).unwrap(), b);

        let holed = r#"{"type":"Polygon","coordinates":[[[0,0],[3,0],[3,3],[0,3],[0,0]],[[1,1],[2,1],[2,2],[1,1]]]}"#;
        let err = load_geojson_polygon(holed.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("holes"));

        let point = r#"{"type":"Point","coordinates":[0,0]}"#;
        assert!(load_geojson_polygon(point.as_bytes()).is_err());
    }
}
