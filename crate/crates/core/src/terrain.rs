//! Elevation rasters (ESRI ASCII grid), point lookup and path profiles.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::sync::atomic::{AtomicBool, Ordering};

use thiserror::Error;

use crate::geodata::{haversine_distance, intermediate_point, GeoCoordinate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TerrainError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing header key `{0}`")]
    MissingHeader(&'static str),
    #[error("raster length mismatch: expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("io: {0}")]
    Io(String),
    #[error("profile endpoints coincide")]
    CoincidentEndpoints,
    #[error("profile spacing must be > 0 m, got {0}")]
    InvalidSpacing(f64),
}

/// Regular lat/lon elevation raster, meters above mean sea level.
///
/// `elevations` is row-major with the northernmost row first, as in the
/// ESRI ASCII grid layout.
#[derive(Debug)]
pub struct TerrainGrid {
    pub ncols: usize,
    pub nrows: usize,
    /// Southwest corner of the southwest cell.
    pub ll_corner: GeoCoordinate,
    /// Cell size, degrees.
    pub cellsize: f64,
    pub nodata_value: Option<f64>,
    pub elevations: Vec<f64>,
    outside_warned: AtomicBool,
}

impl Clone for TerrainGrid {
    fn clone(&self) -> Self {
        Self {
            ncols: self.ncols,
            nrows: self.nrows,
            ll_corner: self.ll_corner,
            cellsize: self.cellsize,
            nodata_value: self.nodata_value,
            elevations: self.elevations.clone(),
            outside_warned: AtomicBool::new(false),
        }
    }
}

impl PartialEq for TerrainGrid {
    fn eq(&self, other: &Self) -> bool {
        self.ncols == other.ncols
            && self.nrows == other.nrows
            && self.ll_corner == other.ll_corner
            && self.cellsize == other.cellsize
            && self.nodata_value == other.nodata_value
            && self.elevations == other.elevations
    }
}

impl TerrainGrid {
    pub fn new(
        ncols: usize,
        nrows: usize,
        ll_corner: GeoCoordinate,
        cellsize: f64,
        nodata_value: Option<f64>,
        elevations: Vec<f64>,
    ) -> Result<Self, TerrainError> {
        if ncols == 0 || nrows == 0 {
            return Err(TerrainError::Parse { line: 0, message: "ncols and nrows must be >= 1".into() });
        }
        if !(cellsize.is_finite() && cellsize > 0.0) {
            return Err(TerrainError::Parse { line: 0, message: format!("cellsize must be > 0, got {cellsize}") });
        }
        if elevations.len() != ncols * nrows {
            return Err(TerrainError::LengthMismatch { expected: ncols * nrows, found: elevations.len() });
        }
        Ok(Self {
            ncols,
            nrows,
            ll_corner,
            cellsize,
            nodata_value,
            elevations,
            outside_warned: AtomicBool::new(false),
        })
    }

    /// Constant-elevation grid covering the given box.
    pub fn flat(ll_corner: GeoCoordinate, ncols: usize, nrows: usize, cellsize: f64, elevation: f64) -> Self {
        Self::new(ncols, nrows, ll_corner, cellsize, None, vec![elevation; ncols * nrows])
            .expect("flat grid dimensions")
    }

    /// Raw cell value, `row` counted from the north edge.
    pub fn cell(&self, row: usize, col: usize) -> f64 {
        self.elevations[row * self.ncols + col]
    }

    pub fn is_nodata(&self, row: usize, col: usize) -> bool {
        self.nodata_value == Some(self.cell(row, col))
    }

    /// Center of a cell, `row` counted from the north edge.
    pub fn cell_center(&self, row: usize, col: usize) -> GeoCoordinate {
        GeoCoordinate {
            lat: self.ll_corner.lat + (self.nrows - row) as f64 * self.cellsize - self.cellsize / 2.0,
            lon: self.ll_corner.lon + (col as f64 + 0.5) * self.cellsize,
        }
    }

    /// Clears the once-per-scan out-of-grid warning latch.
    pub fn reset_warnings(&self) {
        self.outside_warned.store(false, Ordering::Relaxed);
    }

    // Value used for interpolation; nodata reads as sea level.
    fn value_from_south(&self, row_s: usize, col: usize) -> f64 {
        let row = self.nrows - 1 - row_s;
        if self.is_nodata(row, col) {
            0.0
        } else {
            self.cell(row, col)
        }
    }

    /// Bilinear elevation over the four surrounding cell centers.
    ///
    /// Nodata cells count as 0 m. Points outside the raster extent return
    /// 0 m and log a warning once until [`reset_warnings`](Self::reset_warnings).
    pub fn elevation_at(&self, p: GeoCoordinate) -> f64 {
        let x = (p.lon - self.ll_corner.lon) / self.cellsize;
        let y = (p.lat - self.ll_corner.lat) / self.cellsize;
        if !(0.0..=self.ncols as f64).contains(&x) || !(0.0..=self.nrows as f64).contains(&y) {
            if !self.outside_warned.swap(true, Ordering::Relaxed) {
                log::warn!(
                    "point ({:.6}, {:.6}) lies outside the terrain grid; using 0 m",
                    p.lat,
                    p.lon
                );
            }
            return 0.0;
        }
        let u = (x - 0.5).clamp(0.0, (self.ncols - 1) as f64);
        let v = (y - 0.5).clamp(0.0, (self.nrows - 1) as f64);
        let c0 = (u.floor() as usize).min(self.ncols.saturating_sub(2));
        let r0 = (v.floor() as usize).min(self.nrows.saturating_sub(2));
        let c1 = (c0 + 1).min(self.ncols - 1);
        let r1 = (r0 + 1).min(self.nrows - 1);
        let fu = u - c0 as f64;
        let fv = v - r0 as f64;
        let z00 = self.value_from_south(r0, c0);
        let z01 = self.value_from_south(r0, c1);
        let z10 = self.value_from_south(r1, c0);
        let z11 = self.value_from_south(r1, c1);
        let south = z00 + (z01 - z00) * fu;
        let north = z10 + (z11 - z10) * fu;
        south + (north - south) * fv
    }

    /// Serializes back to ESRI ASCII grid text.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ncols {}", self.ncols);
        let _ = writeln!(out, "nrows {}", self.nrows);
        let _ = writeln!(out, "xllcorner {}", self.ll_corner.lon);
        let _ = writeln!(out, "yllcorner {}", self.ll_corner.lat);
        let _ = writeln!(out, "cellsize {}", self.cellsize);
        if let Some(nd) = self.nodata_value {
            let _ = writeln!(out, "NODATA_value {}", nd);
        }
        for row in self.elevations.chunks(self.ncols) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Elevation at `p`, or sea level when no terrain is loaded.
pub fn elevation_or_sea_level(terrain: Option<&TerrainGrid>, p: GeoCoordinate) -> f64 {
    terrain.map_or(0.0, |t| t.elevation_at(p))
}

/// Parses an ESRI ASCII grid. Header keys are case-insensitive;
/// `xllcenter`/`yllcenter` are accepted in place of the corner keys.
pub fn load_terrain<R: Read>(source: R) -> Result<TerrainGrid, TerrainError> {
    let reader = BufReader::new(source);
    let mut ncols = None;
    let mut nrows = None;
    let mut xll = None;
    let mut yll = None;
    let mut centered = (false, false);
    let mut cellsize = None;
    let mut nodata = None;
    let mut values: Vec<f64> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| TerrainError::Io(e.to_string()))?;
        let mut tokens = line.split_whitespace().peekable();
        let Some(first) = tokens.peek().copied() else { continue };

        let parse_num = |tok: &str| -> Result<f64, TerrainError> {
            tok.parse::<f64>().map_err(|_| TerrainError::Parse {
                line: lineno,
                message: format!("non-numeric value `{tok}`"),
            })
        };

        if values.is_empty() && first.starts_with(|c: char| c.is_ascii_alphabetic()) {
            let key = first.to_ascii_lowercase();
            tokens.next();
            let raw = tokens.next().ok_or_else(|| TerrainError::Parse {
                line: lineno,
                message: format!("header key `{first}` has no value"),
            })?;
            let value = parse_num(raw)?;
            let count = |v: f64| -> Result<usize, TerrainError> {
                if v >= 1.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(TerrainError::Parse { line: lineno, message: format!("`{first}` must be a positive integer") })
                }
            };
            match key.as_str() {
                "ncols" => ncols = Some(count(value)?),
                "nrows" => nrows = Some(count(value)?),
                "xllcorner" => xll = Some(value),
                "yllcorner" => yll = Some(value),
                "xllcenter" => {
                    xll = Some(value);
                    centered.0 = true;
                }
                "yllcenter" => {
                    yll = Some(value);
                    centered.1 = true;
                }
                "cellsize" => cellsize = Some(value),
                "nodata_value" => nodata = Some(value),
                _ => {
                    return Err(TerrainError::Parse { line: lineno, message: format!("unknown header key `{first}`") })
                }
            }
            continue;
        }
        for tok in tokens {
            values.push(parse_num(tok)?);
        }
    }

    let ncols = ncols.ok_or(TerrainError::MissingHeader("ncols"))?;
    let nrows = nrows.ok_or(TerrainError::MissingHeader("nrows"))?;
    let mut xll = xll.ok_or(TerrainError::MissingHeader("xllcorner"))?;
    let mut yll = yll.ok_or(TerrainError::MissingHeader("yllcorner"))?;
    let cellsize = cellsize.ok_or(TerrainError::MissingHeader("cellsize"))?;
    if centered.0 {
        xll -= cellsize / 2.0;
    }
    if centered.1 {
        yll -= cellsize / 2.0;
    }
    if values.len() != ncols * nrows {
        return Err(TerrainError::LengthMismatch { expected: ncols * nrows, found: values.len() });
    }
    if !(-90.0..=90.0).contains(&yll) || !xll.is_finite() {
        return Err(TerrainError::Parse { line: 0, message: format!("corner ({yll}, {xll}) is not a valid coordinate") });
    }
    // The corner longitude is kept as written; cell math is done relative to it.
    let corner = GeoCoordinate { lat: yll, lon: xll };
    TerrainGrid::new(ncols, nrows, corner, cellsize, nodata, values)
}

/// Terrain samples along a great-circle path.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainProfile {
    /// Distance from `start`, km; ascending, first 0, last the path length.
    pub distances_km: Vec<f64>,
    /// Meters AMSL at each sample.
    pub elevations_m: Vec<f64>,
    pub start: GeoCoordinate,
    pub end: GeoCoordinate,
}

impl TerrainProfile {
    pub fn length_km(&self) -> f64 {
        self.distances_km.last().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.distances_km.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances_km.is_empty()
    }

    /// Same path walked from the other end.
    pub fn reversed(&self) -> TerrainProfile {
        let total = self.length_km();
        TerrainProfile {
            distances_km: self.distances_km.iter().rev().map(|d| total - d).collect(),
            elevations_m: self.elevations_m.iter().rev().copied().collect(),
            start: self.end,
            end: self.start,
        }
    }
}

/// Samples terrain every `spacing_m` along the great circle from `a` to `b`.
///
/// The path is split into equal segments no longer than `spacing_m`; both
/// endpoints are always present.
pub fn extract_profile(
    grid: Option<&TerrainGrid>,
    a: GeoCoordinate,
    b: GeoCoordinate,
    spacing_m: f64,
) -> Result<TerrainProfile, TerrainError> {
    if !(spacing_m.is_finite() && spacing_m > 0.0) {
        return Err(TerrainError::InvalidSpacing(spacing_m));
    }
    let length_km = haversine_distance(a, b);
    if length_km < 1e-12 {
        return Err(TerrainError::CoincidentEndpoints);
    }
    let segments = ((length_km * 1000.0 / spacing_m - 1e-9).ceil() as usize).max(1);
    let mut distances_km = Vec::with_capacity(segments + 1);
    let mut elevations_m = Vec::with_capacity(segments + 1);
    for i in 0..=segments {
        let (point, d) = match i {
            0 => (a, 0.0),
            i if i == segments => (b, length_km),
            // Interpolate from the nearer end so a reversed path samples
            // bit-identical points.
            i if 2 * i <= segments => {
                let f = i as f64 / segments as f64;
                (intermediate_point(a, b, f), length_km * f)
            }
            i => {
                let f = (segments - i) as f64 / segments as f64;
                (intermediate_point(b, a, f), length_km - length_km * f)
            }
        };
        distances_km.push(d);
        elevations_m.push(elevation_or_sea_level(grid, point));
    }
    Ok(TerrainProfile { distances_km, elevations_m, start: a, end: b })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 2\n3 4\n";

    #[test]
    fn parses_small_grid() {
        let g = load_terrain(SMALL.as_bytes()).unwrap();
        assert_eq!((g.ncols, g.nrows), (2, 2));
        assert_eq!(g.elevations, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(g.nodata_value, Some(-9999.0));
    }

    #[test]
    fn header_is_case_insensitive_and_center_keys_work() {
        let text = "NCOLS 1\nNROWS 1\nXLLCENTER 0.5\nYLLCENTER 0.5\nCELLSIZE 1\n7\n";
        let g = load_terrain(text.as_bytes()).unwrap();
        assert_eq!(g.ll_corner, GeoCoordinate { lat: 0.0, lon: 0.0 });
        assert_eq!(g.cell(0, 0), 7.0);
    }

    #[test]
    fn parse_errors() {
        let short = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2\n3\n";
        let err = load_terrain(short.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("raster length mismatch"), "{err}");

        let missing = "ncols 2\nnrows 2\nxllcorner 0\ncellsize 1\n1 2\n3 4\n";
        assert_eq!(load_terrain(missing.as_bytes()).unwrap_err(), TerrainError::MissingHeader("yllcorner"));

        let bad = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2\n3 x\n";
        match load_terrain(bad.as_bytes()).unwrap_err() {
            TerrainError::Parse { line, message } => {
                assert_eq!(line, 7);
                assert!(message.contains("non-numeric"));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn nodata_cell_is_flagged_and_reads_as_zero() {
        let text = "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n-9999 100\n";
        let g = load_terrain(text.as_bytes()).unwrap();
        assert!(g.is_nodata(0, 0));
        assert!(!g.is_nodata(0, 1));
        assert_eq!(g.elevation_at(g.cell_center(0, 0)), 0.0);
        assert_eq!(g.elevation_at(g.cell_center(0, 1)), 100.0);
    }

    #[test]
    fn interpolation() {
        let text = "ncols 3\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n120 100 200\n10 20 30\n";
        let g = load_terrain(text.as_bytes()).unwrap();
        assert_eq!(g.elevation_at(g.cell_center(0, 0)), 120.0);
        let mid = GeoCoordinate { lat: 1.5, lon: 2.0 };
        assert!((g.elevation_at(mid) - 150.0).abs() < 1e-9);
        let outside = GeoCoordinate { lat: 5.0, lon: 5.0 };
        assert_eq!(g.elevation_at(outside), 0.0);
        // Between the last center and the outer edge the edge value holds.
        let edge = GeoCoordinate { lat: 1.9, lon: 2.9 };
        assert_eq!(g.elevation_at(edge), 200.0);
    }

    #[test]
    fn round_trip_text() {
        let text = "ncols 3\nnrows 1\nxllcorner -1.25\nyllcorner 2.5\ncellsize 0.008333333333333333\nNODATA_value -9999\n1.5 -9999 0.1\n";
        let g = load_terrain(text.as_bytes()).unwrap();
        let again = load_terrain(g.to_ascii().as_bytes()).unwrap();
        assert_eq!(g, again);
        assert_eq!(g.to_ascii(), again.to_ascii());
    }

    fn flat(elev: f64) -> TerrainGrid {
        TerrainGrid::flat(GeoCoordinate { lat: -1.0, lon: -1.0 }, 20, 20, 0.1, elev)
    }

    #[test]
    fn profiles() {
        let g = flat(50.0);
        let a = GeoCoordinate { lat: 0.0, lon: 0.0 };
        let b = GeoCoordinate { lat: 0.3, lon: 0.4 };
        let p = extract_profile(Some(&g), a, b, 90.0).unwrap();
        assert!(p.elevations_m.iter().all(|e| *e == 50.0));

        let km = crate::geodata::destination_point(a, 45.0, 1.0);
        let p = extract_profile(Some(&g), a, km, 250.0).unwrap();
        assert_eq!(p.len(), 5);
        for (d, want) in p.distances_km.iter().zip([0.0, 0.25, 0.5, 0.75, 1.0]) {
            assert!((d - want).abs() < 1e-9, "{d}");
        }

        let p = extract_profile(Some(&g), a, km, 5000.0).unwrap();
        assert_eq!(p.len(), 2);

        assert_eq!(extract_profile(Some(&g), a, a, 90.0).unwrap_err(), TerrainError::CoincidentEndpoints);
        assert!(extract_profile(Some(&g), a, b, 0.0).is_err());
        assert!(extract_profile(None, a, b, 90.0).unwrap().elevations_m.iter().all(|e| *e == 0.0));
    }
}
