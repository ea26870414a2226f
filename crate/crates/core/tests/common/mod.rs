//! Fixtures and a brute-force availability oracle shared by the scan tests.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use tvws_core::geodata::{build_pixel_grid, destination_point, haversine_distance, initial_bearing, pixel_lat_step};
use tvws_core::propagation::Resolution;
use tvws_core::scanner::ThresholdTable;
use tvws_core::spectrum::Band;
use tvws_core::terrain::extract_profile;
use tvws_core::{ChannelPlan, GeoCoordinate, ModelKind, PropagationParams, RegionBoundary, ScanConfig, TerrainGrid, TvTower};

pub fn c(lat: f64, lon: f64) -> GeoCoordinate {
    GeoCoordinate::new(lat, lon).unwrap()
}

/// Square region of `n × n` pixels of `pixel_km` centered on the equator.
pub fn square(n: usize, pixel_km: f64) -> RegionBoundary {
    let h = pixel_lat_step(pixel_km) * n as f64 / 2.0;
    RegionBoundary::polygon(vec![c(-h, -h), c(-h, h), c(h, h), c(h, -h)]).unwrap()
}

pub fn config(n: usize, model: ModelKind) -> ScanConfig {
    ScanConfig {
        boundary: square(n, 5.0),
        pixel_size: 5.0,
        plan: ChannelPlan::single(Band::Uhf, 14, 20, 473.0, 6.0),
        channels: (14..=20).collect(),
        reserved: vec![17],
        wsd_height: 30.0,
        wsd_gain: 0.0,
        tv_rx_height: 10.0,
        tv_rx_gain: 0.0,
        thresholds: ThresholdTable::uniform(-60.0),
        sep_co: 4.0,
        sep_adj: 1.5,
        model,
        propagation: PropagationParams {
            max_range_km: 60.0,
            resolution: Resolution::Meters(500.0),
            ..Default::default()
        },
        radials: 36,
        compute_noise: true,
        max_noise: -85.0,
        erp_dipole: false,
    }
}

pub fn random_towers(rng: &mut StdRng, count: usize, spread_deg: f64) -> Vec<TvTower> {
    (0..count)
        .map(|i| {
            let loc = c(rng.gen_range(-spread_deg..spread_deg), rng.gen_range(-spread_deg..spread_deg));
            let erp_kw = 10f64.powf(rng.gen_range(-2.5..0.0));
            let mut t = TvTower::synthetic(i as i64, loc, erp_kw, rng.gen_range(14..=20));
            t.height_agl_m = rng.gen_range(50.0..250.0);
            t
        })
        .collect()
}

/// Rolling hills: a few Gaussian bumps on a 0.01° raster around the origin.
pub fn hills(rng: &mut StdRng) -> TerrainGrid {
    let (n, cs) = (240usize, 0.01);
    let ll = c(-1.2, -1.2);
    let bumps: Vec<(f64, f64, f64, f64)> = (0..12)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(50.0..400.0), rng.gen_range(0.03..0.2)))
        .collect();
    let mut elevations = Vec::with_capacity(n * n);
    for row in 0..n {
        let lat = ll.lat + (n - row) as f64 * cs - cs / 2.0;
        for col in 0..n {
            let lon = ll.lon + col as f64 * cs + cs / 2.0;
            let h: f64 = bumps
                .iter()
                .map(|(blat, blon, amp, w)| amp * (-((lat - blat).powi(2) + (lon - blon).powi(2)) / (w * w)).exp())
                .sum();
            elevations.push(h);
        }
    }
    TerrainGrid::new(n, n, ll, cs, None, elevations).unwrap()
}

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

// ----- oracle -----

const C: f64 = 299_792_458.0;
const R_KM: f64 = 6371.0;

fn fspl(d_km: f64, f_mhz: f64) -> f64 {
    32.45 + 20.0 * d_km.log10() + 20.0 * f_mhz.log10()
}

fn j_loss(v: f64) -> f64 {
    if v <= -0.78 {
        0.0
    } else {
        6.9 + 20.0 * (((v - 0.1).powi(2) + 1.0).sqrt() + v - 0.1).log10()
    }
}

fn fresnel_v(h: f64, d1_m: f64, d2_m: f64, f_mhz: f64) -> f64 {
    let lambda = C / (f_mhz * 1e6);
    h * (2.0 * (d1_m + d2_m) / (lambda * d1_m * d2_m)).sqrt()
}

/// Free space plus a single equivalent knife edge, written out directly.
pub fn oracle_pathloss(dist_km: &[f64], elev: &[f64], h_tx: f64, h_rx: f64, f_mhz: f64, k: f64) -> f64 {
    let n = dist_km.len();
    let total = dist_km[n - 1] * 1000.0;
    let a = elev[0] + h_tx;
    let b = elev[n - 1] + h_rx;
    let re = k * R_KM * 1000.0;
    let ray = |x: f64| a + (b - a) * x / total;
    let bulge: Vec<f64> = (0..n)
        .map(|i| {
            let x = dist_km[i] * 1000.0;
            elev[i] - x * (total - x) / (2.0 * re)
        })
        .collect();
    let blocked = (1..n - 1).any(|i| bulge[i] > ray(dist_km[i] * 1000.0));
    let v = if !blocked {
        (1..n - 1)
            .map(|i| {
                let x = dist_km[i] * 1000.0;
                fresnel_v(bulge[i] - ray(x), x, total - x, f_mhz)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        let mut st = f64::NEG_INFINITY;
        let mut sr = f64::NEG_INFINITY;
        for i in 1..n - 1 {
            let x = dist_km[i] * 1000.0;
            st = st.max((bulge[i] - a) / x);
            sr = sr.max((bulge[i] - b) / (total - x));
        }
        let x = ((b - a + sr * total) / (st + sr)).clamp(1e-6, total - 1e-6);
        fresnel_v(a + st * x - ray(x), x, total - x, f_mhz)
    };
    let path = (total * total + (b - a).powi(2)).sqrt() / 1000.0;
    fspl(path, f_mhz) + if v.is_finite() { j_loss(v) } else { 0.0 }
}

fn ground(t: Option<&TerrainGrid>, p: GeoCoordinate) -> f64 {
    t.map_or(0.0, |g| g.elevation_at(p))
}

fn center_mhz(cfg: &ScanConfig, ch: u32) -> f64 {
    let s = &cfg.plan.segments[0];
    s.first_center_mhz + (ch - s.first_channel) as f64 * cfg.plan.bandwidth_mhz
}

fn eirp(t: &TvTower) -> f64 {
    10.0 * t.erp_kw.log10() + 60.0
}

/// Contour radius of `tower` along radial `k`.
fn radial_radius(cfg: &ScanConfig, tower: &TvTower, k: usize, terrain: Option<&TerrainGrid>) -> f64 {
    let step = match cfg.propagation.resolution {
        Resolution::Meters(m) => m / 1000.0,
        Resolution::Auto => unreachable!("fixtures use fixed spacing"),
    };
    let max = cfg.propagation.max_range_km;
    let bearing = k as f64 * 360.0 / cfg.radials as f64;
    let f = center_mhz(cfg, tower.channel);
    let th = -60.0;
    let mut dist = vec![0.0];
    let mut elev = vec![ground(terrain, tower.location)];
    let mut radius = 0.0;
    let mut j = 1;
    loop {
        let d = (j as f64 * step).min(max);
        let p = destination_point(tower.location, bearing, d);
        dist.push(d);
        elev.push(ground(terrain, p));
        let pl = match cfg.model {
            ModelKind::FreeSpace => {
                let dh = (elev[elev.len() - 1] + cfg.tv_rx_height - elev[0] - tower.height_agl_m) / 1000.0;
                fspl((d * d + dh * dh).sqrt(), f)
            }
            ModelKind::Terrain => oracle_pathloss(
                &dist,
                &elev,
                tower.height_agl_m,
                cfg.tv_rx_height,
                f,
                cfg.propagation.effective_earth_factor,
            ),
        };
        if eirp(tower) + cfg.tv_rx_gain - pl >= th {
            radius = d;
        }
        if d >= max - 1e-9 {
            return radius;
        }
        j += 1;
    }
}

fn oracle_noise(cfg: &ScanConfig, tower: &TvTower, p: GeoCoordinate, terrain: Option<&TerrainGrid>) -> f64 {
    let d = haversine_distance(tower.location, p);
    if d > cfg.propagation.max_range_km {
        return -1000.0;
    }
    let f = center_mhz(cfg, tower.channel);
    let pl = match cfg.model {
        ModelKind::FreeSpace => {
            let dh = (ground(terrain, p) + cfg.wsd_height - ground(terrain, tower.location) - tower.height_agl_m) / 1000.0;
            fspl((d * d + dh * dh).sqrt().max(1e-3), f)
        }
        ModelKind::Terrain => {
            let spacing = match cfg.propagation.resolution {
                Resolution::Meters(m) => m,
                Resolution::Auto => unreachable!(),
            };
            let prof = extract_profile(terrain, tower.location, p, spacing).unwrap();
            oracle_pathloss(
                &prof.distances_km,
                &prof.elevations_m,
                tower.height_agl_m,
                cfg.wsd_height,
                f,
                cfg.propagation.effective_earth_factor,
            )
        }
    };
    eirp(tower) + cfg.wsd_gain - pl
}

pub struct OraclePixel {
    pub availability: Vec<u8>,
    pub noise: Vec<f64>,
}

/// Availability and noise for every unmasked pixel in grid order, from
/// first principles.
pub fn oracle_scan(cfg: &ScanConfig, towers: &[TvTower], terrain: Option<&TerrainGrid>) -> Vec<OraclePixel> {
    let grid = build_pixel_grid(&cfg.boundary, cfg.pixel_size).unwrap();
    let mut radii: HashMap<(usize, usize), f64> = HashMap::new();
    let mut out = Vec::new();
    for (_, p) in grid.unmasked() {
        let mut availability = Vec::new();
        let mut noise = Vec::new();
        for &ch in &cfg.channels {
            let mut free = !cfg.reserved.contains(&ch);
            let mut nl = -1000.0f64;
            for (ti, t) in towers.iter().enumerate() {
                let sep = if t.channel == ch {
                    nl = nl.max(oracle_noise(cfg, t, p, terrain));
                    cfg.sep_co
                } else if t.channel.abs_diff(ch) == 1 {
                    cfg.sep_adj
                } else {
                    continue;
                };
                let d = haversine_distance(t.location, p);
                let inside = match initial_bearing(t.location, p) {
                    Err(_) => true,
                    Ok(b) => {
                        let k = (b / (360.0 / cfg.radials as f64)).round() as usize % cfg.radials;
                        let r = *radii.entry((ti, k)).or_insert_with(|| radial_radius(cfg, t, k, terrain));
                        d <= r + sep
                    }
                };
                if inside {
                    free = false;
                }
            }
            availability.push(u8::from(free));
            noise.push(nl);
        }
        out.push(OraclePixel { availability, noise });
    }
    out
}
