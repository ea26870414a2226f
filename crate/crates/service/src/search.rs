//! Channel status at a single location.

use serde::Serialize;

use tvws_core::geodata::{haversine_distance, pixel_cell_contains};
use tvws_core::scanner::is_usable;
use tvws_core::{GeoCoordinate, PixelResult, ScanResults};

/// A scan result loaded for queries.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub results: ScanResults,
    pub pixel_size_km: f64,
    /// Default usability threshold, dBm.
    pub max_noise: f64,
    /// Channels to report on; those not scanned are `Unknown`.
    pub plan_channels: Vec<u32>,
}

impl Dataset {
    pub fn new(results: ScanResults, pixel_size_km: f64, max_noise: f64) -> Self {
        let plan_channels = results.channels.clone();
        Self { results, pixel_size_km, max_noise, plan_channels }
    }

    fn reported_channels(&self) -> Vec<u32> {
        let mut all = self.plan_channels.clone();
        for ch in &self.results.channels {
            if !all.contains(ch) {
                all.push(*ch);
            }
        }
        all.sort_unstable();
        all
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelStatus {
    AvailableUsable,
    UnavailableOrUnusable,
    Unknown,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelReport {
    pub channel: u32,
    pub status: ChannelStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_dbm: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocationQueryResult {
    pub queried: GeoCoordinate,
    pub pixel: Option<PixelResult>,
    pub channels: Vec<ChannelReport>,
    pub total_available: u32,
    pub total_usable: u32,
    pub total_available_usable: u32,
}

/// Matches the pixel nearest to `queried` when the point lies in that
/// pixel's cell; every channel is `Unknown` otherwise.
///
/// Without noise data in the dataset, usability is not checked.
pub fn search_location(data: &Dataset, queried: GeoCoordinate, max_noise: Option<f64>) -> LocationQueryResult {
    let max_noise = max_noise.unwrap_or(data.max_noise);
    let nearest = data
        .results
        .pixels
        .iter()
        .map(|p| (haversine_distance(p.center, queried), p))
        .fold(None::<(f64, &PixelResult)>, |best, (d, p)| match best {
            Some((bd, _)) if bd <= d => best,
            _ => Some((d, p)),
        })
        .map(|(_, p)| p)
        .filter(|p| pixel_cell_contains(p.center, data.pixel_size_km, queried));

    let Some(pixel) = nearest else {
        return LocationQueryResult {
            queried,
            pixel: None,
            channels: data
                .reported_channels()
                .into_iter()
                .map(|channel| ChannelReport { channel, status: ChannelStatus::Unknown, noise_dbm: None })
                .collect(),
            total_available: 0,
            total_usable: 0,
            total_available_usable: 0,
        };
    };

    let reported = data.reported_channels();
    let mut channels = Vec::with_capacity(reported.len());
    let (mut usable_count, mut both) = (0, 0);
    for channel in reported {
        let Some(i) = data.results.column(channel) else {
            channels.push(ChannelReport { channel, status: ChannelStatus::Unknown, noise_dbm: None });
            continue;
        };
        let noise = pixel.noise_dbm.as_ref().map(|n| n[i]);
        let usable = noise.is_none_or(|n| is_usable(n, max_noise));
        let available = pixel.availability[i] == 1;
        usable_count += u32::from(usable);
        both += u32::from(usable && available);
        let status = if available && usable {
            ChannelStatus::AvailableUsable
        } else {
            ChannelStatus::UnavailableOrUnusable
        };
        channels.push(ChannelReport { channel, status, noise_dbm: noise });
    }
    LocationQueryResult {
        queried,
        pixel: Some(pixel.clone()),
        channels,
        total_available: pixel.total_available,
        total_usable: usable_count,
        total_available_usable: both,
    }
}
