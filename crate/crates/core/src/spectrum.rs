//! TV tower datasets and the channel plan.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodata::GeoCoordinate;
use crate::ValidationError;

/// Columns every tower CSV must carry (matched case-insensitively).
pub const TOWER_COLUMNS: [&str; 10] = [
    "index",
    "name",
    "lat",
    "lon",
    "erp_kw",
    "channel",
    "frequency_mhz",
    "class",
    "height_agl_m",
    "country",
];

/// Maximum number of reserved channels.
pub const MAX_RESERVED: usize = 12;

/// ERP (dipole reference) to EIRP, dB.
pub const DIPOLE_GAIN_DB: f64 = 2.15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("tower file is missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("csv: {0}")]
    Csv(String),
    #[error("power must be > 0 kW, got {0}")]
    NonPositivePower(f64),
    #[error("channel {0} not in plan")]
    ChannelNotInPlan(u32),
    #[error("at most {MAX_RESERVED} reserved channels allowed, got {0}")]
    TooManyReserved(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    LowVhf,
    HighVhf,
    Uhf,
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::LowVhf => "low_vhf",
            Band::HighVhf => "high_vhf",
            Band::Uhf => "uhf",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmissionClass {
    #[serde(alias = "a")]
    Analog,
    #[serde(alias = "d")]
    Digital,
}

impl EmissionClass {
    pub fn code(&self) -> char {
        match self {
            EmissionClass::Analog => 'a',
            EmissionClass::Digital => 'd',
        }
    }
}

/// One broadcast transmitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvTower {
    pub index: i64,
    pub name: String,
    pub location: GeoCoordinate,
    pub erp_kw: f64,
    pub channel: u32,
    pub frequency_mhz: f64,
    pub emission_class: EmissionClass,
    pub height_agl_m: f64,
    pub country: String,
}

impl TvTower {
    /// Minimal digital tower, 100 m AGL, frequency left for the plan to supply.
    pub fn synthetic(index: i64, location: GeoCoordinate, erp_kw: f64, channel: u32) -> Self {
        Self {
            index,
            name: format!("tower-{index}"),
            location,
            erp_kw,
            channel,
            frequency_mhz: 0.0,
            emission_class: EmissionClass::Digital,
            height_agl_m: 100.0,
            country: String::new(),
        }
    }

    /// Radiated power in dBm. The dataset power is taken as EIRP unless
    /// `dipole_referenced`, in which case the dipole gain is added.
    pub fn eirp_dbm(&self, dipole_referenced: bool) -> f64 {
        let base = 10.0 * (self.erp_kw * 1e6).log10();
        if dipole_referenced {
            base + DIPOLE_GAIN_DB
        } else {
            base
        }
    }
}

/// Kilowatts to dBm.
pub fn erp_kw_to_dbm(erp_kw: f64) -> Result<f64, SpectrumError> {
    if erp_kw.is_finite() && erp_kw > 0.0 {
        Ok(10.0 * (erp_kw * 1e6).log10())
    } else {
        Err(SpectrumError::NonPositivePower(erp_kw))
    }
}

/// A contiguous run of channels in one band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSegment {
    pub band: Band,
    pub first_channel: u32,
    pub last_channel: u32,
    pub first_center_mhz: f64,
}

/// Channel numbering and center frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPlan {
    pub segments: Vec<ChannelSegment>,
    pub bandwidth_mhz: f64,
}

impl ChannelPlan {
    pub fn single(band: Band, first_channel: u32, last_channel: u32, first_center_mhz: f64, bandwidth_mhz: f64) -> Self {
        Self {
            segments: vec![ChannelSegment { band, first_channel, last_channel, first_center_mhz }],
            bandwidth_mhz,
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if ![6.0, 7.0, 8.0].contains(&self.bandwidth_mhz) {
            return Err(ValidationError::new(
                "plan.bandwidth_mhz",
                format!("must be 6, 7 or 8 MHz, got {}", self.bandwidth_mhz),
            ));
        }
        if self.segments.is_empty() {
            return Err(ValidationError::new("plan.segments", "at least one segment is required"));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if s.first_channel > s.last_channel {
                return Err(ValidationError::new(
                    format!("plan.segments[{i}]"),
                    "first_channel must not exceed last_channel",
                ));
            }
            if !(s.first_center_mhz.is_finite() && s.first_center_mhz > 0.0) {
                return Err(ValidationError::new(
                    format!("plan.segments[{i}].first_center_mhz"),
                    "must be > 0",
                ));
            }
            for (j, o) in self.segments.iter().enumerate().skip(i + 1) {
                if s.first_channel <= o.last_channel && o.first_channel <= s.last_channel {
                    return Err(ValidationError::new(
                        format!("plan.segments[{j}]"),
                        format!("overlaps segment {i}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn segment_of(&self, channel: u32) -> Option<usize> {
        self.segments
            .iter()
            .position(|s| (s.first_channel..=s.last_channel).contains(&channel))
    }

    pub fn contains(&self, channel: u32) -> bool {
        self.segment_of(channel).is_some()
    }

    pub fn band_of(&self, channel: u32) -> Option<Band> {
        self.segment_of(channel).map(|i| self.segments[i].band)
    }

    /// All channels of the plan in segment order.
    pub fn channels(&self) -> Vec<u32> {
        self.segments.iter().flat_map(|s| s.first_channel..=s.last_channel).collect()
    }
}

/// Center frequency of channel `n`, MHz.
pub fn channel_center_frequency(plan: &ChannelPlan, n: u32) -> Result<f64, SpectrumError> {
    let seg = plan
        .segment_of(n)
        .map(|i| &plan.segments[i])
        .ok_or(SpectrumError::ChannelNotInPlan(n))?;
    Ok(seg.first_center_mhz + f64::from(n - seg.first_channel) * plan.bandwidth_mhz)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    /// Row rejected.
    Error,
    /// Row kept.
    Warning,
}

/// A problem found in one row of a tower file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    /// 1-based line in the file; the header is line 1.
    pub line: usize,
    pub field: Option<String>,
    pub message: String,
    pub severity: Severity,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.severity {
            Severity::Error => "rejected",
            Severity::Warning => "warning",
        };
        match &self.field {
            Some(field) => write!(f, "line {} ({kind}): {field}: {}", self.line, self.message),
            None => write!(f, "line {} ({kind}): {}", self.line, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TowerLoad {
    pub towers: Vec<TvTower>,
    pub diagnostics: Vec<Diagnostic>,
}

impl TowerLoad {
    pub fn rejected(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error).count()
    }
}

/// Reads a tower CSV.
///
/// Rows that break an invariant are skipped with a diagnostic; a missing
/// column fails the whole load. With a plan, channels must belong to it and
/// the frequency column is checked against the plan within half a channel.
pub fn load_towers<R: Read>(source: R, plan: Option<&ChannelPlan>) -> Result<TowerLoad, SpectrumError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);
    let headers = reader.headers().map_err(|e| SpectrumError::Csv(e.to_string()))?.clone();
    let mut columns = [0usize; TOWER_COLUMNS.len()];
    for (slot, name) in columns.iter_mut().zip(TOWER_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
            .ok_or(SpectrumError::MissingColumn(name))?;
    }

    let mut out = TowerLoad::default();
    for record in reader.records() {
        let record = record.map_err(|e| SpectrumError::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        match parse_tower(&record, &columns, plan) {
            Ok((tower, warnings)) => {
                out.diagnostics.extend(warnings.into_iter().map(|(field, message)| Diagnostic {
                    line,
                    field: Some(field.to_string()),
                    message,
                    severity: Severity::Warning,
                }));
                out.towers.push(tower);
            }
            Err((field, message)) => out.diagnostics.push(Diagnostic {
                line,
                field: Some(field.to_string()),
                message,
                severity: Severity::Error,
            }),
        }
    }
    Ok(out)
}

type FieldIssue = (&'static str, String);

fn parse_tower(
    record: &csv::StringRecord,
    columns: &[usize; TOWER_COLUMNS.len()],
    plan: Option<&ChannelPlan>,
) -> Result<(TvTower, Vec<FieldIssue>), FieldIssue> {
    let get = |i: usize| -> Result<&str, FieldIssue> {
        record
            .get(columns[i])
            .ok_or((TOWER_COLUMNS[i], "missing value".to_string()))
    };
    let num = |i: usize| -> Result<f64, FieldIssue> {
        let raw = get(i)?;
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or((TOWER_COLUMNS[i], format!("`{raw}` is not a number")))
    };

    let index_raw = get(0)?;
    let index = index_raw
        .parse::<i64>()
        .map_err(|_| ("index", format!("`{index_raw}` is not an integer")))?;
    let name = get(1)?.to_string();
    let lat = num(2)?;
    if !(-90.0..=90.0).contains(&lat) {
        return Err(("lat", format!("{lat} outside [-90, 90]")));
    }
    let lon = num(3)?;
    if !(-180.0..=180.0).contains(&lon) {
        return Err(("lon", format!("{lon} outside [-180, 180]")));
    }
    let erp_kw = num(4)?;
    if erp_kw <= 0.0 {
        return Err(("erp_kw", format!("{erp_kw} must be > 0")));
    }
    let channel_raw = get(5)?;
    let channel = channel_raw
        .parse::<u32>()
        .map_err(|_| ("channel", format!("`{channel_raw}` is not a channel number")))?;
    let frequency_mhz = num(6)?;
    if frequency_mhz <= 0.0 {
        return Err(("frequency_mhz", format!("{frequency_mhz} must be > 0")));
    }
    let class_raw = get(7)?;
    let emission_class = match class_raw.to_ascii_lowercase().as_str() {
        "a" => EmissionClass::Analog,
        "d" => EmissionClass::Digital,
        _ => return Err(("class", format!("emission class must be 'a' or 'd', got `{class_raw}`"))),
    };
    let height_agl_m = num(8)?;
    if height_agl_m < 0.0 {
        return Err(("height_agl_m", format!("{height_agl_m} must be >= 0")));
    }
    let country = get(9)?.to_string();

    let mut warnings = Vec::new();
    if let Some(plan) = plan {
        let center = channel_center_frequency(plan, channel)
            .map_err(|_| ("channel", format!("channel {channel} not in plan")))?;
        if (frequency_mhz - center).abs() > plan.bandwidth_mhz / 2.0 {
            warnings.push((
                "frequency_mhz",
                format!("{frequency_mhz} MHz disagrees with plan center {center} MHz; plan wins"),
            ));
        }
    }
    let location = GeoCoordinate::new(lat, lon).map_err(|e| ("lat", e.to_string()))?;
    Ok((
        TvTower {
            index,
            name,
            location,
            erp_kw,
            channel,
            frequency_mhz,
            emission_class,
            height_agl_m,
            country,
        },
        warnings,
    ))
}

/// Towers relevant to one scanned channel, as positions in the tower list.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ChannelTowers {
    pub co_channel: Vec<usize>,
    pub adjacent: Vec<usize>,
}

/// Co- and adjacent-channel towers for every scanned channel.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelTowerIndex {
    pub channels: BTreeMap<u32, ChannelTowers>,
}

impl ChannelTowerIndex {
    pub fn get(&self, channel: u32) -> Option<&ChannelTowers> {
        self.channels.get(&channel)
    }

    /// Positions of every tower that touches at least one scanned channel.
    pub fn relevant_towers(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .channels
            .values()
            .flat_map(|e| e.co_channel.iter().chain(&e.adjacent).copied())
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }
}

/// Groups towers by scanned channel. Adjacency is n±1 inside one plan
/// segment; it never crosses a segment boundary.
pub fn build_channel_index(towers: &[TvTower], plan: &ChannelPlan, scan_channels: &[u32]) -> ChannelTowerIndex {
    let mut index = ChannelTowerIndex::default();
    for &n in scan_channels {
        let seg = plan.segment_of(n);
        let mut entry = ChannelTowers::default();
        for (pos, t) in towers.iter().enumerate() {
            if t.channel == n {
                entry.co_channel.push(pos);
            } else if seg.is_some() && t.channel.abs_diff(n) == 1 && plan.segment_of(t.channel) == seg {
                entry.adjacent.push(pos);
            }
        }
        index.channels.insert(n, entry);
    }
    index
}

/// Scan channels with their reserved flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservedChannels {
    pub channels: Vec<u32>,
    pub reserved: Vec<bool>,
    /// Reserved entries that are not in the scan list.
    pub ignored: Vec<u32>,
}

impl ReservedChannels {
    pub fn is_reserved(&self, channel: u32) -> bool {
        self.channels
            .iter()
            .zip(&self.reserved)
            .any(|(c, r)| *c == channel && *r)
    }
}

/// Flags reserved channels. Flagged channels stay in the scan so their noise
/// and adjacency effects are still computed; they are only forced
/// unavailable.
pub fn reserved_filter(channels: &[u32], reserved: &[u32]) -> Result<ReservedChannels, SpectrumError> {
    if reserved.len() > MAX_RESERVED {
        return Err(SpectrumError::TooManyReserved(reserved.len()));
    }
    let ignored: Vec<u32> = reserved.iter().copied().filter(|r| !channels.contains(r)).collect();
    for r in &ignored {
        log::warn!("reserved channel {r} is not scanned; ignoring");
    }
    Ok(ReservedChannels {
        channels: channels.to_vec(),
        reserved: channels.iter().map(|c| reserved.contains(c)).collect(),
        ignored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "index,name,lat,lon,erp_kw,channel,frequency_mhz,class,height_agl_m,country\n";

    fn uhf() -> ChannelPlan {
        ChannelPlan::single(Band::Uhf, 14, 20, 473.0, 6.0)
    }

    #[test]
    fn loads_valid_row() {
        let csv = format!("{HEADER}1,Alpha,24.7,46.7,10,14,473,d,150,SA\n");
        let load = load_towers(csv.as_bytes(), Some(&uhf())).unwrap();
        assert_eq!(load.towers.len(), 1);
        assert!(load.diagnostics.is_empty());
        let t = &load.towers[0];
        assert_eq!(t.name, "Alpha");
        assert_eq!(t.emission_class, EmissionClass::Digital);
    }

    #[test]
    fn headers_are_case_insensitive_and_reordered() {
        let csv = "Country,INDEX,Name,Lat,Lon,ERP_kW,Channel,Frequency_MHz,Class,Height_AGL_m\nSA,1,A,1,2,1,15,479,A,30\n";
        let load = load_towers(csv.as_bytes(), None).unwrap();
        assert_eq!(load.towers[0].channel, 15);
        assert_eq!(load.towers[0].emission_class, EmissionClass::Analog);
        assert_eq!(load.towers[0].country, "SA");
    }

    #[test]
    fn rejects_bad_rows() {
        let csv = format!("{HEADER}1,A,95,46,10,14,473,d,150,SA\n2,B,20,46,10,14,473,x,150,SA\n3,C,20,46,10,14,473,d,150,SA\n");
        let load = load_towers(csv.as_bytes(), None).unwrap();
        assert_eq!(load.towers.len(), 1);
        assert_eq!(load.diagnostics.len(), 2);
        assert_eq!(load.diagnostics[0].line, 2);
        assert_eq!(load.diagnostics[0].field.as_deref(), Some("lat"));
        assert!(load.diagnostics[1].message.contains("emission class"));
        assert_eq!(load.diagnostics[1].line, 3);
    }

    #[test]
    fn missing_column_is_fatal() {
        let csv = "index,name,lat,lon,channel,frequency_mhz,class,height_agl_m,country\n";
        assert_eq!(load_towers(csv.as_bytes(), None), Err(SpectrumError::MissingColumn("erp_kw")));
    }

    #[test]
    fn plan_checks() {
        let csv = format!("{HEADER}1,A,20,46,10,30,569,d,150,SA\n2,B,20,46,10,15,490,d,150,SA\n");
        let load = load_towers(csv.as_bytes(), Some(&uhf())).unwrap();
        assert_eq!(load.towers.len(), 1);
        assert_eq!(load.rejected(), 1);
        let warning = load.diagnostics.iter().find(|d| d.severity == Severity::Warning).unwrap();
        assert_eq!(warning.field.as_deref(), Some("frequency_mhz"));
    }

    #[test]
    fn power_conversion() {
        assert!((erp_kw_to_dbm(0.001).unwrap() - 30.0).abs() < 1e-12);
        assert!((erp_kw_to_dbm(1.0).unwrap() - 60.0).abs() < 1e-12);
        assert!((erp_kw_to_dbm(100.0).unwrap() - 80.0).abs() < 1e-12);
        assert!(erp_kw_to_dbm(0.0).is_err());
        let t = TvTower::synthetic(0, GeoCoordinate { lat: 0.0, lon: 0.0 }, 1.0, 14);
        assert!((t.eirp_dbm(true) - 62.15).abs() < 1e-12);
    }

    #[test]
    fn center_frequencies() {
        let plan = uhf();
        assert_eq!(channel_center_frequency(&plan, 14).unwrap(), 473.0);
        assert_eq!(channel_center_frequency(&plan, 20).unwrap(), 509.0);
        let err = channel_center_frequency(&plan, 21).unwrap_err();
        assert_eq!(err.to_string(), "channel 21 not in plan");
    }

    #[test]
    fn plan_validation() {
        assert!(uhf().validate().is_ok());
        let mut p = uhf();
        p.bandwidth_mhz = 5.0;
        assert_eq!(p.validate().unwrap_err().field, "plan.bandwidth_mhz");
        let mut p = uhf();
        p.segments.push(ChannelSegment { band: Band::Uhf, first_channel: 20, last_channel: 25, first_center_mhz: 600.0 });
        assert!(p.validate().is_err());
    }

    fn two_band_plan() -> ChannelPlan {
        ChannelPlan {
            segments: vec![
                ChannelSegment { band: Band::HighVhf, first_channel: 7, last_channel: 13, first_center_mhz: 177.0 },
                ChannelSegment { band: Band::Uhf, first_channel: 14, last_channel: 20, first_center_mhz: 473.0 },
            ],
            bandwidth_mhz: 6.0,
        }
    }

    #[test]
    fn channel_index_examples() {
        let o = GeoCoordinate { lat: 0.0, lon: 0.0 };
        let towers: Vec<TvTower> = [13, 14, 15].iter().map(|ch| TvTower::synthetic(*ch as i64, o, 1.0, *ch)).collect();
        let one_band = ChannelPlan::single(Band::Uhf, 10, 20, 450.0, 6.0);
        let idx = build_channel_index(&towers, &one_band, &[14, 16]);
        assert_eq!(idx.get(14).unwrap().co_channel, vec![1]);
        assert_eq!(idx.get(14).unwrap().adjacent, vec![0, 2]);
        assert!(idx.get(16).unwrap().co_channel.is_empty());
        assert_eq!(idx.get(16).unwrap().adjacent, vec![2]);

        // 13 is the last high VHF channel, 14 the first UHF one.
        let idx = build_channel_index(&towers, &two_band_plan(), &[14]);
        assert_eq!(idx.get(14).unwrap().adjacent, vec![2]);
        assert_eq!(idx.relevant_towers(), vec![1, 2]);
    }

    #[test]
    fn reserved_examples() {
        let chans: Vec<u32> = (14..=20).collect();
        let r = reserved_filter(&chans, &[17]).unwrap();
        assert!(r.is_reserved(17));
        assert_eq!(r.reserved.iter().filter(|x| **x).count(), 1);
        let r = reserved_filter(&chans, &[]).unwrap();
        assert!(r.reserved.iter().all(|x| !x));
        let r = reserved_filter(&chans, &[40]).unwrap();
        assert_eq!(r.ignored, vec![40]);
        assert!(r.reserved.iter().all(|x| !x));
        let many: Vec<u32> = (1..=13).collect();
        assert_eq!(reserved_filter(&chans, &many), Err(SpectrumError::TooManyReserved(13)));
    }
}
