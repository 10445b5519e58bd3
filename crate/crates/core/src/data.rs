//! Profile ingestion and generation: household load CSVs, hourly
//! resampling, synthetic PV and tariff shapes, and the bundled demo day.

use crate::domain::{
    validate_scenario, EssParams, MicrogridParams, PowerProfile, ProfileKind, Scenario,
    SellWindowMask, TariffSchedule, TimeGrid, ValidationErrors,
};
use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use std::io::Read;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("no samples in hour {0}")]
    CoverageGap(usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] ValidationErrors),
}

/// Unit of the values in a raw series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "kW")]
    Kw,
    #[serde(rename = "W")]
    W,
    /// Energy per sampling interval; the interval is the gap to the next
    /// timestamp (to the previous one for the last sample).
    #[serde(rename = "kWh")]
    KwhPerInterval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub timestamps: Vec<NaiveDateTime>,
    pub values: Vec<f64>,
    pub unit: Unit,
    /// Rows skipped for a missing marker (`?` or empty).
    pub dropped: usize,
}

/// Which columns hold the timestamp and the value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    /// Date column; with `time` set, the two are joined by a space.
    pub timestamp: String,
    pub time: Option<String>,
    pub value: String,
}

impl ColumnSpec {
    /// Household power consumption layout: `Date;Time;Global_active_power;…`.
    pub fn household() -> Self {
        Self {
            timestamp: "Date".into(),
            time: Some("Time".into()),
            value: "Global_active_power".into(),
        }
    }
}

const TIMESTAMP_FORMATS: [&str; 6] = [
    "%d/%m/%Y %H:%M:%S",
    "%d/%m/%Y %H:%M",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%dT%H:%M",
];

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s.trim(), f).ok())
}

fn detect_delimiter(header: &str) -> u8 {
    if header.contains(';') {
        b';'
    } else if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

/// Parses CSV text with a header row; `;`, tab and `,` delimiters are
/// detected from the header.
pub fn parse_csv(text: &str, columns: &ColumnSpec, unit: Unit) -> Result<RawSeries, DataError> {
    let header = text.lines().next().unwrap_or("");
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(header))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DataError::ParseError {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let ts_col = find(&columns.timestamp)?;
    let time_col = columns.time.as_deref().map(find).transpose()?;
    let value_col = find(&columns.value)?;

    let mut series = RawSeries {
        timestamps: Vec::new(),
        values: Vec::new(),
        unit,
        dropped: 0,
    };
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| DataError::ParseError {
            line,
            message: e.to_string(),
        })?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let raw_value = field(value_col);
        if raw_value.is_empty() || raw_value == "?" {
            series.dropped += 1;
            continue;
        }
        let stamp = match time_col {
            Some(c) => format!("{} {}", field(ts_col), field(c)),
            None => field(ts_col).to_string(),
        };
        let ts = parse_timestamp(&stamp).ok_or_else(|| DataError::ParseError {
            line,
            message: format!("unrecognized timestamp {stamp:?}"),
        })?;
        let value: f64 = raw_value.parse().map_err(|_| DataError::ParseError {
            line,
            message: format!("invalid number {raw_value:?}"),
        })?;
        if !value.is_finite() {
            return Err(DataError::ParseError {
                line,
                message: "non-finite value".into(),
            });
        }
        if series.timestamps.last().is_some_and(|&prev| ts <= prev) {
            return Err(DataError::ParseError {
                line,
                message: "timestamps must be strictly increasing".into(),
            });
        }
        series.timestamps.push(ts);
        series.values.push(value);
    }
    Ok(series)
}

pub fn load_csv(path: impl AsRef<Path>, columns: &ColumnSpec, unit: Unit) -> Result<RawSeries, DataError> {
    let mut text = String::new();
    std::fs::File::open(path)?.read_to_string(&mut text)?;
    parse_csv(&text, columns, unit)
}

/// Values of a series in kW.
fn to_kw(series: &RawSeries) -> Vec<f64> {
    let n = series.values.len();
    match series.unit {
        Unit::Kw => series.values.clone(),
        Unit::W => series.values.iter().map(|v| v / 1000.0).collect(),
        Unit::KwhPerInterval => (0..n)
            .map(|k| {
                let gap = if k + 1 < n {
                    series.timestamps[k + 1] - series.timestamps[k]
                } else if k > 0 {
                    series.timestamps[k] - series.timestamps[k - 1]
                } else {
                    Duration::hours(1)
                };
                series.values[k] / (gap.num_seconds() as f64 / 3600.0)
            })
            .collect(),
    }
}

/// Mean power in each hour of `day`.
pub fn resample_hourly(series: &RawSeries, day: NaiveDate) -> Result<PowerProfile, DataError> {
    let kw = to_kw(series);
    let mut sum = [0.0; 24];
    let mut count = [0usize; 24];
    for (ts, v) in series.timestamps.iter().zip(kw) {
        if ts.date() == day {
            let h = ts.hour() as usize;
            sum[h] += v;
            count[h] += 1;
        }
    }
    let mut values = Vec::with_capacity(24);
    for h in 0..24 {
        if count[h] == 0 {
            return Err(DataError::CoverageGap(h));
        }
        values.push(sum[h] / count[h] as f64);
    }
    Ok(PowerProfile::new(ProfileKind::Load, values))
}

/// Daylight window of the synthetic PV shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvShape {
    pub sunrise: f64,
    pub sunset: f64,
}

impl Default for PvShape {
    fn default() -> Self {
        Self {
            sunrise: 6.0,
            sunset: 18.0,
        }
    }
}

impl PvShape {
    /// Relative output in [0, 1] at hour `h`: a half sine between sunrise
    /// and sunset, zero outside.
    pub fn at(&self, h: f64) -> f64 {
        if h <= self.sunrise || h >= self.sunset {
            0.0
        } else {
            (std::f64::consts::PI * (h - self.sunrise) / (self.sunset - self.sunrise)).sin()
        }
    }
}

/// PV output peaking at `capacity_kw` at midday.
pub fn synth_pv(capacity_kw: f64, grid: &TimeGrid) -> PowerProfile {
    synth_pv_shaped(capacity_kw, grid, PvShape::default())
}

pub fn synth_pv_shaped(capacity_kw: f64, grid: &TimeGrid, shape: PvShape) -> PowerProfile {
    let values = (0..grid.steps)
        .map(|t| capacity_kw * shape.at(grid.hour_of(t)))
        .collect();
    PowerProfile::new(ProfileKind::Pv, values)
}

/// PV scaled so that its energy over the grid equals `energy_kwh`.
pub fn synth_pv_energy(energy_kwh: f64, grid: &TimeGrid, shape: PvShape) -> PowerProfile {
    let unit = synth_pv_shaped(1.0, grid, shape);
    let e = unit.energy(grid.dt_hours);
    let scale = if e > 0.0 { energy_kwh / e } else { 0.0 };
    PowerProfile::new(ProfileKind::Pv, unit.values.iter().map(|v| v * scale).collect())
}

/// Piecewise-constant time-of-use prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TariffShape {
    /// `(from_hour, buy_price)` in increasing hour order; each level holds
    /// until the next one starts and the last wraps to midnight.
    pub levels: Vec<(f64, f64)>,
    /// Sell price as a fraction of the buy price.
    pub sell_fraction: f64,
}

impl Default for TariffShape {
    /// Off-peak 0.20 on [0, 7) and [22, 24), shoulder 0.26, peak 0.34 on
    /// [13, 19).
    fn default() -> Self {
        Self {
            levels: vec![(0.0, 0.20), (7.0, 0.26), (13.0, 0.34), (19.0, 0.26), (22.0, 0.20)],
            sell_fraction: 0.8,
        }
    }
}

impl TariffShape {
    pub fn buy_at(&self, h: f64) -> f64 {
        let h = h.rem_euclid(24.0);
        self.levels
            .iter()
            .rev()
            .find(|(from, _)| h >= *from)
            .or(self.levels.last())
            .map_or(0.0, |&(_, p)| p)
    }
}

pub fn synth_tariff(grid: &TimeGrid) -> TariffSchedule {
    synth_tariff_shaped(grid, &TariffShape::default())
}

pub fn synth_tariff_shaped(grid: &TimeGrid, shape: &TariffShape) -> TariffSchedule {
    let buy: Vec<f64> = (0..grid.steps).map(|t| shape.buy_at(grid.hour_of(t))).collect();
    let sell = buy.iter().map(|b| b * shape.sell_fraction).collect();
    TariffSchedule {
        buy_price: buy,
        sell_price: sell,
    }
}

/// Writes `hour,value` rows.
pub fn profile_to_csv(profile: &PowerProfile, grid: &TimeGrid) -> String {
    let mut out = String::from("hour,kw\n");
    for (t, v) in profile.values.iter().enumerate() {
        // `{}` on f64 prints the shortest string that parses back exactly.
        out.push_str(&format!("{},{}\n", grid.hour_of(t), v));
    }
    out
}

pub fn profile_from_csv(text: &str, kind: ProfileKind) -> Result<PowerProfile, DataError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DataError::ParseError {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = headers
        .iter()
        .position(|h| h == "kw")
        .ok_or_else(|| DataError::MissingColumn("kw".into()))?;
    let mut values = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| DataError::ParseError {
            line,
            message: e.to_string(),
        })?;
        let raw = rec.get(col).unwrap_or("");
        values.push(raw.parse().map_err(|_| DataError::ParseError {
            line,
            message: format!("invalid number {raw:?}"),
        })?);
    }
    Ok(PowerProfile::new(kind, values))
}

pub fn profile_to_json(profile: &PowerProfile) -> Result<String, DataError> {
    Ok(serde_json::to_string_pretty(profile)?)
}

pub fn profile_from_json(text: &str) -> Result<PowerProfile, DataError> {
    Ok(serde_json::from_str(text)?)
}

/// Bundled 24 h household load extract, one-minute samples in the
/// semicolon-separated household layout.
pub const DEMO_LOAD_CSV: &str = include_str!("../data/demo_load.csv");

/// Calendar day of the bundled extract.
pub fn demo_day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2009, 6, 20).expect("valid date")
}

/// Parameters of the bundled demo scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoSpec {
    pub ess_capacity_kwh: f64,
    pub grid_limit_kw: f64,
    pub pv: PvShape,
    pub tariff: TariffShape,
}

impl Default for DemoSpec {
    fn default() -> Self {
        Self {
            ess_capacity_kwh: 13.5,
            grid_limit_kw: 2.5,
            pv: PvShape {
                sunrise: 5.0,
                sunset: 21.0,
            },
            tariff: TariffShape {
                levels: vec![
                    (0.0, 0.20),
                    (7.0, 0.24),
                    (9.0, 0.26),
                    (13.0, 0.34),
                    (19.0, 0.28),
                    (22.0, 0.22),
                ],
                sell_fraction: 0.3,
            },
        }
    }
}

/// Hourly load of the bundled extract.
pub fn demo_load() -> PowerProfile {
    let raw = parse_csv(DEMO_LOAD_CSV, &ColumnSpec::household(), Unit::Kw).expect("bundled data parses");
    resample_hourly(&raw, demo_day()).expect("bundled data covers the day")
}

/// The demo day: bundled load, PV sized so its daily energy equals the
/// load's, and a three-level tariff. The mask is empty; its bonus weight
/// is the tariff's default.
pub fn demo_scenario() -> Scenario {
    demo_scenario_with(&DemoSpec::default()).expect("demo scenario is valid")
}

pub fn demo_scenario_with(spec: &DemoSpec) -> Result<Scenario, DataError> {
    scenario_from_load(demo_load(), spec)
}

/// Builds a day around an hourly load the way the demo is built: PV sized
/// to the load's energy, `spec`'s tariff and storage, empty mask.
pub fn scenario_from_load(load: PowerProfile, spec: &DemoSpec) -> Result<Scenario, DataError> {
    let grid = TimeGrid::hourly_day();
    let pv = synth_pv_energy(load.energy(grid.dt_hours), &grid, spec.pv);
    let tariff = synth_tariff_shaped(&grid, &spec.tariff);
    let mut mask = SellWindowMask::none(grid.steps);
    mask.bonus_weight = SellWindowMask::default_bonus(&tariff);
    let params = MicrogridParams {
        ess: EssParams::with_capacity(spec.ess_capacity_kwh),
        pv_capacity_kw: pv.peak(),
        grid_limit_kw: spec.grid_limit_kw,
    };
    Ok(validate_scenario(params, grid, load, pv, tariff, mask)?)
}
