//! Uniformly sampled input signals: loading, resampling, forecasts and
//! synthetic profiles.
//!
//! Timestamps are naive local clock time at minute resolution. Values are
//! shared behind an `Arc`, so cloning a series is cheap and parallel
//! simulations can hold the same one-year data without copying it.

use std::path::Path;
use std::sync::Arc;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";
pub const MINUTES_PER_DAY: u32 = 1440;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    start: NaiveDateTime,
    step_minutes: u32,
    values: Arc<[f64]>,
}

impl TimeSeries {
    pub fn new(start: NaiveDateTime, step_minutes: u32, values: Vec<f64>) -> Result<Self> {
        if step_minutes == 0 {
            return Err(Error::InvalidSeries("step must be positive".into()));
        }
        if values.is_empty() {
            return Err(Error::InvalidSeries("no samples".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("sample {i} is not finite")));
        }
        Ok(Self {
            start,
            step_minutes,
            values: values.into(),
        })
    }

    /// Constant series, mostly useful for tests and toy scenarios.
    pub fn constant(
        start: NaiveDateTime,
        step_minutes: u32,
        len: usize,
        value: f64,
    ) -> Result<Self> {
        Self::new(start, step_minutes, vec![value; len])
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn step_minutes(&self) -> u32 {
        self.step_minutes
    }

    pub fn step_hours(&self) -> f64 {
        f64::from(self.step_minutes) / 60.0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, index: usize) -> NaiveDateTime {
        self.start + Duration::minutes(index as i64 * i64::from(self.step_minutes))
    }

    pub fn steps_per_day(&self) -> Option<usize> {
        MINUTES_PER_DAY
            .is_multiple_of(self.step_minutes)
            .then(|| (MINUTES_PER_DAY / self.step_minutes) as usize)
    }

    /// Σ p·Δt in kWh when the values are kW.
    pub fn energy_kwh(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.step_hours()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            start: self.start,
            step_minutes: self.step_minutes,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Contiguous sub-range of samples starting at `from`.
    pub fn window(&self, from: usize, len: usize) -> Result<Self> {
        if from + len > self.len() || len == 0 {
            return Err(Error::TooShort {
                needed: from + len,
                have: self.len(),
            });
        }
        Ok(Self {
            start: self.time_at(from),
            step_minutes: self.step_minutes,
            values: self.values[from..from + len].into(),
        })
    }

    pub fn ensure_non_negative(&self, what: &str) -> Result<()> {
        match self.values.iter().position(|v| *v < 0.0) {
            Some(i) => Err(Error::InvalidSeries(format!(
                "{what}: sample {i} is negative ({})",
                self.values[i]
            ))),
            None => Ok(()),
        }
    }

    pub fn is_aligned_with(&self, other: &TimeSeries) -> bool {
        self.start == other.start
            && self.step_minutes == other.step_minutes
            && self.len() == other.len()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(["timestamp", "value"])
            .map_err(|e| csv_err(path, e))?;
        for (i, v) in self.values.iter().enumerate() {
            let ts = self.time_at(i).format(TIMESTAMP_FORMAT).to_string();
            w.write_record([ts, v.to_string()])
                .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// A forecast with the realised signal it tries to predict.
#[derive(Debug, Clone)]
pub struct ForecastPair {
    predicted: TimeSeries,
    actual: TimeSeries,
}

impl ForecastPair {
    pub fn new(predicted: TimeSeries, actual: TimeSeries) -> Result<Self> {
        if !predicted.is_aligned_with(&actual) {
            return Err(Error::Misaligned(
                "forecast and actual differ in start, step or length".into(),
            ));
        }
        Ok(Self { predicted, actual })
    }

    pub fn predicted(&self) -> &TimeSeries {
        &self.predicted
    }

    pub fn actual(&self) -> &TimeSeries {
        &self.actual
    }

    /// Mean absolute error in the series unit.
    pub fn mae(&self) -> f64 {
        let n = self.actual.len() as f64;
        self.predicted
            .values()
            .iter()
            .zip(self.actual.values())
            .map(|(p, a)| (p - a).abs())
            .sum::<f64>()
            / n
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Csv {
        path: path.to_path_buf(),
        line,
        msg: e.to_string(),
    }
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s.trim(), TIMESTAMP_FORMAT).ok()
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    timestamp: String,
    value: f64,
}

/// Reads a `timestamp,value` power series, rejecting negative samples.
pub fn load_csv_series(path: &Path, expected_step_minutes: u32) -> Result<TimeSeries> {
    let series = load_csv_series_signed(path, expected_step_minutes)?;
    if let Some(i) = series.values().iter().position(|v| *v < 0.0) {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            line: i as u64 + 2,
            msg: format!("negative value {} in a power series", series.values()[i]),
        });
    }
    Ok(series)
}

/// Same as [`load_csv_series`] but accepts negative values.
pub fn load_csv_series_signed(path: &Path, expected_step_minutes: u32) -> Result<TimeSeries> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;

    let mut times: Vec<NaiveDateTime> = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.deserialize::<CsvRow>() {
        let row = rec.map_err(|e| csv_err(path, e))?;
        let line = times.len() as u64 + 2;
        let ts = parse_timestamp(&row.timestamp).ok_or_else(|| Error::Csv {
            path: path.to_path_buf(),
            line,
            msg: format!(
                "bad timestamp `{}`, expected YYYY-MM-DDTHH:MM",
                row.timestamp
            ),
        })?;
        if !row.value.is_finite() {
            return Err(Error::Csv {
                path: path.to_path_buf(),
                line,
                msg: "non-finite value".into(),
            });
        }
        times.push(ts);
        values.push(row.value);
    }
    if times.is_empty() {
        return Err(Error::InvalidSeries(format!("{}: no rows", path.display())));
    }

    let step = if times.len() > 1 {
        (times[1] - times[0]).num_minutes()
    } else {
        i64::from(expected_step_minutes)
    };
    if step <= 0 {
        return Err(Error::NonUniformSpacing {
            line: 3,
            expected: i64::from(expected_step_minutes),
            found: step,
        });
    }
    for (i, pair) in times.windows(2).enumerate() {
        let d = (pair[1] - pair[0]).num_minutes();
        if d != step {
            return Err(Error::NonUniformSpacing {
                line: i as u64 + 3,
                expected: step,
                found: d,
            });
        }
    }
    if step != i64::from(expected_step_minutes) {
        return Err(Error::StepMismatch {
            expected: expected_step_minutes,
            found: step as u32,
        });
    }
    TimeSeries::new(times[0], step as u32, values)
}

/// Block-average downsampling. Energy Σ p·Δt is preserved.
pub fn resample(s: &TimeSeries, new_step_minutes: u32) -> Result<TimeSeries> {
    if new_step_minutes == 0 || !new_step_minutes.is_multiple_of(s.step_minutes) {
        return Err(Error::Resample(format!(
            "{new_step_minutes} min is not an integer multiple of {} min",
            s.step_minutes
        )));
    }
    let ratio = (new_step_minutes / s.step_minutes) as usize;
    if ratio == 1 {
        return Ok(s.clone());
    }
    if !s.len().is_multiple_of(ratio) {
        return Err(Error::Resample(format!(
            "length {} is not divisible by the ratio {ratio}",
            s.len()
        )));
    }
    let values = s
        .values
        .chunks_exact(ratio)
        .map(|block| block.iter().sum::<f64>() / ratio as f64)
        .collect();
    TimeSeries::new(s.start, new_step_minutes, values)
}

/// Forecast that repeats the value observed `lag_minutes` earlier.
///
/// The first lag window has no history; it is filled with the first
/// recorded period itself (same weekday and clock time).
pub fn persistence_forecast(actual: &TimeSeries, lag_minutes: u32) -> Result<TimeSeries> {
    if lag_minutes == 0 || !lag_minutes.is_multiple_of(actual.step_minutes) {
        return Err(Error::param(
            "lag_minutes",
            format!(
                "{lag_minutes} min is not a multiple of the {} min step",
                actual.step_minutes
            ),
        ));
    }
    let lag = (lag_minutes / actual.step_minutes) as usize;
    if actual.len() < lag {
        return Err(Error::TooShort {
            needed: lag,
            have: actual.len(),
        });
    }
    let v = actual.values();
    let values = (0..v.len())
        .map(|i| if i >= lag { v[i - lag] } else { v[i % lag] })
        .collect();
    TimeSeries::new(actual.start, actual.step_minutes, values)
}

/// `(1 - w)·baseline + w·actual`, sample by sample.
pub fn blend_forecast(baseline: &TimeSeries, actual: &TimeSeries, w: f64) -> Result<TimeSeries> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::param(
            "forecast.blend",
            format!("{w} is outside [0, 1]"),
        ));
    }
    if !baseline.is_aligned_with(actual) {
        return Err(Error::Misaligned(
            "baseline forecast and actual differ in start, step or length".into(),
        ));
    }
    if w == 0.0 {
        return Ok(baseline.clone());
    }
    if w == 1.0 {
        return Ok(actual.clone());
    }
    let values = baseline
        .values()
        .iter()
        .zip(actual.values())
        .map(|(b, a)| (1.0 - w) * b + w * a)
        .collect();
    TimeSeries::new(baseline.start, baseline.step_minutes, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// PV output per installed kWp (kW/kWp), 1-min resolution.
    PvProducible,
    /// Weekly industrial load in kW with a 40 kW peak.
    IndustrialLoad,
}

pub const INDUSTRIAL_PEAK_KW: f64 = 40.0;

/// Monday 2018-01-01 00:00, the origin of every synthetic profile.
pub fn synth_start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2018, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date")
}

/// Deterministic synthetic profile at 1-minute resolution.
pub fn synth_profiles(seed: u64, days: u32, kind: ProfileKind) -> Result<TimeSeries> {
    if days == 0 {
        return Err(Error::param("days", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = synth_start();
    let values = match kind {
        ProfileKind::PvProducible => synth_pv(&mut rng, start, days),
        ProfileKind::IndustrialLoad => synth_load(&mut rng, start, days),
    };
    TimeSeries::new(start, 1, values)
}

/// Clear-sky envelope in kW/kWp for a minute of a given day of year.
fn clear_sky(day_of_year: u32, minute_of_day: u32) -> f64 {
    use std::f64::consts::PI;
    let season = (2.0 * PI * (f64::from(day_of_year) - 172.0) / 365.0).cos();
    let day_len_h = 12.0 + 1.6 * season;
    let peak = 0.86 + 0.08 * season;
    let noon = 12.5;
    let t = f64::from(minute_of_day) / 60.0 + 0.5 / 60.0;
    let x = (t - (noon - day_len_h / 2.0)) / day_len_h;
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        peak * (PI * x).sin().powf(1.3)
    }
}

fn synth_pv(rng: &mut ChaCha8Rng, start: NaiveDateTime, days: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity((days * MINUTES_PER_DAY) as usize);
    let mut noise = 0.0_f64;
    for d in 0..days {
        let doy = (start + Duration::days(i64::from(d))).ordinal();
        // Daily clearness: mostly clear, some broken cloud, a few overcast days.
        let u: f64 = rng.random();
        let (level, sigma) = if u < 0.55 {
            (rng.random_range(0.85..1.0), 0.01)
        } else if u < 0.85 {
            (rng.random_range(0.5..0.85), 0.05)
        } else {
            (rng.random_range(0.15..0.5), 0.03)
        };
        for m in 0..MINUTES_PER_DAY {
            let z: f64 = rng.sample(StandardNormal);
            noise = 0.97 * noise + sigma * z;
            let cs = clear_sky(doy, m);
            let k = (level + noise).clamp(0.05, 1.05);
            out.push(cs * k);
        }
    }
    out
}

fn synth_load(rng: &mut ChaCha8Rng, start: NaiveDateTime, days: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity((days * MINUTES_PER_DAY) as usize);
    let mut noise = 0.0_f64;
    for d in 0..days {
        let date = start + Duration::days(i64::from(d));
        let weekday = date.weekday().num_days_from_monday();
        for m in 0..MINUTES_PER_DAY {
            let h = f64::from(m) / 60.0;
            let level = match weekday {
                0..=4 => weekday_shape(h),
                5 => 0.30 + 0.20 * plateau(h, 7.0, 12.0, 0.5),
                _ => 0.28,
            };
            let z: f64 = rng.sample(StandardNormal);
            noise = 0.95 * noise + 0.004 * z;
            out.push((level * (1.0 + noise)).max(0.0));
        }
    }
    let peak = out.iter().copied().fold(0.0_f64, f64::max);
    if peak > 0.0 {
        for v in &mut out {
            *v = *v / peak * INDUSTRIAL_PEAK_KW;
        }
    }
    out
}

/// Weekday shape: night base, morning ramp, production plateau with a lunch dip.
fn weekday_shape(h: f64) -> f64 {
    let base = 0.30;
    let shift = plateau(h, 6.5, 18.5, 0.75);
    let lunch = plateau(h, 12.0, 13.0, 0.25);
    base + 0.68 * shift - 0.12 * lunch
}

/// Trapezoid from `on` to `off` with linear edges of `edge` hours.
fn plateau(h: f64, on: f64, off: f64, edge: f64) -> f64 {
    if h <= on - edge || h >= off + edge {
        0.0
    } else if h < on {
        (h - (on - edge)) / edge
    } else if h > off {
        ((off + edge) - h) / edge
    } else {
        1.0
    }
}

/// Day-ahead style forecast of a PV-like series: the realised signal
/// smoothed over two hours, scaled by a daily bias and a slow hourly error.
/// `error` is the standard deviation of the daily relative bias.
pub fn synth_forecast(actual: &TimeSeries, seed: u64, error: f64) -> Result<TimeSeries> {
    if !(error >= 0.0 && error.is_finite()) {
        return Err(Error::param("error", "must be finite and non-negative"));
    }
    let spd = actual
        .steps_per_day()
        .ok_or_else(|| Error::InvalidSeries("step does not divide a day".into()))?;
    let half = ((60 / actual.step_minutes.min(60)) as usize).max(1);
    let smoothed = centered_moving_average(actual.values(), 2 * half + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps_per_hour = (60 / actual.step_minutes).max(1) as usize;
    let mut out = Vec::with_capacity(actual.len());
    let mut hourly = 0.0_f64;
    let mut daily = 0.0_f64;
    for (i, (&s, &a)) in smoothed.iter().zip(actual.values()).enumerate() {
        if i % spd == 0 {
            let z: f64 = rng.sample(StandardNormal);
            daily = (error * z).clamp(-0.8, 0.8);
        }
        if i % steps_per_hour == 0 {
            let z: f64 = rng.sample(StandardNormal);
            hourly = 0.7 * hourly + 0.5 * error * z;
        }
        let v = if a == 0.0 && s == 0.0 {
            0.0
        } else {
            s * (1.0 + daily + hourly)
        };
        out.push(v.max(0.0));
    }
    TimeSeries::new(actual.start, actual.step_minutes, out)
}

/// Centered moving average with a window shrunk at the edges.
pub fn centered_moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let n = values.len();
    if window <= 1 || n == 0 {
        return values.to_vec();
    }
    let half = window / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in values {
        acc += v;
        prefix.push(acc);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Minute of day of a timestamp.
pub fn minute_of_day(t: NaiveDateTime) -> u32 {
    t.hour() * 60 + t.minute()
}
