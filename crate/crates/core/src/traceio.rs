//! Load/price trace files and the synthetic office-building generator.
//!
//! Files hold `timestamp,value` rows with an optional header line.

use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simenv::{Trace, Traces, SLOTS_PER_DAY};

const TS_FORMATS: [&str; 4] = ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M"];
const TS_OUT: &str = "%Y-%m-%d %H:%M:%S";

/// Hourly values starting at `start`.
#[derive(Clone, Debug, PartialEq)]
pub struct HourlySeries {
    pub start: NaiveDateTime,
    pub values: Vec<f64>,
}

/// Aligned traces with the wall-clock time of slot 0.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSet {
    pub start: NaiveDateTime,
    pub traces: Traces,
}

fn parse_ts(s: &str) -> Option<NaiveDateTime> {
    TS_FORMATS.iter().find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

fn hour_floor(t: NaiveDateTime) -> NaiveDateTime {
    t.date().and_hms_opt(t.hour(), 0, 0).expect("valid hour")
}

/// Parses rows and mean-aggregates them into hourly buckets.
pub fn parse_series(text: &str) -> Result<HourlySeries> {
    let mut buckets: Vec<(NaiveDateTime, f64, usize)> = Vec::new();
    let mut last: Option<NaiveDateTime> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: lineno, message };
        let (ts, val) = line
            .split_once(',')
            .ok_or_else(|| parse_err(format!("expected 'timestamp,value', got '{line}'")))?;
        let Some(ts) = parse_ts(ts.trim()) else {
            if buckets.is_empty() && last.is_none() {
                continue; // header
            }
            return Err(parse_err(format!("bad timestamp '{}'", ts.trim())));
        };
        let v: f64 = val
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad value '{}'", val.trim())))?;
        if !v.is_finite() {
            return Err(parse_err(format!("non-finite value '{}'", val.trim())));
        }
        if last.is_some_and(|p| ts <= p) {
            return Err(parse_err("timestamps must strictly increase".into()));
        }
        last = Some(ts);
        let hour = hour_floor(ts);
        match buckets.last_mut() {
            Some((h, sum, n)) if *h == hour => {
                *sum += v;
                *n += 1;
            }
            Some((h, _, _)) if hour - *h > chrono::Duration::hours(1) => {
                return Err(Error::Alignment(format!("gap from {h} to {hour} at line {lineno}")));
            }
            _ => buckets.push((hour, v, 1)),
        }
    }
    let start = buckets
        .first()
        .map(|b| b.0)
        .ok_or_else(|| Error::Parse {
            line: 0,
            message: "no data rows".into(),
        })?;
    Ok(HourlySeries {
        start,
        values: buckets.into_iter().map(|(_, s, n)| s / n as f64).collect(),
    })
}

/// Requires identical hourly coverage, then drops hours before the first midnight.
pub fn align(load: &HourlySeries, price: &HourlySeries) -> Result<TraceSet> {
    if load.start != price.start || load.values.len() != price.values.len() {
        let end = |s: &HourlySeries| s.start + chrono::Duration::hours(s.values.len() as i64);
        return Err(Error::Alignment(format!(
            "load covers {}..{}, price covers {}..{}",
            load.start,
            end(load),
            price.start,
            end(price)
        )));
    }
    let skip = (SLOTS_PER_DAY - load.start.hour() as usize) % SLOTS_PER_DAY;
    if skip >= load.values.len() {
        return Err(Error::Alignment("no complete day after the first midnight".into()));
    }
    let start = load.start + chrono::Duration::hours(skip as i64);
    let traces = Traces::new(
        Trace::new_load(load.values[skip..].to_vec())?,
        Trace::new(price.values[skip..].to_vec())?,
    )?;
    Ok(TraceSet { start, traces })
}

pub fn ingest_traces(load_csv: &Path, price_csv: &Path) -> Result<TraceSet> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())));
    align(&parse_series(&read(load_csv)?)?, &parse_series(&read(price_csv)?)?)
}

/// Six significant digits, shortest form.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{}", if v == 0.0 { 0.0 } else { v });
    }
    let rounded: f64 = format!("{v:.5e}").parse().expect("formatted float");
    format!("{rounded}")
}

pub fn series_to_csv(start: NaiveDateTime, values: &[f64]) -> String {
    let mut out = String::from("timestamp,value\n");
    for (i, v) in values.iter().enumerate() {
        let ts = start + chrono::Duration::hours(i as i64);
        out.push_str(&format!("{},{}\n", ts.format(TS_OUT), format_sig6(*v)));
    }
    out
}

/// Slot 0 of generated traces: midnight on a Monday.
pub fn synthetic_start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2024, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date")
}

/// Shape of the generated office load and price curves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProfile {
    pub base_load_kw: f64,
    pub peak_load_kw: f64,
    pub load_peak_hours: [f64; 2],
    pub load_peak_width_h: f64,
    /// Relative standard deviation of the load noise.
    pub load_noise: f64,
    pub base_price: f64,
    /// Price at the afternoon peak relative to `base_price`.
    pub price_peak_multiplier: f64,
    pub price_peak_hour: f64,
    pub price_peak_width_h: f64,
    pub price_noise: f64,
}

impl Default for SyntheticProfile {
    fn default() -> Self {
        Self {
            base_load_kw: 200.0,
            peak_load_kw: 650.0,
            load_peak_hours: [10.0, 15.0],
            load_peak_width_h: 1.5,
            load_noise: 0.05,
            base_price: 0.03,
            price_peak_multiplier: 2.0,
            price_peak_hour: 16.0,
            price_peak_width_h: 2.5,
            price_noise: 0.05,
        }
    }
}

impl SyntheticProfile {
    /// Deterministic load for an hour of the day.
    pub fn load_shape(&self, hour: f64) -> f64 {
        let bump = self
            .load_peak_hours
            .iter()
            .map(|&c| bell(hour, c, self.load_peak_width_h))
            .fold(0.0, f64::max);
        self.base_load_kw + (self.peak_load_kw - self.base_load_kw) * bump
    }

    pub fn price_shape(&self, hour: f64) -> f64 {
        self.base_price * (1.0 + (self.price_peak_multiplier - 1.0) * bell(hour, self.price_peak_hour, self.price_peak_width_h))
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.base_load_kw > 0.0
            && self.peak_load_kw >= self.base_load_kw
            && self.base_price > 0.0
            && self.price_peak_multiplier >= 1.0
            && self.load_peak_width_h > 0.0
            && self.price_peak_width_h > 0.0
            && self.load_noise >= 0.0
            && self.price_noise >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("invalid synthetic trace profile".into()))
        }
    }
}

fn bell(x: f64, centre: f64, width: f64) -> f64 {
    (-(x - centre).powi(2) / (2.0 * width * width)).exp()
}

/// Noisy daily profiles for `days` days; every value stays strictly positive.
pub fn generate_synthetic_traces<R: Rng + ?Sized>(rng: &mut R, days: usize, profile: &SyntheticProfile) -> Result<Traces> {
    if days == 0 {
        return Err(Error::Config("days must be at least 1".into()));
    }
    profile.validate()?;
    let n = days * SLOTS_PER_DAY;
    let mut load = Vec::with_capacity(n);
    let mut price = Vec::with_capacity(n);
    for t in 0..n {
        let h = (t % SLOTS_PER_DAY) as f64;
        let zl: f64 = rng.sample(StandardNormal);
        let zp: f64 = rng.sample(StandardNormal);
        let l = profile.load_shape(h) * (1.0 + profile.load_noise * zl);
        let p = profile.price_shape(h) * (1.0 + profile.price_noise * zp);
        load.push(l.max(0.1 * profile.base_load_kw));
        price.push(p.max(0.1 * profile.base_price));
    }
    Traces::new(Trace::new_load(load)?, Trace::new(price)?)
}

/// [`generate_synthetic_traces`] driven by a dedicated stream of `seed`.
pub fn synthetic_traces_seeded(seed: u64, days: usize, profile: &SyntheticProfile) -> Result<Traces> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(TRACE_STREAM);
    generate_synthetic_traces(&mut rng, days, profile)
}

const TRACE_STREAM: u64 = 16;

/// Flat traces, handy for controlled experiments.
pub fn constant_traces(days: usize, load_kw: f64, price: f64) -> Result<Traces> {
    let n = days * SLOTS_PER_DAY;
    Traces::new(Trace::new_load(vec![load_kw; n])?, Trace::new(vec![price; n])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quarter_hours_average() {
        let text = "timestamp,value\n2024-01-01 00:00:00,100\n2024-01-01 00:15:00,110\n2024-01-01 00:30:00,90\n2024-01-01 00:45:00,100\n2024-01-01 01:00:00,5\n";
        let s = parse_series(text).unwrap();
        assert_eq!(s.values, vec![100.0, 5.0]);
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = "timestamp,value\n2024-01-01 00:00:00,1\n2024-01-01 01:00:00,abc\n";
        assert!(matches!(parse_series(text), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn gap_is_rejected() {
        let text = "2024-01-01 00:00:00,1\n2024-01-01 02:00:00,1\n";
        assert!(matches!(parse_series(text), Err(Error::Alignment(_))));
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(123.456789), "123.457");
        assert_eq!(format_sig6(0.03000004), "0.03");
        assert_eq!(format_sig6(650.0), "650");
        assert_eq!(format_sig6(0.0), "0");
    }

    #[test]
    fn noiseless_profile_is_periodic() {
        let profile = SyntheticProfile {
            load_noise: 0.0,
            price_noise: 0.0,
            ..Default::default()
        };
        let tr = generate_synthetic_traces(&mut ChaCha8Rng::seed_from_u64(0), 3, &profile).unwrap();
        for t in 24..72 {
            assert_eq!(tr.load.values()[t], tr.load.values()[t - 24]);
            assert_eq!(tr.price.values()[t], tr.price.values()[t - 24]);
        }
        assert!((tr.load.values()[10] - 650.0).abs() < 1e-9);
        assert!((tr.load.values()[3] - 200.0).abs() < 0.05);
    }
}
