use std::fmt::{self, Write as _};
use std::io::Read;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::num::round_half_away;
use crate::pv::{array_power, SpeDerate};
use crate::solar::day_profile;
use crate::{ArraySpec, AtmosphereParams, GeoLocation};

/// `round(|predicted − measured| / predicted · 100)`, ties away from zero.
pub fn percent_difference(predicted: f64, measured: f64) -> Result<i64> {
    if !(predicted > 0.0 && predicted.is_finite()) {
        return Err(ModelError::domain("predicted", format!("{predicted} W must be > 0")));
    }
    if !measured.is_finite() {
        return Err(ModelError::domain("measured", format!("{measured} W is not finite")));
    }
    Ok(round_half_away((predicted - measured).abs() / predicted * 100.0))
}

/// Time-stamped array output readings from one day.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementSeries {
    pub samples: Vec<(NaiveTime, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementStats {
    pub window: Option<(NaiveTime, NaiveTime)>,
    pub average_w: f64,
    pub max_w: f64,
    pub time_of_max: Option<NaiveTime>,
}

fn parse_time(s: &str) -> Option<NaiveTime> {
    let s = s.trim();
    for f in ["%H:%M:%S", "%H:%M"] {
        if let Ok(t) = NaiveTime::parse_from_str(s, f) {
            return Some(t);
        }
    }
    for f in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, f) {
            return Some(t.time());
        }
    }
    None
}

fn bad_line(line: u64, detail: impl fmt::Display) -> ModelError {
    ModelError::domain("measurement csv", format!("line {line}: {detail}"))
}

impl MeasurementSeries {
    /// Reads `time_local,power_w` rows. Times are `HH:MM[:SS]`, optionally
    /// preceded by a date, and must increase.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| bad_line(1, e))?.clone();
        if header.iter().collect::<Vec<_>>() != ["time_local", "power_w"] {
            return Err(bad_line(
                1,
                format!("header must be time_local,power_w, found {}", header.iter().collect::<Vec<_>>().join(",")),
            ));
        }
        let mut samples: Vec<(NaiveTime, f64)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                bad_line(line, e)
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let t = parse_time(&rec[0]).ok_or_else(|| bad_line(line, format!("bad time '{}'", &rec[0])))?;
            let p: f64 = rec[1].parse().map_err(|_| bad_line(line, format!("bad power '{}'", &rec[1])))?;
            if !(p >= 0.0 && p.is_finite()) {
                return Err(bad_line(line, format!("power {p} must be >= 0")));
            }
            if let Some(&(prev, _)) = samples.last() {
                if t <= prev {
                    return Err(bad_line(line, format!("time {t} does not increase")));
                }
            }
            samples.push((t, p));
        }
        Ok(MeasurementSeries { samples })
    }

    pub fn stats(&self) -> Result<MeasurementStats> {
        let (first, last) = match (self.samples.first(), self.samples.last()) {
            (Some(f), Some(l)) => (f.0, l.0),
            _ => return Err(ModelError::domain("measurements", "empty series")),
        };
        let mut best = self.samples[0];
        let mut sum = 0.0;
        for &(t, p) in &self.samples {
            sum += p;
            if p > best.1 {
                best = (t, p);
            }
        }
        Ok(MeasurementStats {
            window: Some((first, last)),
            average_w: sum / self.samples.len() as f64,
            max_w: best.1,
            time_of_max: Some(best.0),
        })
    }

    /// Whether the samples span `[start, end]`.
    pub fn covers(&self, start: NaiveTime, end: NaiveTime) -> bool {
        match (self.samples.first(), self.samples.last()) {
            (Some(f), Some(l)) => f.0 <= start && l.0 >= end,
            _ => false,
        }
    }
}

/// Model side of the comparison: irradiance statistics and the array
/// output they imply, before any derate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionSummary {
    pub window: (NaiveTime, NaiveTime),
    pub average_ghi: f64,
    pub max_ghi: f64,
    pub time_of_max: NaiveTime,
    pub continuous_output_w: f64,
    pub max_output_w: f64,
}

impl PredictionSummary {
    /// Clear-sky day statistics at one-minute resolution.
    pub fn from_model(
        location: &GeoLocation,
        date: NaiveDate,
        atmosphere: &AtmosphereParams,
        array: &ArraySpec,
        window: (NaiveTime, NaiveTime),
    ) -> Result<Self> {
        let (_, stats) = day_profile(location, date, atmosphere, window, 60)?;
        Ok(PredictionSummary {
            window,
            average_ghi: stats.average_ghi,
            max_ghi: stats.max_ghi,
            time_of_max: stats.time_of_max,
            continuous_output_w: array_power(stats.average_ghi, array, SpeDerate::none()),
            max_output_w: array_power(stats.max_ghi, array, SpeDerate::none()),
        })
    }
}

/// One report cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Number(i64),
    Text(String),
    Blank,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Number(n) => write!(f, "{n}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Blank => f.write_str("-"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub predicted: Cell,
    pub measured: Cell,
    pub percent_difference: Cell,
}

pub type NumericRow<'a> = (&'a str, Option<i64>, Option<i64>, Option<i64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub columns: [String; 3],
    pub rows: Vec<ReportRow>,
}

/// `0844a`-style clock label.
fn clock_compact(t: NaiveTime) -> String {
    let half = if t.hour() < 12 { 'a' } else { 'p' };
    format!("{:02}{:02}{half}", t.hour(), t.minute())
}

/// `1:19PM`-style clock label.
fn clock_12h(t: NaiveTime) -> String {
    let (pm, h) = t.hour12();
    format!("{h}:{:02}{}", t.minute(), if pm { "PM" } else { "AM" })
}

fn window_label((a, b): (NaiveTime, NaiveTime)) -> String {
    format!("{} to {}", clock_compact(a), clock_compact(b))
}

fn watts(x: f64) -> Cell {
    Cell::Number(round_half_away(x))
}

impl ComparisonReport {
    /// Builds the report. Derated predictions and derated measurements use
    /// the same factor; each percentage compares the displayed derated
    /// prediction against the raw measurement.
    pub fn build(
        prediction: &PredictionSummary,
        measured: Option<&MeasurementStats>,
        derates: &[SpeDerate<f64>],
    ) -> Result<Self> {
        let mut rows = vec![
            ReportRow {
                label: "Time Period of Measured Solar-Battery Charging".into(),
                predicted: Cell::Text(window_label(prediction.window)),
                measured: measured.and_then(|m| m.window).map_or(Cell::Blank, |w| Cell::Text(window_label(w))),
                percent_difference: Cell::Blank,
            },
            ReportRow {
                label: "Average Global Solar Radiation (W/m²)".into(),
                predicted: watts(prediction.average_ghi),
                measured: Cell::Blank,
                percent_difference: Cell::Blank,
            },
            ReportRow {
                label: "Maximum Global Solar Radiation (W/m²)".into(),
                predicted: watts(prediction.max_ghi),
                measured: Cell::Blank,
                percent_difference: Cell::Blank,
            },
            ReportRow {
                label: "Time of Max Radiation".into(),
                predicted: Cell::Text(clock_12h(prediction.time_of_max)),
                measured: measured.and_then(|m| m.time_of_max).map_or(Cell::Blank, |t| Cell::Text(clock_12h(t))),
                percent_difference: Cell::Blank,
            },
        ];

        let blocks = [
            ("Continuous PV Array Output (Watts)", prediction.continuous_output_w, measured.map(|m| m.average_w)),
            ("Maximum PV Array Output (Watts)", prediction.max_output_w, measured.map(|m| m.max_w)),
        ];
        let mut levels = vec![SpeDerate::none()];
        levels.extend(derates.iter().copied().filter(|d| d.fraction() > 0.0));
        for (title, predicted, raw) in blocks {
            for d in &levels {
                let label = if d.fraction() == 0.0 {
                    title.to_string()
                } else {
                    format!("Including {}% Decrease due to SPE (W)", round_half_away(d.fraction() * 100.0))
                };
                let shown = round_half_away(predicted * d.factor());
                let (measured_cell, pct) = match raw {
                    Some(m) => (watts(m * d.factor()), Cell::Number(percent_difference(shown as f64, m)?)),
                    None => (Cell::Blank, Cell::Blank),
                };
                rows.push(ReportRow {
                    label,
                    predicted: Cell::Number(shown),
                    measured: measured_cell,
                    percent_difference: pct,
                });
            }
        }

        Ok(ComparisonReport { columns: ["Predicted".into(), "Measured".into(), "% Difference".into()], rows })
    }

    /// The array-output rows as (label, predicted, measured, percent).
    pub fn numeric_rows(&self) -> Vec<NumericRow<'_>> {
        let n = |c: &Cell| match c {
            Cell::Number(v) => Some(*v),
            _ => None,
        };
        self.rows
            .iter()
            .filter(|r| r.label.contains("PV Array Output") || r.label.starts_with("Including"))
            .map(|r| (r.label.as_str(), n(&r.predicted), n(&r.measured), n(&r.percent_difference)))
            .collect()
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let label_w = self.rows.iter().map(|r| r.label.chars().count()).max().unwrap_or(0);
        let cells: Vec<[String; 3]> = self
            .rows
            .iter()
            .map(|r| [r.predicted.to_string(), r.measured.to_string(), r.percent_difference.to_string()])
            .collect();
        let mut widths = [0usize; 3];
        for (i, w) in widths.iter_mut().enumerate() {
            *w = cells.iter().map(|c| c[i].len()).chain([self.columns[i].len()]).max().unwrap_or(0);
        }
        let mut out = String::new();
        let pad = |s: &str, w: usize| format!("{s}{}", " ".repeat(w.saturating_sub(s.chars().count())));
        let _ = writeln!(
            out,
            "{}  {:>w0$}  {:>w1$}  {:>w2$}",
            pad("", label_w),
            self.columns[0],
            self.columns[1],
            self.columns[2],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2]
        );
        for (r, c) in self.rows.iter().zip(&cells) {
            let _ = writeln!(
                out,
                "{}  {:>w0$}  {:>w1$}  {:>w2$}",
                pad(&r.label, label_w),
                c[0],
                c[1],
                c[2],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2]
            );
        }
        out
    }
}

/// Clear-sky prediction over `window` compared against a measured series.
pub fn replay_solar_experiment(
    location: &GeoLocation,
    date: NaiveDate,
    atmosphere: &AtmosphereParams,
    array: &ArraySpec,
    window: (NaiveTime, NaiveTime),
    measured: &MeasurementSeries,
    derates: &[SpeDerate<f64>],
) -> Result<ComparisonReport> {
    let stats = measured.stats()?;
    let prediction = PredictionSummary::from_model(location, date, atmosphere, array, window)?;
    ComparisonReport::build(&prediction, Some(&stats), derates)
}
