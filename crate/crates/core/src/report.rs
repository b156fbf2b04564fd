//! Output files: annual aggregates, indicator curves, variation tables,
//! JSON summaries and SVG line charts.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::engine::{AnnualAggregates, SimulationResult};
use crate::error::{Error, Result};
use crate::sizing::{IndicatorCurve, SensitivityReport};

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        line: e.position().map(|p| p.line()).unwrap_or(0),
        msg: e.to_string(),
    }
}

const ANNUAL_HEADER: [&str; 18] = [
    "year",
    "energy_delivered_mwh",
    "energy_injected_mwh",
    "peak_window_energy_mwh",
    "penalized_deviation_mwh",
    "fuel_liters",
    "genset_starts",
    "genset_hours",
    "pv_curtailed_mwh",
    "battery_throughput_mwh",
    "unserved_mwh",
    "load_mwh",
    "pv_available_mwh",
    "genset_energy_mwh",
    "battery_charge_mwh",
    "battery_discharge_mwh",
    "capacity_fade",
    "announce_warnings",
];

fn annual_row(year: usize, a: &AnnualAggregates) -> Vec<String> {
    let f = |v: f64| v.to_string();
    vec![
        year.to_string(),
        f(a.energy_delivered_mwh),
        f(a.energy_injected_mwh),
        f(a.peak_window_energy_mwh),
        f(a.penalized_deviation_mwh),
        f(a.fuel_liters),
        a.genset_starts.to_string(),
        f(a.genset_hours),
        f(a.pv_curtailed_mwh),
        f(a.battery_throughput_mwh),
        f(a.unserved_mwh),
        f(a.load_mwh),
        f(a.pv_available_mwh),
        f(a.genset_energy_mwh),
        f(a.battery_charge_mwh),
        f(a.battery_discharge_mwh),
        f(a.capacity_fade),
        a.announce_warnings.to_string(),
    ]
}

/// One row per simulated (or extrapolated) year, 1-based.
pub fn write_annual_csv(path: &Path, result: &SimulationResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(ANNUAL_HEADER)
        .map_err(|e| csv_err(path, e))?;
    for (i, a) in result.years.iter().enumerate() {
        w.write_record(annual_row(i + 1, a))
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads back the file written by [`write_annual_csv`].
pub fn read_annual_csv(path: &Path) -> Result<Vec<AnnualAggregates>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = i as u64 + 2;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Csv {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("bad `{}`", ANNUAL_HEADER[k]),
                })
        };
        out.push(AnnualAggregates {
            energy_delivered_mwh: num(1)?,
            energy_injected_mwh: num(2)?,
            peak_window_energy_mwh: num(3)?,
            penalized_deviation_mwh: num(4)?,
            fuel_liters: num(5)?,
            genset_starts: num(6)? as u32,
            genset_hours: num(7)?,
            pv_curtailed_mwh: num(8)?,
            battery_throughput_mwh: num(9)?,
            unserved_mwh: num(10)?,
            load_mwh: num(11)?,
            pv_available_mwh: num(12)?,
            genset_energy_mwh: num(13)?,
            battery_charge_mwh: num(14)?,
            battery_discharge_mwh: num(15)?,
            capacity_fade: num(16)?,
            announce_warnings: num(17)? as u32,
        });
    }
    Ok(out)
}

/// `size_kwh,<indicator>` rows. Values use the shortest exact decimal form,
/// so identical curves give identical bytes.
pub fn write_curve_csv(path: &Path, curve: &IndicatorCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["size_kwh", curve.indicator.name()])
        .map_err(|e| csv_err(path, e))?;
    for (s, v) in &curve.points {
        w.write_record([s.to_string(), v.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads `(size, value)` pairs from a curve file.
pub fn read_curve_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            let bad = || Error::Csv {
                path: path.to_path_buf(),
                line: i as u64 + 2,
                msg: "expected two numbers".into(),
            };
            let s = rec.get(0).and_then(|x| x.parse().ok()).ok_or_else(bad)?;
            let v = rec.get(1).and_then(|x| x.parse().ok()).ok_or_else(bad)?;
            Ok((s, v))
        })
        .collect()
}

/// Variation table: size, one column per scenario, then the change of each
/// scenario against the first in percent.
pub fn write_deltas_csv(path: &Path, report: &SensitivityReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header = vec!["size_kwh".to_string()];
    header.extend(report.scenarios.iter().map(|(n, _)| n.clone()));
    let base = &report.scenarios[0].0;
    header.extend(
        report.scenarios[1..]
            .iter()
            .map(|(n, _)| format!("variation_pct_{n}_vs_{base}")),
    );
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (i, size) in report.sizes.iter().enumerate() {
        let mut row = vec![size.to_string()];
        row.extend(
            report
                .scenarios
                .iter()
                .map(|(_, o)| o.curve.points[i].1.to_string()),
        );
        row.extend(report.deltas_pct.iter().map(|d| d[i].to_string()));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

/// A named line for [`line_chart_svg`].
pub struct Series<'a> {
    pub name: &'a str,
    pub points: &'a [(f64, f64)],
}

fn nice_ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let span = (hi - lo).max(f64::EPSILON);
    let raw = span / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= n as f64)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() * step;
    (0..)
        .map(|k| first + k as f64 * step)
        .take_while(|v| *v <= hi + step * 1e-9)
        .collect()
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1e4 {
        format!("{:.0}k", v / 1e3)
    } else if v.fract().abs() < 1e-9 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Self-contained SVG line chart, optimum points marked with a circle.
pub fn line_chart_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    optima: &[(f64, f64)],
) -> String {
    let (w, h) = (720.0, 440.0);
    let (ml, mr, mt, mb) = (80.0, 160.0, 40.0, 60.0);
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    let pad = ((y1 - y0) * 0.08).max(y1.abs() * 0.01).max(1e-9);
    y0 -= pad;
    y1 += pad;
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        (ml + w - mr) / 2.0,
        escape(title)
    );
    for t in nice_ticks(y0, y1, 6) {
        let y = py(t);
        let _ = writeln!(
            s,
            r##"<line x1="{ml}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#e0e0e0"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            w - mr,
            ml - 6.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    for t in nice_ticks(x0, x1, 8) {
        let x = px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            h - mb,
            h - mb + 5.0,
            h - mb + 20.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<polyline points="{ml},{mt} {ml},{} {},{}" fill="none" stroke="black"/>"#,
        h - mb,
        w - mr,
        h - mb
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (ml + w - mr) / 2.0,
        h - 18.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (mt + h - mb) / 2.0,
        escape(y_label)
    );
    for (k, ser) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        for &(x, y) in ser.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{color}"/>"#,
                px(x),
                py(y)
            );
        }
        let ly = mt + 10.0 + 20.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{ly}" x2="{1}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{2}" y="{3}">{4}</text>"#,
            w - mr + 12.0,
            w - mr + 36.0,
            w - mr + 42.0,
            ly + 4.0,
            escape(ser.name)
        );
    }
    for &(x, y) in optima {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{:.1}" r="6" fill="none" stroke="black" stroke-width="1.5"/>"#,
            px(x),
            py(y)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Chart of a single indicator curve.
pub fn curve_svg(curve: &IndicatorCurve, title: &str) -> String {
    line_chart_svg(
        title,
        "battery size [kWh]",
        curve.indicator.label(),
        &[Series {
            name: curve.indicator.name(),
            points: &curve.points,
        }],
        &[curve.optimum],
    )
}
