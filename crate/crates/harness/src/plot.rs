//! Standalone SVG line plots of sweep, ground-truth and windowed CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use bred_core::stats::MeanStd;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn schema(msg: impl Into<String>) -> HarnessError {
    HarnessError::Schema(msg.into())
}

struct Table {
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn col(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| schema(format!("missing column `{name}`")))
    }

    fn has(&self, name: &str) -> bool {
        self.header.iter().any(|h| h == name)
    }

    fn num(&self, row: &csv::StringRecord, col: usize, line: usize) -> Result<Option<f64>> {
        let s = row.get(col).unwrap_or("");
        if s.is_empty() {
            return Ok(None);
        }
        s.parse::<f64>()
            .map(Some)
            .map_err(|_| schema(format!("row {line}: `{s}` is not a number")))
    }
}

/// Groups `(name, x, y, err)` tuples into series, keeping first-seen order.
fn group(entries: Vec<(String, f64, f64, f64)>) -> Vec<Series> {
    let mut series: Vec<Series> = Vec::new();
    for (name, x, y, err) in entries {
        let p = Point { x, y, err };
        match series.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push(p),
            None => series.push(Series {
                name,
                points: vec![p],
            }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.x.total_cmp(&b.x));
    }
    series
}

/// Reads one of the harness CSV schemas into a figure.
pub fn figure_from_csv(text: &str) -> Result<Figure> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| schema(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Err(schema("CSV has no data rows"));
    }
    let table = Table { header, rows };

    if table.has("mean_abs_error") {
        let (m, t, y, e) = (
            table.col("method")?,
            table.col("T")?,
            table.col("mean_abs_error")?,
            table.col("std_err")?,
        );
        let mut entries = Vec::new();
        for (i, row) in table.rows.iter().enumerate() {
            let (Some(x), Some(v)) = (table.num(row, t, i + 2)?, table.num(row, y, i + 2)?) else {
                continue;
            };
            let err = table
                .num(row, e, i + 2)?
                .filter(|v| v.is_finite())
                .unwrap_or(0.0);
            entries.push((row[m].to_string(), x, v, err));
        }
        return Ok(error_figure(group(entries)));
    }

    if table.has("abs_error") {
        let (m, t, a) = (
            table.col("method")?,
            table.col("T")?,
            table.col("abs_error")?,
        );
        let mut cells: BTreeMap<(usize, String, u64), Vec<f64>> = BTreeMap::new();
        let mut order: Vec<String> = Vec::new();
        for (i, row) in table.rows.iter().enumerate() {
            let name = row[m].to_string();
            if !order.contains(&name) {
                order.push(name.clone());
            }
            let Some(x) = table.num(row, t, i + 2)? else {
                continue;
            };
            if let Some(v) = table.num(row, a, i + 2)? {
                let rank = order.iter().position(|n| *n == name).unwrap_or(0);
                cells.entry((rank, name, x.to_bits())).or_default().push(v);
            }
        }
        let entries = cells
            .into_iter()
            .map(|((_, name, xb), vals)| {
                let s = MeanStd::of(&vals);
                let err = if s.std_err().is_finite() {
                    s.std_err()
                } else {
                    0.0
                };
                (name, f64::from_bits(xb), s.mean, err)
            })
            .collect();
        return Ok(error_figure(group(entries)));
    }

    if table.has("truth") && table.has("replay_est") {
        let (t, truth, r, b) = (
            table.col("T_i")?,
            table.col("truth")?,
            table.col("replay_est")?,
            table.col("bred_est")?,
        );
        let mut entries = Vec::new();
        for (i, row) in table.rows.iter().enumerate() {
            let line = i + 2;
            let (Some(x), Some(g)) = (table.num(row, t, line)?, table.num(row, truth, line)?)
            else {
                continue;
            };
            if let Some(v) = table.num(row, r, line)? {
                entries.push(("replay".to_string(), x, v - g, 0.0));
            }
            if let Some(v) = table.num(row, b, line)? {
                entries.push(("bred".to_string(), x, v - g, 0.0));
            }
        }
        return Ok(Figure {
            title: "Estimated minus true CTR per window".into(),
            x_label: "window size T_i".into(),
            y_label: "estimate - truth".into(),
            series: group(entries),
        });
    }

    if table.has("algo") && table.has("mean") {
        let (a, t, y, e) = (
            table.col("algo")?,
            table.col("T")?,
            table.col("mean")?,
            table.col("std_err")?,
        );
        let mut entries = Vec::new();
        for (i, row) in table.rows.iter().enumerate() {
            let (Some(x), Some(v)) = (table.num(row, t, i + 2)?, table.num(row, y, i + 2)?) else {
                continue;
            };
            entries.push((
                row[a].to_string(),
                x,
                v,
                table.num(row, e, i + 2)?.unwrap_or(0.0),
            ));
        }
        return Ok(Figure {
            title: "CTR of online play against the model".into(),
            x_label: "T".into(),
            y_label: "CTR".into(),
            series: group(entries),
        });
    }

    Err(schema(format!(
        "unrecognized columns: {}",
        table.header.join(",")
    )))
}

fn error_figure(series: Vec<Series>) -> Figure {
    Figure {
        title: "Mean absolute error of the estimated CTR".into(),
        x_label: "dataset size T".into(),
        y_label: "mean |estimate - truth|".into(),
        series,
    }
}

/// Reads `csv_path` and writes an SVG plot to `out_path`.
pub fn emit_plot(csv_path: impl AsRef<Path>, out_path: impl AsRef<Path>) -> Result<()> {
    let text = fs::read_to_string(csv_path)?;
    let fig = figure_from_csv(&text)?;
    fs::write(out_path, render_svg(&fig))?;
    Ok(())
}

const W: f64 = 720.0;
const H: f64 = 450.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.1e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').to_string()
    }
}

/// Renders a figure. Output depends only on the figure's contents.
pub fn render_svg(fig: &Figure) -> String {
    let points = fig.series.iter().flat_map(|s| &s.points);
    let xs: Vec<f64> = points.clone().map(|p| p.x).collect();
    let (mut x_min, mut x_max) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let (mut y_min, mut y_max) = points
        .clone()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.y - p.err), b.max(p.y + p.err))
        });
    let log_x = x_min > 0.0 && x_max / x_min >= 10.0;
    if y_min > 0.0 && y_min < 0.5 * y_max {
        y_min = 0.0;
    }
    if y_max == y_min {
        y_max += 0.5 * y_max.abs().max(1e-3);
        y_min -= 0.5 * y_min.abs().max(1e-3);
    }
    let pad = 0.05 * (y_max - y_min);
    y_max += pad;
    if y_min != 0.0 {
        y_min -= pad;
    }
    if x_max == x_min {
        x_max += x_max.abs().max(1.0) * 0.5;
        x_min -= x_min.abs().max(1.0) * 0.5;
        if log_x && x_min <= 0.0 {
            x_min = x_max / 10.0;
        }
    }
    let tx = |x: f64| {
        let (a, b, v) = if log_x {
            (x_min.ln(), x_max.ln(), x.ln())
        } else {
            (x_min, x_max, x)
        };
        let span = if b > a { b - a } else { 1.0 };
        LEFT + 20.0 + (v - a) / span * (W - LEFT - RIGHT - 40.0)
    };
    let ty = |y: f64| TOP + (y_max - y) / (y_max - y_min) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        escape(&fig.title)
    );
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(
        s,
        r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );

    for i in 0..=5 {
        let v = y_min + (y_max - y_min) * i as f64 / 5.0;
        let y = ty(v);
        let _ = writeln!(
            s,
            r##"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#dddddd"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            y + 4.0,
            tick_label(v)
        );
    }
    if y_min < 0.0 && y_max > 0.0 {
        let y = ty(0.0);
        let _ = writeln!(
            s,
            r##"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#888888" stroke-dasharray="4 3"/>"##
        );
    }
    let mut ticks = xs.clone();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    if ticks.len() > 12 {
        let step = ticks.len().div_ceil(12);
        ticks = ticks.into_iter().step_by(step).collect();
    }
    for v in ticks {
        let x = tx(v);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y1:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            y1 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y1 + 18.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}{}</text>"#,
        (x0 + x1) / 2.0,
        H - 15.0,
        escape(&fig.x_label),
        if log_x { " (log scale)" } else { "" }
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(&fig.y_label)
    );

    for (i, series) in fig.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = series
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", tx(p.x), ty(p.y)))
            .collect();
        if path.len() > 1 {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                path.join(" ")
            );
        }
        for p in &series.points {
            let (x, y) = (tx(p.x), ty(p.y));
            if p.err > 0.0 {
                let (ya, yb) = (ty(p.y + p.err), ty(p.y - p.err));
                let _ = writeln!(
                    s,
                    r#"<line x1="{x:.2}" y1="{ya:.2}" x2="{x:.2}" y2="{yb:.2}" stroke="{color}"/>"#
                );
                for yy in [ya, yb] {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="{color}"/>"#,
                        x - 4.0,
                        x + 4.0
                    );
                }
            }
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = W - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 25.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 32.0,
            ly + 4.0,
            escape(&series.name)
        );
    }
    s.push_str("</svg>\n");
    s
}
