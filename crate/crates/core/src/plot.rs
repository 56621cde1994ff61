//! Frontier scatter plot as a self-contained SVG.
//!
//! Input is a frontier CSV with at least the columns `alpha`, `infeasibility`
//! and `regret`. Rows are grouped by `(model, alpha)` and each group becomes
//! one marker at its mean infeasibility and mean regret. Rows whose metrics
//! are empty (failed runs, no feasible instance) are skipped.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PAD: f64 = 0.05;
const TICKS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    /// Empty when the CSV has no `model` column.
    pub model: String,
    pub alpha: Option<f64>,
    pub infeasibility: f64,
    pub regret: f64,
}

impl Marker {
    fn is_baseline(&self) -> bool {
        self.alpha.is_none()
    }

    fn label(&self) -> String {
        match self.alpha {
            Some(a) => format!("α={a}"),
            None if self.model.is_empty() => "baseline".to_string(),
            None => self.model.clone(),
        }
    }
}

/// Axis range `[lo, hi]` covering the data with 5% padding on each side.
pub fn padded_range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = hi - lo;
    if span > 0.0 {
        (lo - PAD * span, hi + PAD * span)
    } else {
        let half = if lo == 0.0 { 0.5 } else { 0.5 * lo.abs() };
        (lo - half, hi + half)
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn parse_cell(path: &Path, row: usize, name: &str, cell: &str) -> Result<Option<f64>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>().map(Some).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        row,
        detail: format!("column {name}: {e}"),
    })
}

/// Group frontier rows into plot markers.
pub fn read_markers(path: &Path) -> Result<Vec<Marker>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let required = ["alpha", "infeasibility", "regret"];
    let missing: Vec<&str> = required
        .iter()
        .copied()
        .filter(|c| column(&headers, c).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: 0,
            detail: format!("missing required column(s): {}", missing.join(", ")),
        });
    }
    let (ia, ii, ir) = (
        column(&headers, "alpha").unwrap_or_default(),
        column(&headers, "infeasibility").unwrap_or_default(),
        column(&headers, "regret").unwrap_or_default(),
    );
    let im = column(&headers, "model");

    // (model, alpha bits) -> (infeasibility values, regret values, alpha)
    type Group = (Vec<f64>, Vec<f64>, Option<f64>);
    let mut groups: BTreeMap<(String, Option<u64>), Group> = BTreeMap::new();
    let mut order = Vec::new();
    let mut rows = 0usize;
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = k + 1;
        rows += 1;
        let get = |i: usize| record.get(i).unwrap_or("");
        let model = im.map(|i| get(i).trim().to_string()).unwrap_or_default();
        let alpha = parse_cell(path, row, "alpha", get(ia))?;
        let inf = parse_cell(path, row, "infeasibility", get(ii))?;
        let reg = parse_cell(path, row, "regret", get(ir))?;
        let key = (model, alpha.map(f64::to_bits));
        let entry = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (Vec::new(), Vec::new(), alpha)
        });
        entry.0.extend(inf);
        entry.1.extend(reg);
    }
    if rows == 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: 0,
            detail: "no data rows".into(),
        });
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let markers: Vec<Marker> = order
        .into_iter()
        .filter_map(|key| {
            let (inf, reg, alpha) = &groups[&key];
            (!inf.is_empty() && !reg.is_empty()).then(|| Marker {
                model: key.0.clone(),
                alpha: *alpha,
                infeasibility: mean(inf),
                regret: mean(reg),
            })
        })
        .collect();
    if markers.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: 0,
            detail: "no row has both infeasibility and regret".into(),
        });
    }
    Ok(markers)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render markers as an SVG document.
pub fn render_svg(markers: &[Marker]) -> String {
    let (x0, x1) = padded_range(markers.iter().map(|m| m.infeasibility));
    let (y0, y1) = padded_range(markers.iter().map(|m| m.regret));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for t in 0..=TICKS {
        let f = t as f64 / TICKS as f64;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{xv:.3}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.3}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">infeasibility ratio</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">mean normalized regret</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for m in markers {
        let (px, py) = (sx(m.infeasibility), sy(m.regret));
        if m.is_baseline() {
            let _ = writeln!(
                s,
                r#"<rect class="marker baseline" x="{:.2}" y="{:.2}" width="10" height="10" fill="firebrick"/>"#,
                px - 5.0,
                py - 5.0
            );
        } else {
            let _ = writeln!(
                s,
                r#"<circle class="marker" cx="{px:.2}" cy="{py:.2}" r="5" fill="steelblue"/>"#
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            px + 8.0,
            py - 6.0,
            escape(&m.label())
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Read a frontier CSV and write its scatter plot. Nothing is written on error.
pub fn plot_frontier(csv_path: &Path, svg_path: &Path) -> Result<usize> {
    let markers = read_markers(csv_path)?;
    std::fs::write(svg_path, render_svg(&markers)).map_err(|e| Error::io(svg_path, e))?;
    Ok(markers.len())
}
