//! SVG rendering of exposure maps and CDF files.
//!
//! Every `*.csv` in a run directory becomes a sibling `*.svg`: exposure maps as
//! heatmaps with the compliance contour, CDF files as step-line charts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::exposure::WORKING_LIMIT_MW_CM2;

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: no result CSV files found")]
    NoInputs(PathBuf),
    #[error("{0}: file has no data rows")]
    Empty(PathBuf),
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

const PANEL_W: f64 = 480.0;
const PANEL_H: f64 = 360.0;
const MARGIN: f64 = 60.0;

/// Perceptually ordered color stops (dark blue to yellow).
const STOPS: [(f64, [u8; 3]); 5] = [
    (0.0, [68, 1, 84]),
    (0.25, [59, 82, 139]),
    (0.5, [33, 145, 140]),
    (0.75, [94, 201, 98]),
    (1.0, [253, 231, 37]),
];

fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let k = STOPS
        .iter()
        .position(|(s, _)| *s >= t)
        .unwrap_or(STOPS.len() - 1)
        .max(1);
    let (t0, c0) = STOPS[k - 1];
    let (t1, c1) = STOPS[k];
    let f = (t - t0) / (t1 - t0);
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(c0[0], c1[0]),
        mix(c0[1], c1[1]),
        mix(c0[2], c1[2])
    )
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<Table, RenderError> {
    let text = fs::read_to_string(path).map_err(|e| RenderError::Io(path.to_path_buf(), e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| RenderError::Empty(path.to_path_buf()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    if rows.is_empty() {
        return Err(RenderError::Empty(path.to_path_buf()));
    }
    Ok(Table { header, rows })
}

fn num(path: &Path, line: usize, s: &str) -> Result<f64, RenderError> {
    s.trim().parse().map_err(|_| RenderError::Malformed {
        path: path.to_path_buf(),
        line,
        message: format!("not a number: {s:?}"),
    })
}

fn column(t: &Table, path: &Path, name: &str) -> Result<usize, RenderError> {
    t.header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| RenderError::Malformed {
            path: path.to_path_buf(),
            line: 1,
            message: format!("missing column {name:?}"),
        })
}

fn svg_open(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    )
}

/// Heatmap SVG for an exposure-map CSV, one panel per codebook.
pub fn heatmap_svg(path: &Path, threshold: f64) -> Result<String, RenderError> {
    let t = read_table(path)?;
    let (cx, cy, cv) = (
        column(&t, path, "x")?,
        column(&t, path, "y")?,
        column(&t, path, "power_density_mw_cm2")?,
    );
    let cb = t.header.iter().position(|h| h == "codebook");
    let mut panels: BTreeMap<String, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for (i, r) in t.rows.iter().enumerate() {
        let line = i + 2;
        let get = |c: usize| r.get(c).map(String::as_str).unwrap_or("");
        let key = cb.map_or(String::new(), |c| get(c).to_string());
        panels.entry(key).or_default().push((
            num(path, line, get(cx))?,
            num(path, line, get(cy))?,
            num(path, line, get(cv))?,
        ));
    }
    let vmax = t
        .rows
        .iter()
        .filter_map(|r| r.get(cv).and_then(|s| s.parse::<f64>().ok()))
        .fold(threshold, f64::max);

    let width = PANEL_W + 2.0 * MARGIN + 80.0;
    let height = panels.len() as f64 * (PANEL_H + MARGIN) + MARGIN;
    let mut s = svg_open(width, height);
    for (pi, (label, cells)) in panels.iter().enumerate() {
        let mut xs: Vec<f64> = cells.iter().map(|c| c.0).collect();
        let mut ys: Vec<f64> = cells.iter().map(|c| c.1).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        let (nx, ny) = (xs.len(), ys.len());
        let cw = PANEL_W / nx as f64;
        let ch = PANEL_H / ny as f64;
        let ox = MARGIN;
        let oy = MARGIN + pi as f64 * (PANEL_H + MARGIN);
        let idx = |v: f64, axis: &[f64]| axis.iter().position(|a| *a == v).unwrap_or(0);

        let _ = writeln!(s, "<g class=\"panel\" data-codebook=\"{label}\">");
        let _ = writeln!(
            s,
            "<text x=\"{ox}\" y=\"{}\" font-size=\"13\">exposure {label} (mW/cm²), x {:.2}..{:.2} m, y {:.2}..{:.2} m</text>",
            oy - 8.0, xs[0], xs[nx - 1], ys[0], ys[ny - 1]
        );
        let mut grid = vec![vec![None; ny]; nx];
        for &(x, y, v) in cells {
            let (i, j) = (idx(x, &xs), idx(y, &ys));
            grid[i][j] = Some(v);
            // y grows upward on the page
            let _ = writeln!(
                s,
                "<rect class=\"cell\" x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"><title>{x},{y}: {v}</title></rect>",
                ox + i as f64 * cw,
                oy + (ny - 1 - j) as f64 * ch,
                cw + 0.05,
                ch + 0.05,
                color(v / vmax)
            );
        }

        // boundary between cells above and at/below the threshold
        let above = |i: isize, j: isize| -> bool {
            if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
                return false;
            }
            grid[i as usize][j as usize].is_some_and(|v| v > threshold)
        };
        let mut d = String::new();
        for i in 0..nx as isize {
            for j in 0..ny as isize {
                if !above(i, j) {
                    continue;
                }
                let x0 = ox + i as f64 * cw;
                let x1 = x0 + cw;
                let y1 = oy + (ny as isize - j) as f64 * ch;
                let y0 = y1 - ch;
                if !above(i - 1, j) {
                    let _ = write!(d, "M{x0:.2},{y0:.2}V{y1:.2}");
                }
                if !above(i + 1, j) {
                    let _ = write!(d, "M{x1:.2},{y0:.2}V{y1:.2}");
                }
                if !above(i, j - 1) {
                    let _ = write!(d, "M{x0:.2},{y1:.2}H{x1:.2}");
                }
                if !above(i, j + 1) {
                    let _ = write!(d, "M{x0:.2},{y0:.2}H{x1:.2}");
                }
            }
        }
        if !d.is_empty() {
            let _ = writeln!(
                s,
                "<path class=\"contour\" d=\"{d}\" fill=\"none\" stroke=\"red\" stroke-width=\"1.5\"><title>{threshold} mW/cm²</title></path>"
            );
        }
        // color bar
        let bx = ox + PANEL_W + 20.0;
        for k in 0..50 {
            let f = k as f64 / 49.0;
            let _ = writeln!(
                s,
                "<rect x=\"{bx}\" y=\"{:.2}\" width=\"16\" height=\"{:.2}\" fill=\"{}\"/>",
                oy + (1.0 - f) * (PANEL_H - PANEL_H / 50.0),
                PANEL_H / 50.0 + 0.5,
                color(f)
            );
        }
        let ty = oy + (1.0 - threshold / vmax) * PANEL_H;
        let _ = writeln!(
            s,
            "<line x1=\"{bx}\" x2=\"{:.2}\" y1=\"{ty:.2}\" y2=\"{ty:.2}\" stroke=\"red\"/><text x=\"{:.2}\" y=\"{:.2}\">{threshold}</text>",
            bx + 16.0,
            bx + 20.0,
            ty + 4.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\">{vmax:.3}</text><text x=\"{:.2}\" y=\"{:.2}\">0</text>",
            bx + 20.0,
            oy + 10.0,
            bx + 20.0,
            oy + PANEL_H
        );
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Line chart for a CDF CSV whose last two columns are `value,cdf`.
/// Any leading columns identify the series.
pub fn cdf_svg(path: &Path, threshold: Option<f64>) -> Result<String, RenderError> {
    let t = read_table(path)?;
    let nc = t.header.len();
    if nc < 2 || t.header[nc - 1] != "cdf" {
        return Err(RenderError::Malformed {
            path: path.to_path_buf(),
            line: 1,
            message: "expected a trailing cdf column".into(),
        });
    }
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (i, r) in t.rows.iter().enumerate() {
        if r.len() != nc {
            return Err(RenderError::Malformed {
                path: path.to_path_buf(),
                line: i + 2,
                message: format!("expected {nc} fields, found {}", r.len()),
            });
        }
        let key = r[..nc - 2].join(" ");
        series
            .entry(key)
            .or_default()
            .push((num(path, i + 2, &r[nc - 2])?, num(path, i + 2, &r[nc - 1])?));
    }
    let (mut lo, mut hi) = series
        .values()
        .flatten()
        .filter(|p| p.0.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    if let Some(th) = threshold {
        hi = hi.max(th);
        lo = lo.min(th);
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi <= lo {
        hi = lo + 1.0;
    }
    let (w, h) = (PANEL_W + 2.0 * MARGIN + 160.0, PANEL_H + 2.0 * MARGIN);
    let px = |v: f64| MARGIN + (v - lo) / (hi - lo) * PANEL_W;
    let py = |c: f64| MARGIN + (1.0 - c) * PANEL_H;
    let mut s = svg_open(w, h);
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{PANEL_W}\" height=\"{PANEL_H}\" fill=\"none\" stroke=\"#888\"/>"
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let v = lo + f * (hi - lo);
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{v:.3}</text><text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{f:.2}</text>",
            px(v),
            MARGIN + PANEL_H + 16.0,
            MARGIN - 6.0,
            py(f) + 4.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
        MARGIN + PANEL_W / 2.0,
        h - 12.0,
        t.header[nc - 2]
    );
    if let Some(th) = threshold {
        let _ = writeln!(
            s,
            "<line class=\"threshold\" x1=\"{x:.2}\" x2=\"{x:.2}\" y1=\"{MARGIN}\" y2=\"{:.2}\" stroke=\"red\" stroke-dasharray=\"4 3\"/>",
            MARGIN + PANEL_H,
            x = px(th)
        );
    }
    let palette = [
        "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    ];
    for (k, (name, pts)) in series.iter().enumerate() {
        // cap at ~1000 vertices per series
        // muted links carry -inf and stay off the chart
        let pts: Vec<_> = pts.iter().filter(|p| p.0.is_finite()).collect();
        let stride = pts.len().div_ceil(1000).max(1);
        let mut d = String::new();
        for (i, (v, c)) in pts.iter().enumerate() {
            if i % stride == 0 || i + 1 == pts.len() {
                let _ = write!(d, "{:.2},{:.2} ", px(*v), py(*c));
            }
        }
        let col = palette[k % palette.len()];
        let _ = writeln!(
            s,
            "<polyline class=\"series\" points=\"{}\" fill=\"none\" stroke=\"{col}\" stroke-width=\"1.5\"/>",
            d.trim_end()
        );
        let label = if name.is_empty() {
            t.header[nc - 2].as_str()
        } else {
            name.as_str()
        };
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{col}\">{label}</text>",
            MARGIN + PANEL_W + 12.0,
            MARGIN + 14.0 * (k as f64 + 1.0)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Renders every CSV in `dir`; returns the SVG paths written.
pub fn render_dir(dir: &Path) -> Result<Vec<PathBuf>, RenderError> {
    let entries = fs::read_dir(dir).map_err(|e| RenderError::Io(dir.to_path_buf(), e))?;
    let mut csvs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    csvs.sort();
    if csvs.is_empty() {
        return Err(RenderError::NoInputs(dir.to_path_buf()));
    }
    let mut out = Vec::new();
    for csv in csvs {
        let name = csv.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let svg = if name.starts_with("exposure_map") {
            heatmap_svg(&csv, WORKING_LIMIT_MW_CM2)?
        } else if name.starts_with("exposure_cdf") {
            cdf_svg(&csv, Some(WORKING_LIMIT_MW_CM2))?
        } else {
            cdf_svg(&csv, None)?
        };
        let target = csv.with_extension("svg");
        fs::write(&target, svg).map_err(|e| RenderError::Io(target.clone(), e))?;
        out.push(target);
    }
    Ok(out)
}
