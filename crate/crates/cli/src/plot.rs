//! Deterministic SVG plots of the CSV outputs.

use std::fmt::Write as _;
use std::path::Path;

use wdrcm::stats::fit_line;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// `I(n)` against `n`, log-log, with the fitted slope.
    DeltaEff,
    /// Mean largest fraction against β.
    Sweep,
    /// Degree histogram, log-log.
    DegreeTail,
    /// Median largest fraction against `n`, log x.
    FiniteGraph,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [PlotKind::DeltaEff, PlotKind::Sweep, PlotKind::DegreeTail, PlotKind::FiniteGraph];

    pub fn name(&self) -> &'static str {
        match self {
            PlotKind::DeltaEff => "delta-eff",
            PlotKind::Sweep => "sweep",
            PlotKind::DegreeTail => "degree-tail",
            PlotKind::FiniteGraph => "finite-graph",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    fn columns(&self) -> (&'static str, &'static str) {
        match self {
            PlotKind::DeltaEff => ("n", "I_n"),
            PlotKind::Sweep => ("beta", "mean_largest_fraction"),
            PlotKind::DegreeTail => ("degree", "count"),
            PlotKind::FiniteGraph => ("n", "median_fraction"),
        }
    }

    fn log_axes(&self) -> (bool, bool) {
        match self {
            PlotKind::DeltaEff | PlotKind::DegreeTail => (true, true),
            PlotKind::Sweep => (false, false),
            PlotKind::FiniteGraph => (true, false),
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn read_xy(kind: PlotKind, csv_text: &str) -> CliResult<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();
    let (xc, yc) = kind.columns();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Format(format!("{} plot needs column '{name}'", kind.name())))
    };
    let (xi, yi) = (find(xc)?, find(yc)?);
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |i: usize, name: &str| -> CliResult<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|_| CliError::Format(format!("column '{name}' holds non-numeric value '{}'", &record[i])))
        };
        points.push((parse(xi, xc)?, parse(yi, yc)?));
    }
    if points.is_empty() {
        return Err(CliError::Format("no data rows to plot".into()));
    }
    let (lx, ly) = kind.log_axes();
    let points: Vec<(f64, f64)> = points
        .into_iter()
        .filter(|&(x, y)| x.is_finite() && y.is_finite() && (!lx || x > 0.0) && (!ly || y > 0.0))
        .map(|(x, y)| (if lx { x.log10() } else { x }, if ly { y.log10() } else { y }))
        .collect();
    if points.is_empty() {
        return Err(CliError::Format("no plottable rows (log axes need positive values)".into()));
    }
    Ok(points)
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(points: &[(f64, f64)]) -> Self {
        let span = |v: Vec<f64>| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let (x0, x1) = span(points.iter().map(|p| p.0).collect());
        let (y0, y1) = span(points.iter().map(|p| p.1).collect());
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn axis_label(v: f64, log: bool) -> String {
    if log {
        format!("1e{v:.2}")
    } else {
        format!("{v:.3}")
    }
}

/// Renders the SVG for `csv_text`.
pub fn render(kind: PlotKind, csv_text: &str) -> CliResult<String> {
    let mut points = read_xy(kind, csv_text)?;
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let f = Frame::new(&points);
    let (lx, ly) = kind.log_axes();
    let (xc, yc) = kind.columns();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (bx, by) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path class="axes" d="M {bx} {MARGIN} L {bx} {by} L {} {by}" stroke="black" fill="none"/>"#,
        WIDTH - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{bx}" y="{}" font-size="12">{}</text><text x="{}" y="{}" font-size="12" text-anchor="end">{}</text>"#,
        by + 18.0,
        axis_label(f.x0, lx),
        WIDTH - MARGIN,
        by + 18.0,
        axis_label(f.x1, lx)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{by}" font-size="12" text-anchor="end">{}</text><text x="{}" y="{}" font-size="12" text-anchor="end">{}</text>"#,
        bx - 6.0,
        axis_label(f.y0, ly),
        bx - 6.0,
        MARGIN + 4.0,
        axis_label(f.y1, ly)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{xc}</text><text x="16" y="{}" font-size="14" transform="rotate(-90 16 {})" text-anchor="middle">{yc}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for &(x, y) in &points {
        let _ = writeln!(s, r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, f.px(x), f.py(y));
    }
    match kind {
        PlotKind::DeltaEff => {
            if points.len() >= 2 {
                let from = (points.len() / 2).min(points.len() - 2);
                let xs: Vec<f64> = points[from..].iter().map(|p| p.0).collect();
                let ys: Vec<f64> = points[from..].iter().map(|p| p.1).collect();
                let fit = fit_line(&xs, &ys);
                let (a, b) = (xs[0], *xs.last().unwrap());
                let _ = writeln!(
                    s,
                    r#"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="crimson" stroke-width="2"/>"#,
                    f.px(a),
                    f.py(fit.intercept + fit.slope * a),
                    f.px(b),
                    f.py(fit.intercept + fit.slope * b)
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" font-size="14" text-anchor="end">slope {:.4}</text>"#,
                    WIDTH - MARGIN,
                    MARGIN - 10.0,
                    fit.slope
                );
            }
        }
        PlotKind::Sweep | PlotKind::FiniteGraph => {
            let coords: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline class="trend" points="{}" stroke="steelblue" fill="none" stroke-width="2"/>"#,
                coords.join(" ")
            );
        }
        PlotKind::DegreeTail => {}
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Reads `csv_path`, renders it and writes `svg_path`. Nothing is written on error.
pub fn emit_plot(csv_path: &Path, kind: PlotKind, svg_path: &Path) -> CliResult<()> {
    let text = std::fs::read_to_string(csv_path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", csv_path.display())))?;
    let svg = render(kind, &text)?;
    std::fs::write(svg_path, svg)?;
    Ok(())
}
