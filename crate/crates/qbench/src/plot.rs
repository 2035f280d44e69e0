//! `qbench plot`: Pareto scatter as a self-contained SVG.

use std::fmt::Write as _;
use std::path::Path;

use qbench_core::bench::{pareto_points, ParetoPoint};
use qbench_core::models::ModelKind;

use crate::error::Result;
use crate::io::{read_runs_csv, write_file};
use crate::report::{read_pareto_csv, write_pareto_csv};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

fn marker(model: ModelKind, x: f64, y: f64) -> String {
    match model {
        ModelKind::Qlstm => format!(r##"<circle cx="{x:.2}" cy="{y:.2}" r="5" fill="#1f77b4"/>"##),
        ModelKind::Qfwp => format!(
            r##"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="#d62728"/>"##,
            x - 5.0,
            y - 5.0
        ),
    }
}

/// Axis range padded by 8% on both sides; a zero-width range is widened.
fn padded(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { lo.abs().max(1e-3) * 0.1 };
    (lo - 0.08 * span, hi + 0.08 * span)
}

/// Renders the scatter, or `None` with fewer than two points.
pub fn render_svg(points: &[ParetoPoint]) -> Option<String> {
    if points.len() < 2 {
        return None;
    }
    let (x0, x1) = padded(points.iter().map(|p| p.speedup_median));
    let (y0, y1) = padded(points.iter().map(|p| p.rmse_mean));
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let (xp, yp) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{xp:.2}" y1="{:.2}" x2="{xp:.2}" y2="{:.2}" stroke="black"/><text x="{xp:.2}" y="{:.2}" text-anchor="middle">{xv:.2}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 19.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{yp:.2}" x2="{LEFT}" y2="{yp:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.4}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            yp + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Full-train speedup (median)</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">Test RMSE (mean)</text>"#,
        TOP + ph / 2.0
    );

    let mut frontier: Vec<&ParetoPoint> = points.iter().filter(|p| p.on_frontier).collect();
    frontier.sort_by(|a, b| a.speedup_median.total_cmp(&b.speedup_median));
    if frontier.len() > 1 {
        let pts: Vec<String> = frontier
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.speedup_median), sy(p.rmse_mean)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="gray" stroke-dasharray="5 3"/>"#,
            pts.join(" ")
        );
    }
    for p in points {
        let (x, y) = (sx(p.speedup_median), sy(p.rmse_mean));
        let _ = writeln!(s, "{}", marker(p.model, x, y));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 8.0, y - 6.0, p.batch);
    }

    let mut models: Vec<ModelKind> = points.iter().map(|p| p.model).collect();
    models.sort();
    models.dedup();
    let lx = WIDTH - RIGHT + 20.0;
    for (i, m) in models.iter().enumerate() {
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let _ = writeln!(s, "{}", marker(*m, lx, ly));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 12.0,
            ly + 4.0,
            m.name().to_uppercase()
        );
    }
    let ly = TOP + 10.0 + 20.0 * models.len() as f64;
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="gray" stroke-dasharray="5 3"/><text x="{:.2}" y="{:.2}">frontier</text>"#,
        lx - 6.0,
        lx + 6.0,
        lx + 12.0,
        ly + 4.0
    );
    s.push_str("</svg>\n");
    Some(s)
}

/// Outcome of `plot`.
#[derive(Debug, PartialEq, Eq)]
pub enum PlotOutput {
    Svg { points: usize },
    CsvOnly { points: usize },
}

/// Reads `pareto.csv`, computing it from `runs.csv` when absent, and writes
/// `pareto.svg` when there are at least two points.
pub fn cmd_plot(dir: &Path) -> Result<PlotOutput> {
    let csv_path = dir.join("pareto.csv");
    let points = if csv_path.exists() {
        read_pareto_csv(&csv_path)?
    } else {
        let pts = pareto_points(&read_runs_csv(&dir.join("runs.csv"))?);
        write_pareto_csv(&csv_path, &pts)?;
        pts
    };
    match render_svg(&points) {
        Some(svg) => {
            write_file(&dir.join("pareto.svg"), svg)?;
            Ok(PlotOutput::Svg { points: points.len() })
        }
        None => {
            log::warn!("fewer than 2 Pareto points; wrote pareto.csv only");
            Ok(PlotOutput::CsvOnly { points: points.len() })
        }
    }
}
