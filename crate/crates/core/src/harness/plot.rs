//! Top-down trajectory plots: an SVG picture and a CSV of the same series.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::record::TrajectoryRecord;
use super::HarnessError;

const SIZE: f64 = 800.0;
const PAD: f64 = 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotFiles {
    pub svg: PathBuf,
    pub csv: PathBuf,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    series: &'a str,
    id: String,
    x: f64,
    y: f64,
}

/// Drops repeated points and interior points collinear with their
/// neighbours; reversals are kept.
pub fn simplify_polyline(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut dedup: Vec<[f64; 2]> = Vec::with_capacity(points.len());
    for &p in points {
        if dedup
            .last()
            .is_none_or(|q| (q[0] - p[0]).hypot(q[1] - p[1]) > 1e-9)
        {
            dedup.push(p);
        }
    }
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(dedup.len());
    for (i, &p) in dedup.iter().enumerate() {
        if i == 0 || i + 1 == dedup.len() {
            out.push(p);
            continue;
        }
        let a = *out.last().expect("first point kept");
        let b = dedup[i + 1];
        let (ux, uy) = (p[0] - a[0], p[1] - a[1]);
        let (vx, vy) = (b[0] - p[0], b[1] - p[1]);
        let cross = ux * vy - uy * vx;
        let scale = ux.hypot(uy) * vx.hypot(vy);
        let straight = cross.abs() <= 1e-9 * scale && ux * vx + uy * vy > 0.0;
        if !straight {
            out.push(p);
        }
    }
    out
}

/// Writes `svg_path` and a sibling `.csv`.
pub fn plot_record(rec: &TrajectoryRecord, svg_path: &Path) -> Result<PlotFiles, HarnessError> {
    let path: Vec<[f64; 2]> = rec
        .ticks()
        .map(|t| [t.state.position.x, t.state.position.y])
        .collect();
    let path = simplify_polyline(&path);
    let plans: Vec<(u32, [f64; 2])> = rec
        .plans()
        .map(|p| (p.id, [p.state.position.x, p.state.position.y]))
        .collect();
    let scene = &rec.header.scenario.scene;
    let targets: Vec<(&str, [f64; 2])> = scene
        .targets
        .iter()
        .map(|t| (t.id.as_str(), [t.position.x, t.position.y]))
        .collect();
    let obstacles: Vec<(&str, [f64; 2], [f64; 2])> = scene
        .obstacles
        .iter()
        .map(|o| {
            (
                o.id.as_str(),
                [o.bounds.min.x, o.bounds.min.y],
                [o.bounds.max.x, o.bounds.max.y],
            )
        })
        .collect();

    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut grow = |p: [f64; 2]| {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    };
    path.iter().copied().for_each(&mut grow);
    targets.iter().for_each(|t| grow(t.1));
    obstacles.iter().for_each(|o| {
        grow(o.1);
        grow(o.2);
    });
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
    let k = (SIZE - 2.0 * PAD) / span;
    let sx = |x: f64| PAD + (x - lo[0]) * k;
    // world +y points up the page
    let sy = |y: f64| SIZE - PAD - (y - lo[1]) * k;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(
        svg,
        r##"<rect width="100%" height="100%" fill="#ffffff"/>"##
    );
    for (id, a, b) in &obstacles {
        let _ = writeln!(
            svg,
            r##"<rect class="obstacle" data-id="{}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#888888"/>"##,
            escape(id),
            sx(a[0]),
            sy(b[1]),
            (b[0] - a[0]) * k,
            (b[1] - a[1]) * k
        );
    }
    let pts: Vec<String> = path
        .iter()
        .map(|p| format!("{:.2},{:.2}", sx(p[0]), sy(p[1])))
        .collect();
    let _ = writeln!(
        svg,
        r##"<polyline class="path" points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
        pts.join(" ")
    );
    for (id, p) in &plans {
        let _ = writeln!(
            svg,
            r##"<circle class="plan" data-id="{id}" cx="{:.2}" cy="{:.2}" r="4" fill="#ff7f0e"/>"##,
            sx(p[0]),
            sy(p[1])
        );
    }
    for (id, p) in &targets {
        let _ = writeln!(
            svg,
            r##"<circle class="target" data-id="{0}" cx="{1:.2}" cy="{2:.2}" r="6" fill="#d62728"/><text x="{3:.2}" y="{2:.2}" font-size="12">{0}</text>"##,
            escape(id),
            sx(p[0]),
            sy(p[1]),
            sx(p[0]) + 8.0
        );
    }
    svg.push_str("</svg>\n");

    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    if let Some(dir) = svg_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
    }
    std::fs::write(svg_path, svg).map_err(io(svg_path))?;

    let csv_path = svg_path.with_extension("csv");
    let mut w = csv::Writer::from_path(&csv_path)
        .map_err(|e| HarnessError::Record(format!("{}: {e}", csv_path.display())))?;
    let mut rows = Vec::new();
    rows.extend(path.iter().enumerate().map(|(i, p)| CsvRow {
        series: "path",
        id: i.to_string(),
        x: p[0],
        y: p[1],
    }));
    rows.extend(plans.iter().map(|(id, p)| CsvRow {
        series: "plan",
        id: id.to_string(),
        x: p[0],
        y: p[1],
    }));
    rows.extend(targets.iter().map(|(id, p)| CsvRow {
        series: "target",
        id: id.to_string(),
        x: p[0],
        y: p[1],
    }));
    for (id, a, b) in &obstacles {
        rows.push(CsvRow {
            series: "obstacle_min",
            id: id.to_string(),
            x: a[0],
            y: a[1],
        });
        rows.push(CsvRow {
            series: "obstacle_max",
            id: id.to_string(),
            x: b[0],
            y: b[1],
        });
    }
    for r in rows {
        w.serialize(r)
            .map_err(|e| HarnessError::Record(format!("{}: {e}", csv_path.display())))?;
    }
    w.flush().map_err(io(&csv_path))?;
    Ok(PlotFiles {
        svg: svg_path.to_path_buf(),
        csv: csv_path,
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
