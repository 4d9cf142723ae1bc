//! SVG renderings: 2-d archive heatmaps and race tracks.

use std::collections::HashMap;
use std::fmt::Write as _;

use envdiv_core::domain::racing::TrackLevel;
use envdiv_core::domain::racing::PLAYFIELD;
use envdiv_core::GridArchive;

use crate::error::{CliError, Result};

const PLOT: f64 = 600.0;
const MARGIN: f64 = 60.0;
/// Grid lines are drawn only up to this many bins per axis.
const MAX_GRID_LINES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Coloring {
    /// One color for every occupied cell.
    Occupancy,
    /// Elite objective on a viridis-like ramp.
    Objective,
}

/// Overlay rectangles, per archive dimension.
#[derive(Debug, Clone, Default)]
pub struct Overlays<'a> {
    pub target: Option<&'a [(f64, f64)]>,
    pub mask: Option<&'a [(f64, f64)]>,
}

/// Best objective per (x-bin, y-bin), other dimensions marginalized by max.
pub fn project_max(archive: &GridArchive, x: usize, y: usize) -> HashMap<(usize, usize), f64> {
    let mut best: HashMap<(usize, usize), f64> = HashMap::new();
    for (cell, s) in archive.iter() {
        let idx = archive.unflatten(cell);
        let e = best.entry((idx[x], idx[y])).or_insert(f64::NEG_INFINITY);
        *e = e.max(s.objective);
    }
    best
}

fn dim_position(archive: &GridArchive, name: &str) -> Result<usize> {
    archive.dimensions().iter().position(|d| d.name == name).ok_or_else(|| {
        let known: Vec<&str> = archive.dimensions().iter().map(|d| d.name.as_str()).collect();
        CliError::config(format!("unknown archive dimension `{name}` (archive has {})", known.join(", ")))
    })
}

fn ramp(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.5 };
    let pos = t * (STOPS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(STOPS.len() - 2);
    let f = pos - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let c = |u: f64, v: f64| (u + f * (v - u)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(a.0, b.0), c(a.1, b.1), c(a.2, b.2))
}

/// Heatmap of the `x` and `y` archive dimensions.
pub fn heatmap(archive: &GridArchive, x: &str, y: &str, coloring: Coloring, overlays: &Overlays<'_>) -> Result<String> {
    let (xi, yi) = (dim_position(archive, x)?, dim_position(archive, y)?);
    if xi == yi {
        return Err(CliError::config("heatmap needs two different dimensions"));
    }
    let dims = archive.dimensions();
    let (dx, dy) = (&dims[xi], &dims[yi]);
    let (cw, ch) = (PLOT / dx.bins as f64, PLOT / dy.bins as f64);
    let px = |v: f64| MARGIN + PLOT * ((v - dx.lower) / (dx.upper - dx.lower)).clamp(0.0, 1.0);
    let py = |v: f64| MARGIN + PLOT * (1.0 - ((v - dy.lower) / (dy.upper - dy.lower)).clamp(0.0, 1.0));

    let cells = project_max(archive, xi, yi);
    let (lo, hi) = cells
        .values()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));

    let size = PLOT + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r##"<rect x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}" fill="#ffffff" stroke="#000000"/>"##);

    let mut keys: Vec<_> = cells.keys().copied().collect();
    keys.sort_unstable();
    let _ = writeln!(s, r#"<g class="cells" shape-rendering="crispEdges">"#);
    for (bx, by) in keys {
        let fill = match coloring {
            Coloring::Occupancy => "#3b528b".to_string(),
            Coloring::Objective => ramp(if hi > lo { (cells[&(bx, by)] - lo) / (hi - lo) } else { 1.0 }),
        };
        let (rx, ry) = (MARGIN + bx as f64 * cw, MARGIN + PLOT - (by + 1) as f64 * ch);
        let _ = writeln!(s, r#"<rect x="{rx:.3}" y="{ry:.3}" width="{cw:.3}" height="{ch:.3}" fill="{fill}"/>"#);
    }
    let _ = writeln!(s, "</g>");

    if dx.bins <= MAX_GRID_LINES && dy.bins <= MAX_GRID_LINES {
        let _ = writeln!(s, r##"<g class="grid" stroke="#cccccc" stroke-width="0.5">"##);
        for i in 1..dx.bins {
            let gx = MARGIN + i as f64 * cw;
            let _ = writeln!(s, r#"<line x1="{gx:.3}" y1="{MARGIN}" x2="{gx:.3}" y2="{}"/>"#, MARGIN + PLOT);
        }
        for j in 1..dy.bins {
            let gy = MARGIN + j as f64 * ch;
            let _ = writeln!(s, r#"<line x1="{MARGIN}" y1="{gy:.3}" x2="{}" y2="{gy:.3}"/>"#, MARGIN + PLOT);
        }
        let _ = writeln!(s, "</g>");
    }

    for (class, bounds, color, dash) in [
        ("target", overlays.target, "#d62728", ""),
        ("mask", overlays.mask, "#ff7f0e", r#" stroke-dasharray="6 4""#),
    ] {
        if let Some(b) = bounds {
            let ((x0, x1), (y0, y1)) = (b[xi], b[yi]);
            let (rx, ry) = (px(x0), py(y1));
            let (w, h) = (px(x1) - rx, py(y0) - ry);
            let _ = writeln!(
                s,
                r#"<rect class="{class}" x="{rx:.3}" y="{ry:.3}" width="{w:.3}" height="{h:.3}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#
            );
        }
    }

    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, MARGIN + PLOT / 2.0, size - 20.0, dx.name);
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
        MARGIN + PLOT / 2.0,
        dy.name
    );
    for (v, anchor_x, anchor_y, align) in [
        (dx.lower, px(dx.lower), MARGIN + PLOT + 16.0, "start"),
        (dx.upper, px(dx.upper), MARGIN + PLOT + 16.0, "end"),
    ] {
        let _ = writeln!(s, r#"<text x="{anchor_x:.1}" y="{anchor_y:.1}" text-anchor="{align}">{v:.3}</text>"#);
    }
    for (v, ty) in [(dy.lower, py(dy.lower)), (dy.upper, py(dy.upper) + 10.0)] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{ty:.1}" text-anchor="end">{v:.3}</text>"#, MARGIN - 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" text-anchor="middle">{} of {} cells occupied</text>"#,
        MARGIN + PLOT / 2.0,
        archive.len(),
        archive.num_cells()
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// A race track on the playfield, with its control points.
pub fn track_svg(track: &TrackLevel) -> String {
    let scale = PLOT / PLAYFIELD;
    let size = PLOT + 2.0 * MARGIN;
    let map = |p: [f64; 2]| (MARGIN + p[0] * scale, MARGIN + PLOT - p[1] * scale);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#);
    let _ = writeln!(s, r##"<rect x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}" fill="#4a8f3c"/>"##);
    let points: Vec<String> = track
        .polyline
        .iter()
        .map(|&p| {
            let (x, y) = map(p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="none" stroke="#555555" stroke-width="14" stroke-linejoin="round"/>"##,
        points.join(" ")
    );
    for &p in &track.control_points {
        let (x, y) = map(p);
        let _ = writeln!(s, r##"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="#d62728"/>"##);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use envdiv_core::{Dimension, Genotype, Solution};

    fn archive() -> GridArchive {
        GridArchive::new(vec![
            Dimension::new("a", 0.0, 4.0, 4),
            Dimension::new("b", 0.0, 3.0, 3),
            Dimension::new("c", 0.0, 1.0, 2),
        ])
        .unwrap()
    }

    fn fill(archive: &mut GridArchive) {
        for i in 0..4 {
            for j in 0..3 {
                for k in 0..2 {
                    let s = Solution {
                        genotype: Genotype::Discrete(vec![0]),
                        features: vec![i as f64 + 0.5, j as f64 + 0.5, k as f64 * 0.5 + 0.25],
                        objective: (i * 10 + j * 3 + k) as f64,
                        birth_iter: 0,
                    };
                    archive.insert(s).unwrap();
                }
            }
        }
    }

    fn count(svg: &str, needle: &str) -> usize {
        svg.matches(needle).count()
    }

    #[test]
    fn empty_archive_is_a_blank_grid_with_overlay() {
        let a = archive();
        let target = [(1.0, 3.0), (0.5, 2.5), (0.0, 1.0)];
        let svg = heatmap(&a, "a", "b", Coloring::Objective, &Overlays { target: Some(&target), mask: None }).unwrap();
        assert_eq!(count(&svg, r#"<rect x"#), 1);
        assert_eq!(count(&svg, r#"class="target""#), 1);
        assert_eq!(count(&svg, "<line"), 3 + 2);
    }

    #[test]
    fn full_archive_colors_every_projected_cell() {
        let mut a = archive();
        fill(&mut a);
        let svg = heatmap(&a, "a", "b", Coloring::Occupancy, &Overlays::default()).unwrap();
        assert_eq!(count(&svg, r##"fill="#3b528b""##), 12);
        let best = project_max(&a, 0, 1);
        assert_eq!(best[&(3, 2)], (30 + 6 + 1) as f64);
    }

    #[test]
    fn unknown_dimension_is_an_error() {
        let a = archive();
        assert!(heatmap(&a, "a", "zzz", Coloring::Occupancy, &Overlays::default()).is_err());
        assert!(heatmap(&a, "a", "a", Coloring::Occupancy, &Overlays::default()).is_err());
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.0), "#440154");
        assert_eq!(ramp(1.0), "#fde725");
    }
}
