//! Minimal SVG plots: heatmaps with contours, and line charts.

use std::collections::BTreeMap;
use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 100.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Viridis anchors at 0, 0.25, 0.5, 0.75, 1.
const VIRIDIS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn colour(u: f64) -> String {
    if !u.is_finite() {
        return "#bbbbbb".into();
    }
    let x = u.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let k = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let t = x - k as f64;
    let (a, b) = (VIRIDIS[k], VIRIDIS[k + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn short(v: f64) -> String {
    let a = v.abs();
    if a >= 100.0 {
        format!("{v:.0}")
    } else if a >= 10.0 {
        format!("{v:.1}")
    } else if a >= 0.1 || a == 0.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Grid edge identified by its lower/left node: horizontal edges join
/// (i, j)–(i, j+1), vertical ones (i, j)–(i+1, j).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

/// Iso-lines of `values[i][j]` at `level` by marching squares, as polylines
/// in index coordinates (x = j, y = i). Cells touching a non-finite value are
/// skipped; saddles are resolved by the cell-centre mean.
pub fn contour_lines(values: &[Vec<f64>], level: f64) -> Vec<Vec<(f64, f64)>> {
    let ny = values.len();
    let nx = values.first().map_or(0, Vec::len);
    if ny < 2 || nx < 2 {
        return Vec::new();
    }
    let v = |i: usize, j: usize| values[i][j];
    let point = |e: Edge| -> (f64, f64) {
        let (p, q, (x, y), horizontal) = match e {
            Edge::H(i, j) => (v(i, j), v(i, j + 1), (j as f64, i as f64), true),
            Edge::V(i, j) => (v(i, j), v(i + 1, j), (j as f64, i as f64), false),
        };
        let t = ((level - p) / (q - p)).clamp(0.0, 1.0);
        if horizontal {
            (x + t, y)
        } else {
            (x, y + t)
        }
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..ny - 1 {
        for j in 0..nx - 1 {
            let corners = [v(i, j), v(i, j + 1), v(i + 1, j + 1), v(i + 1, j)];
            if corners.iter().any(|c| !c.is_finite()) {
                continue;
            }
            let above: Vec<bool> = corners.iter().map(|&c| c >= level).collect();
            let (bottom, right, top, left) = (Edge::H(i, j), Edge::V(i, j + 1), Edge::H(i + 1, j), Edge::V(i, j));
            // Edge k joins corner k and corner k+1.
            let edges = [bottom, right, top, left];
            let crossed: Vec<Edge> = (0..4).filter(|&k| above[k] != above[(k + 1) % 4]).map(|k| edges[k]).collect();
            match crossed.len() {
                2 => segments.push((crossed[0], crossed[1])),
                4 => {
                    let centre = corners.iter().sum::<f64>() / 4.0;
                    // Corners 0 and 2 share a side of the level.
                    if (centre >= level) == above[0] {
                        segments.push((bottom, right));
                        segments.push((top, left));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                _ => {}
            }
        }
    }

    let mut at: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        at.entry(*a).or_default().push(k);
        at.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let trace = |start: usize, from: Edge, used: &mut Vec<bool>| {
        let mut path = vec![from];
        let (mut seg, mut end) = (start, from);
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            end = if a == end { b } else { a };
            path.push(end);
            match at[&end].iter().find(|&&s| !used[s]) {
                Some(&next) => seg = next,
                None => break,
            }
        }
        path.into_iter().map(point).collect::<Vec<_>>()
    };
    // Open lines start at a boundary end; whatever remains forms loops.
    for k in 0..segments.len() {
        if used[k] {
            continue;
        }
        let (a, b) = segments[k];
        if at[&a].len() == 1 {
            lines.push(trace(k, a, &mut used));
        } else if at[&b].len() == 1 {
            lines.push(trace(k, b, &mut used));
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            lines.push(trace(k, segments[k].0, &mut used));
        }
    }
    lines
}

pub struct Contour {
    pub level: f64,
    pub lines: Vec<Vec<(f64, f64)>>,
}

pub struct Heatmap<'a> {
    pub title: &'a str,
    pub x_title: &'a str,
    pub y_title: &'a str,
    pub x_values: &'a [f64],
    pub y_values: &'a [f64],
    /// `values[i][j]` at (x_values[j], y_values[i]).
    pub values: &'a [Vec<f64>],
    pub contours: &'a [Contour],
    /// (i, j) cell to mark with a star.
    pub marker: Option<(usize, usize)>,
}

pub fn heatmap(map: &Heatmap) -> String {
    let ny = map.values.len().max(1);
    let nx = map.values.first().map_or(1, |r| r.len().max(1));
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let (cw, ch) = (pw / nx as f64, ph / ny as f64);
    let px = |x: f64| LEFT + (x + 0.5) * cw;
    let py = |y: f64| TOP + ph - (y + 0.5) * ch;
    let finite = map.values.iter().flatten().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo, if hi > lo { hi } else { lo + 1.0 }) } else { (0.0, 1.0) };

    let mut s = header();
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(map.title));
    for (i, row) in map.values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                LEFT + j as f64 * cw,
                TOP + ph - (i + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05,
                colour((v - lo) / (hi - lo))
            );
        }
    }
    for (k, c) in map.contours.iter().enumerate() {
        let dash = if k == 0 { "" } else { r#" stroke-dasharray="6 3""# };
        for line in &c.lines {
            let pts: Vec<String> = line.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="white" stroke-width="1.5"{dash}/>"#, pts.join(" "));
        }
    }
    if let Some((i, j)) = map.marker {
        let _ = writeln!(s, "{}", star(px(j as f64), py(i as f64), 9.0));
    }
    let step = |n: usize| n.div_ceil(10).max(1);
    for j in (0..map.x_values.len()).step_by(step(map.x_values.len())) {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle" font-size="11">{}</text>"#, px(j as f64), TOP + ph + 16.0, short(map.x_values[j]));
    }
    for i in (0..map.y_values.len()).step_by(step(map.y_values.len())) {
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#, LEFT - 6.0, py(i as f64) + 4.0, short(map.y_values[i]));
    }
    axis_titles(&mut s, map.x_title, map.y_title);
    colour_bar(&mut s, lo, hi);
    s.push_str("</svg>\n");
    s
}

fn star(cx: f64, cy: f64, r: f64) -> String {
    let pts: Vec<String> = (0..10)
        .map(|k| {
            let a = std::f64::consts::PI * (k as f64 / 5.0 - 0.5);
            let rr = if k % 2 == 0 { r } else { 0.45 * r };
            format!("{:.2},{:.2}", cx + rr * a.cos(), cy + rr * a.sin())
        })
        .collect();
    format!(r#"<polygon points="{}" fill="red" stroke="black" stroke-width="0.8"/>"#, pts.join(" "))
}

fn header() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn axis_titles(s: &mut String, x: &str, y: &str) {
    let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, LEFT + (WIDTH - LEFT - RIGHT) / 2.0, HEIGHT - 18.0, escape(x));
    let cy = TOP + (HEIGHT - TOP - BOTTOM) / 2.0;
    let _ = writeln!(s, r#"<text x="18" y="{cy:.1}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {cy:.1})">{}</text>"#, escape(y));
}

fn colour_bar(s: &mut String, lo: f64, hi: f64) {
    let (x, w, ph) = (WIDTH - RIGHT + 20.0, 16.0, HEIGHT - TOP - BOTTOM);
    let steps = 32;
    for k in 0..steps {
        let h = ph / steps as f64;
        let _ = writeln!(s, r#"<rect x="{x}" y="{:.2}" width="{w}" height="{:.2}" fill="{}"/>"#, TOP + ph - (k + 1) as f64 * h, h + 0.05, colour((k as f64 + 0.5) / steps as f64));
    }
    for (u, v) in [(0.0, lo), (0.5, 0.5 * (lo + hi)), (1.0, hi)] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" font-size="11">{}</text>"#, x + w + 4.0, TOP + ph * (1.0 - u) + 4.0, short(v));
    }
}

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Line chart with linear axes fitted to the data.
pub fn line_plot(title: &str, x_title: &str, y_title: &str, series: &[Series]) -> String {
    let all = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = header();
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let u = k as f64 / 4.0;
        let (xv, yv) = (x0 + u * (x1 - x0), y0 + u * (y1 - y0));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle" font-size="11">{}</text>"#, px(xv), TOP + ph + 16.0, short(xv));
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#, LEFT - 6.0, py(yv) + 4.0, short(yv));
    }
    for (k, ser) in series.iter().enumerate() {
        let c = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, pts.join(" "));
        let ly = TOP + 14.0 + 16.0 * k as f64;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{c}" stroke-width="2"/>"#, WIDTH - RIGHT + 8.0, WIDTH - RIGHT + 24.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11">{}</text>"#, WIDTH - RIGHT + 28.0, ly + 4.0, escape(ser.label));
    }
    axis_titles(&mut s, x_title, y_title);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cone(n: usize) -> Vec<Vec<f64>> {
        let c = (n - 1) as f64 / 2.0;
        (0..n)
            .map(|i| (0..n).map(|j| 1.0 - ((i as f64 - c).hypot(j as f64 - c)) / c).collect())
            .collect()
    }

    #[test]
    fn closed_contour_around_peak() {
        let lines = contour_lines(&cone(21), 0.5);
        assert_eq!(lines.len(), 1);
        let line = &lines[0];
        assert_eq!(line.first(), line.last(), "loop should close");
        for &(x, y) in line {
            let r = (x - 10.0).hypot(y - 10.0);
            assert!((r - 5.0).abs() < 0.3, "r = {r}");
        }
    }

    #[test]
    fn open_contour_crosses_grid() {
        let ramp: Vec<Vec<f64>> = (0..5).map(|_| (0..6).map(|j| j as f64).collect()).collect();
        let lines = contour_lines(&ramp, 2.5);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].len(), 5);
        assert!(lines[0].iter().all(|&(x, _)| (x - 2.5).abs() < 1e-12));
    }

    #[test]
    fn nan_cells_are_skipped() {
        let mut g = cone(11);
        g[5][5] = f64::NAN;
        let lines = contour_lines(&g, 0.95);
        assert!(lines.is_empty());
        assert!(!contour_lines(&g, 0.3).is_empty());
    }

    #[test]
    fn saddle_resolved_consistently() {
        let g = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(contour_lines(&g, 0.4).len(), 2);
        assert_eq!(contour_lines(&g, 0.6).len(), 2);
    }

    #[test]
    fn documents_are_well_formed() {
        let g = cone(5);
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let c = [Contour { level: 0.5, lines: contour_lines(&g, 0.5) }];
        let svg = heatmap(&Heatmap {
            title: "a < b",
            x_title: "x",
            y_title: "y",
            x_values: &xs,
            y_values: &xs,
            values: &g,
            contours: &c,
            marker: Some((2, 2)),
        });
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a &lt; b") && svg.contains("<polygon") && svg.contains("<polyline"));
        let lp = line_plot("t", "x", "y", &[Series { label: "s", points: vec![(0.0, 1.0), (1.0, 2.0)] }]);
        assert!(lp.contains("<polyline"));
    }
}
