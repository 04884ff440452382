//! Deterministic hand-written SVG: lattice heatmaps with group-labelled
//! placements, difference-profile line plots and feature-importance panels.
//! Coordinates are printed with fixed precision so identical inputs give
//! identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::som::FeatureRank;

const CELL: f64 = 18.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// One labelled marker on a lattice heatmap.
#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub row: usize,
    pub col: usize,
    pub group: String,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, width: f64, height: f64, title: &str, hash: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, "<!-- config_hash={hash} -->");
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="20" font-size="14">{}</text>"#,
        MARGIN,
        escape(title)
    );
}

/// Dark blue through teal to yellow.
fn color(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn group_colors<'a>(groups: impl Iterator<Item = &'a str>) -> BTreeMap<String, &'static str> {
    let mut names: Vec<&str> = groups.collect();
    names.sort_unstable();
    names.dedup();
    names
        .into_iter()
        .enumerate()
        .map(|(i, g)| (g.to_owned(), PALETTE[i % PALETTE.len()]))
        .collect()
}

/// Row-major `values` as a lattice heatmap with markers grouped per neuron.
pub fn heatmap_svg(title: &str, rows: usize, cols: usize, values: &[f64], markers: &[Marker], hash: &str) -> String {
    let lo = values.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let colors = group_colors(markers.iter().map(|m| m.group.as_str()));
    let width = 2.0 * MARGIN + cols as f64 * CELL + 140.0;
    let height = 2.0 * MARGIN + rows as f64 * CELL;
    let mut out = String::new();
    header(&mut out, width, height, title, hash);
    for r in 0..rows {
        for c in 0..cols {
            let v = values[r * cols + c];
            let _ = writeln!(
                out,
                r#"<rect x="{:.1}" y="{:.1}" width="{CELL:.1}" height="{CELL:.1}" fill="{}"><title>({r},{c}) {v:.4}</title></rect>"#,
                MARGIN + c as f64 * CELL,
                MARGIN + r as f64 * CELL,
                color((v - lo) / span)
            );
        }
    }
    // per neuron, per group counts
    let mut cells: BTreeMap<(usize, usize), BTreeMap<&str, usize>> = BTreeMap::new();
    for m in markers {
        *cells.entry((m.row, m.col)).or_default().entry(m.group.as_str()).or_default() += 1;
    }
    for ((r, c), groups) in &cells {
        let k = groups.len() as f64;
        for (i, (g, n)) in groups.iter().enumerate() {
            let cx = MARGIN + *c as f64 * CELL + CELL * (i as f64 + 0.5) / k;
            let cy = MARGIN + *r as f64 * CELL + CELL / 2.0;
            let rad = (CELL / (2.5 * k)).min(CELL / 3.0);
            let _ = writeln!(
                out,
                r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{rad:.2}" fill="{}" stroke="white" stroke-width="0.8"><title>{} x{n}</title></circle>"#,
                colors[*g],
                escape(g)
            );
        }
    }
    let lx = MARGIN + cols as f64 * CELL + 16.0;
    for (i, (g, col)) in colors.iter().enumerate() {
        let y = MARGIN + 10.0 + i as f64 * 18.0;
        let _ = writeln!(out, r#"<circle cx="{lx:.1}" cy="{y:.1}" r="5" fill="{col}"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
            lx + 10.0,
            y + 4.0,
            escape(g)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{lx:.1}" y="{:.1}" font-size="10">min {lo:.4}</text>"#,
        height - MARGIN - 16.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{lx:.1}" y="{:.1}" font-size="10">max {hi:.4}</text>"#,
        height - MARGIN - 2.0
    );
    out.push_str("</svg>\n");
    out
}

/// One named series for [`line_plot_svg`].
pub struct Series<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
    pub color: &'a str,
}

/// Series drawn against their index; indices below `first` are skipped.
pub fn line_plot_svg(title: &str, x_label: &str, series: &[Series<'_>], first: usize, hash: &str) -> String {
    let (w, h) = (900.0, 360.0);
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let xs = first..n;
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for s in series {
        for v in s.values.iter().skip(first).copied().filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if hi <= lo {
        hi = lo + 1.0;
    }
    let px = |i: usize| MARGIN + (i - first) as f64 / (n.saturating_sub(first + 1).max(1)) as f64 * (w - 2.0 * MARGIN);
    let py = |v: f64| h - MARGIN - (v - lo) / (hi - lo) * (h - 2.0 * MARGIN);
    let mut out = String::new();
    header(&mut out, w, h, title, hash);
    let _ = writeln!(
        out,
        r##"<line x1="{:.1}" y1="{:.2}" x2="{:.1}" y2="{:.2}" stroke="#999" stroke-width="0.8"/>"##,
        MARGIN,
        py(0.0),
        w - MARGIN,
        py(0.0)
    );
    for tick in (0..=n).step_by(100).filter(|t| *t >= first && *t < n.max(1)) {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="9" text-anchor="middle">{tick}</text>"#,
            px(tick),
            h - MARGIN + 14.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
        w / 2.0,
        h - 6.0,
        escape(x_label)
    );
    let _ = writeln!(out, r#"<text x="4" y="{:.1}" font-size="9">{hi:.3}</text>"#, MARGIN);
    let _ = writeln!(out, r#"<text x="4" y="{:.1}" font-size="9">{lo:.3}</text>"#, h - MARGIN);
    for (k, s) in series.iter().enumerate() {
        let mut d = String::new();
        for i in xs.clone().filter(|&i| i < s.values.len()) {
            let v = s.values[i];
            let v = if v.is_finite() { v } else { 0.0 };
            let _ = write!(d, "{}{:.2},{:.2}", if d.is_empty() { "M" } else { " L" }, px(i), py(v));
        }
        let _ = writeln!(
            out,
            r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1"/>"#,
            s.color
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" fill="{}">{}</text>"#,
            w - MARGIN - 160.0,
            MARGIN + 12.0 + k as f64 * 14.0,
            s.color,
            escape(s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Small multiples: per panel, each feature at (rank, strength).
pub fn importance_svg(title: &str, panels: &[(String, Vec<FeatureRank>)], features: &[&str], hash: &str) -> String {
    let (pw, ph) = (220.0, 150.0);
    let per_row = 4usize;
    let nrows = panels.len().div_ceil(per_row).max(1);
    let w = 2.0 * MARGIN + per_row as f64 * pw;
    let h = 2.0 * MARGIN + nrows as f64 * ph;
    let mut out = String::new();
    header(&mut out, w, h, title, hash);
    for (p, (name, ranks)) in panels.iter().enumerate() {
        let x0 = MARGIN + (p % per_row) as f64 * pw;
        let y0 = MARGIN + (p / per_row) as f64 * ph;
        let (iw, ih) = (pw - 30.0, ph - 40.0);
        let _ = writeln!(
            out,
            r##"<rect x="{:.1}" y="{:.1}" width="{iw:.1}" height="{ih:.1}" fill="none" stroke="#bbb"/>"##,
            x0 + 10.0,
            y0 + 18.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#,
            x0 + 10.0,
            y0 + 12.0,
            escape(name)
        );
        let k = ranks.len().max(2) as f64;
        for (rank, f) in ranks.iter().enumerate() {
            let x = x0 + 10.0 + 8.0 + rank as f64 / (k - 1.0) * (iw - 16.0);
            let y = y0 + 18.0 + ih - f.strength.clamp(0.0, 1.0) * ih;
            let label = features.get(f.dimension).copied().unwrap_or("?");
            let _ = writeln!(
                out,
                r##"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="#1f77b4"><title>{} strength {:.3} importance {:.3}</title></circle>"##,
                escape(label),
                f.strength,
                f.importance
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="7" transform="rotate(-45 {:.2} {:.2})">{}</text>"#,
                x + 3.0,
                y - 3.0,
                x + 3.0,
                y - 3.0,
                escape(label)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_is_deterministic_and_stamped() {
        let values: Vec<f64> = (0..12).map(|i| i as f64 * 0.1).collect();
        let m = vec![
            Marker { row: 0, col: 1, group: "B".into() },
            Marker { row: 0, col: 1, group: "A".into() },
            Marker { row: 2, col: 3, group: "A&".into() },
        ];
        let a = heatmap_svg("u", 3, 4, &values, &m, "hh");
        assert_eq!(a, heatmap_svg("u", 3, 4, &values, &m, "hh"));
        assert!(a.contains("<!-- config_hash=hh -->"));
        assert_eq!(a.matches("<rect x=").count(), 12);
        assert_eq!(a.matches("<circle cx").count(), 3 + 3);
        assert!(a.contains("A&amp;"));
        assert!(a.ends_with("</svg>\n"));
    }

    #[test]
    fn colour_ramp_endpoints() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
        assert_eq!(color(f64::NAN), "#440154");
    }

    #[test]
    fn line_plot_skips_leading_bins() {
        let v: Vec<f64> = (0..1200).map(|i| (i as f64 * 0.01).sin()).collect();
        let s = line_plot_svg("d", "cent", &[Series { name: "delta", values: &v, color: "#000" }], 1, "x");
        let path = s.lines().find(|l| l.starts_with("<path")).unwrap();
        assert_eq!(path.matches(" L").count(), 1198);
    }

    #[test]
    fn importance_has_one_point_per_feature() {
        let ranks: Vec<FeatureRank> = (0..8)
            .map(|d| FeatureRank { dimension: d, strength: d as f64 / 7.0, importance: -(d as f64) })
            .collect();
        let s = importance_svg("i", &[("p".into(), ranks.clone()), ("q".into(), ranks)], &["a"; 8], "h");
        assert_eq!(s.matches("<circle").count(), 16);
    }
}
