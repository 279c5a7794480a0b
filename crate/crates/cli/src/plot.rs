//! Minimal SVG renderings of the correlation matrix and toxicity series.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use portrayal::diachronic::CorrelationMatrix;
use portrayal::toxicity::ToxicityRow;

const CELL: f64 = 28.0;
const MARGIN: f64 = 48.0;

/// Diverging blue-white-red for values in [-1, 1].
fn color(v: f64) -> String {
    let t = v.clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!("rgb({:.0},{:.0},{:.0})", r, g, b)
}

pub fn heatmap(m: &CorrelationMatrix) -> String {
    let n = m.len() as f64;
    let size = MARGIN + n * CELL + 8.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" font-family="sans-serif" font-size="9">"#
    );
    let _ = writeln!(s, r#"<text x="4" y="12" font-size="11">{}</text>"#, m.group);
    for (i, row) in m.values.iter().enumerate() {
        let y = MARGIN + i as f64 * CELL;
        let _ = writeln!(s, r#"<text x="4" y="{:.1}">{}</text>"#, y + CELL * 0.6, m.decades[i]);
        for (j, v) in row.iter().enumerate() {
            let x = MARGIN + j as f64 * CELL;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{CELL}" height="{CELL}" fill="{}"><title>{} {} {v:.3}</title></rect>"#,
                color(*v),
                m.decades[i],
                m.decades[j]
            );
        }
    }
    for (j, d) in m.decades.iter().enumerate() {
        let x = MARGIN + j as f64 * CELL + 2.0;
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" transform="rotate(-45 {x:.1} {:.1})">{d}</text>"#, MARGIN - 4.0, MARGIN - 4.0);
    }
    s.push_str("</svg>\n");
    s
}

const PALETTE: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];

pub fn lines(rows: &[ToxicityRow]) -> String {
    let (w, h) = (480.0, 280.0);
    let mut series: BTreeMap<&str, Vec<(i32, f64)>> = BTreeMap::new();
    for r in rows {
        series.entry(r.group.as_str()).or_default().push((r.decade, r.toxicity_percent));
    }
    let decades: Vec<i32> = rows.iter().map(|r| r.decade).collect();
    let (lo, hi) = (
        decades.iter().copied().min().unwrap_or(0),
        decades.iter().copied().max().unwrap_or(0),
    );
    let ymax = rows.iter().map(|r| r.toxicity_percent).fold(0.0, f64::max).max(1e-9) * 1.1;
    let px = |d: i32| MARGIN + (w - 2.0 * MARGIN) * if hi > lo { (d - lo) as f64 / (hi - lo) as f64 } else { 0.5 };
    let py = |v: f64| h - MARGIN - (h - 2.0 * MARGIN) * v / ymax;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="10">"#);
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{0}" stroke="black"/>"#,
        h - MARGIN,
        w - MARGIN
    );
    let _ = writeln!(s, r#"<text x="4" y="{:.1}">{ymax:.2}%</text>"#, MARGIN);
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{:.1}">{lo}</text><text x="{:.1}" y="{:.1}">{hi}</text>"#, h - MARGIN + 14.0, w - MARGIN - 20.0, h - MARGIN + 14.0);
    for (i, (group, pts)) in series.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|&(d, v)| format!("{:.1},{:.1}", px(d), py(v))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{c}" stroke-width="2" points="{}"/>"#, path.join(" "));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" fill="{c}">{group}</text>"#, w - MARGIN + 4.0, MARGIN + 14.0 * i as f64);
    }
    s.push_str("</svg>\n");
    s
}
