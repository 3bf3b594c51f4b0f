//! Static SVG line charts for benchmark summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::generator::ManifestRow;

use super::bench::BenchResults;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub type Series = (String, Vec<(f64, f64)>);

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn extent(series: &[Series], f: impl Fn(&(f64, f64)) -> f64) -> (f64, f64) {
    let (lo, hi) = series
        .iter()
        .flat_map(|s| s.1.iter().map(&f))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Renders `series` as a line chart with markers and a legend.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x0, x1) = extent(series, |p| p.0);
    let (y0, y1) = extent(series, |p| p.1);
    let pw = WIDTH - 2.0 * MARGIN;
    let ph = HEIGHT - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
    let (bx, by) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<line x1="{bx}" y1="{by}" x2="{}" y2="{by}" stroke="black"/>"#, WIDTH - MARGIN);
    let _ = writeln!(s, r#"<line x1="{bx}" y1="{MARGIN}" x2="{bx}" y2="{by}" stroke="black"/>"#);
    for t in 0..=4 {
        let f = t as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, sx(xv), by + 18.0, tick(xv));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, bx - 6.0, sy(yv) + 4.0, tick(yv));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 16.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|p| format!("{:.1},{:.1}", sx(p.0), sy(p.1))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{c}" stroke-width="2" points="{}"/>"#, path.join(" "));
        for p in pts {
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{c}"/>"#, sx(p.0), sy(p.1));
        }
        let ly = MARGIN + 16.0 * i as f64;
        let lx = WIDTH - MARGIN - 110.0;
        let _ = writeln!(s, r#"<rect x="{lx}" y="{}" width="10" height="10" fill="{c}"/>"#, ly - 9.0);
        let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 14.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    crate::instance::format_sig(v, 3)
}

fn n_of(rows: &[ManifestRow]) -> BTreeMap<&str, usize> {
    rows.iter().map(|r| (r.id.as_str(), r.n)).collect()
}

fn means(points: BTreeMap<usize, (f64, usize)>) -> Vec<(f64, f64)> {
    points.into_iter().map(|(n, (s, c))| (n as f64, s / c as f64)).collect()
}

/// Mean ground-truth agreement against `n`, one series per method plus the
/// BKS.
pub fn agreement_series(rows: &[ManifestRow], results: &BenchResults) -> Vec<Series> {
    let n_by = n_of(rows);
    let mut by_variant: BTreeMap<&str, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for t in &results.trials {
        if let (Some(a), Some(&n)) = (t.agreement, n_by.get(t.instance_id.as_str())) {
            let e = by_variant.entry(t.variant.as_str()).or_default().entry(n).or_default();
            e.0 += a;
            e.1 += 1;
        }
    }
    let mut bks = BTreeMap::new();
    for b in &results.bks {
        if let (Some(a), Some(&n)) = (b.agreement, n_by.get(b.instance_id.as_str())) {
            let e: &mut (f64, usize) = bks.entry(n).or_default();
            e.0 += a;
            e.1 += 1;
        }
    }
    let mut out: Vec<Series> = by_variant.into_iter().map(|(v, p)| (v.to_string(), means(p))).collect();
    if !bks.is_empty() {
        out.push(("bks".into(), means(bks)));
    }
    out
}

/// Mean exact-solver time over mean heuristic time per trial, against `n`.
/// Points with a zero time on either side are dropped.
pub fn speedup_series(rows: &[ManifestRow], results: &BenchResults) -> Vec<Series> {
    let n_by = n_of(rows);
    let mut exact: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for e in &results.exact {
        if let Some(&n) = n_by.get(e.instance_id.as_str()) {
            let x = exact.entry(n).or_default();
            x.0 += e.time_ms;
            x.1 += 1;
        }
    }
    let exact: BTreeMap<usize, f64> = exact.into_iter().map(|(n, (s, c))| (n, s / c as f64)).collect();
    let mut by_variant: BTreeMap<&str, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for t in &results.trials {
        if let Some(&n) = n_by.get(t.instance_id.as_str()) {
            let e = by_variant.entry(t.variant.as_str()).or_default().entry(n).or_default();
            e.0 += t.time_ms;
            e.1 += 1;
        }
    }
    by_variant
        .into_iter()
        .map(|(v, p)| {
            let pts = means(p)
                .into_iter()
                .filter_map(|(n, h)| {
                    let e = *exact.get(&(n as usize))?;
                    (e > 0.0 && h > 0.0).then(|| (n, e / h))
                })
                .collect();
            (v.to_string(), pts)
        })
        .filter(|s: &Series| !s.1.is_empty())
        .collect()
}

pub fn agreement_chart(rows: &[ManifestRow], results: &BenchResults) -> String {
    line_chart("Agreement with ground truth", "n", "mean agreement", &agreement_series(rows, results))
}

pub fn speedup_chart(rows: &[ManifestRow], results: &BenchResults) -> String {
    line_chart("Exact time / heuristic time", "n", "speedup", &speedup_series(rows, results))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_contains_series() {
        let s = line_chart("t", "x", "y", &[("a<b".into(), vec![(1.0, 2.0), (2.0, 3.0)])]);
        assert!(s.starts_with("<svg"));
        assert!(s.contains("polyline"));
        assert!(s.contains("a&lt;b"));
        assert!(s.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn empty_chart_is_valid() {
        let s = line_chart("t", "x", "y", &[]);
        assert!(!s.contains("NaN"));
    }
}
