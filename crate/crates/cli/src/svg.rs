//! Bare-bones SVG charts: axes, ticks, polylines and bars.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn header(out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{cx}" y="22" text-anchor="middle" font-size="14">{t}</text>
<text x="{cx}" y="{xl}" text-anchor="middle">{x}</text>
<text x="16" y="{cy}" text-anchor="middle" transform="rotate(-90 16 {cy})">{y}</text>
<line x1="{LEFT}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>
<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b}" stroke="black"/>
"#,
        cx = (LEFT + W - RIGHT) / 2.0,
        cy = (TOP + H - BOTTOM) / 2.0,
        xl = H - 12.0,
        b = H - BOTTOM,
        r = W - RIGHT,
        t = esc(title),
        x = esc(xlabel),
        y = esc(ylabel),
    );
}

fn y_ticks(out: &mut String, lo: f64, hi: f64, py: &dyn Fn(f64) -> f64) {
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(
            out,
            r#"<line x1="{a}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/><text x="{t}" y="{ty:.1}" text-anchor="end">{l}</text>"#,
            a = LEFT - 4.0,
            t = LEFT - 6.0,
            ty = y + 4.0,
            l = fmt_tick(v),
        );
    }
}

/// Line chart; with `log_x` the abscissa is log10 and non-positive x are
/// dropped.
pub fn line_chart(series: &[Series], title: &str, xlabel: &str, ylabel: &str, log_x: bool) -> String {
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let keep = |x: f64| !log_x || x > 0.0;
    let (x0, x1) = range(series.iter().flat_map(|s| s.x.iter().copied().filter(|&x| keep(x)).map(tx)));
    let (y0, y1) = range(series.iter().flat_map(|s| s.y.iter().copied()));
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let px = move |x: f64| LEFT + (tx(x) - x0) / (x1 - x0) * pw;
    let py = move |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;
    let mut out = String::new();
    header(&mut out, title, xlabel, ylabel);
    y_ticks(&mut out, y0, y1, &py);
    for k in 0..=4 {
        let u = x0 + (x1 - x0) * k as f64 / 4.0;
        let v = if log_x { 10f64.powf(u) } else { u };
        let x = px(v);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{b}" x2="{x:.1}" y2="{b4}" stroke="black"/><text x="{x:.1}" y="{ty}" text-anchor="middle">{l}</text>"#,
            b = H - BOTTOM,
            b4 = H - BOTTOM + 4.0,
            ty = H - BOTTOM + 18.0,
            l = fmt_tick(v),
        );
    }
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .x
            .iter()
            .zip(&s.y)
            .filter(|(x, y)| keep(**x) && y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<text x="{lx}" y="{ly}" fill="{color}" text-anchor="end">{}</text>"#,
            esc(&s.label),
            lx = W - RIGHT - 6.0,
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Vertical bars with the value printed above each bar.
pub fn bar_chart(labels: &[String], values: &[f64], annotations: &[String], title: &str, xlabel: &str, ylabel: &str) -> String {
    let top = values.iter().copied().filter(|v| v.is_finite()).fold(0.0f64, f64::max).max(1e-12);
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let py = |y: f64| TOP + (1.0 - y / top) * ph;
    let mut out = String::new();
    header(&mut out, title, xlabel, ylabel);
    y_ticks(&mut out, 0.0, top, &py);
    let n = labels.len().max(1) as f64;
    let slot = pw / n;
    for (i, label) in labels.iter().enumerate() {
        let v = values.get(i).copied().unwrap_or(f64::NAN);
        let cx = LEFT + slot * (i as f64 + 0.5);
        if v.is_finite() {
            let y = py(v);
            let _ = writeln!(
                out,
                r##"<rect x="{x:.1}" y="{y:.1}" width="{w:.1}" height="{h:.1}" fill="#4c72b0"/>"##,
                x = cx - slot * 0.35,
                w = slot * 0.7,
                h = H - BOTTOM - y,
            );
        }
        if let Some(a) = annotations.get(i) {
            let ay = if v.is_finite() { py(v) - 4.0 } else { H - BOTTOM - 4.0 };
            let _ = writeln!(out, r#"<text x="{cx:.1}" y="{ay:.1}" text-anchor="middle" font-size="10">{}</text>"#, esc(a));
        }
        let _ = writeln!(
            out,
            r#"<text x="{cx:.1}" y="{ty}" text-anchor="middle">{}</text>"#,
            esc(label),
            ty = H - BOTTOM + 18.0,
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_closed_documents() {
        let s = Series {
            label: "a<b".into(),
            x: vec![1.0, 10.0, 100.0],
            y: vec![0.0, 1.0, 0.5],
        };
        let svg = line_chart(&[s], "t", "x", "y", true);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a&lt;b"));
        let bars = bar_chart(&["1".into(), "2".into()], &[0.5, f64::NAN], &["x".into(), "y".into()], "t", "N", "F");
        assert_eq!(bars.matches("<rect").count(), 2);
    }
}
