//! Minimal SVG plot of success curves: p̂(t) against log t with Wilson bands.

use std::fmt::Write as _;

use sqm_core::dynamics::{CheckpointStat, SUCCESS_THRESHOLD};

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub struct Series<'a> {
    pub label: String,
    pub curve: &'a [CheckpointStat],
}

pub fn success_curves(title: &str, series: &[Series]) -> String {
    let ts = series
        .iter()
        .flat_map(|s| s.curve.iter().map(|c| c.t.log10()));
    let (lo, hi) = ts.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| {
        (a.min(t), b.max(t))
    });
    let (lo, hi) = if lo.is_finite() && hi > lo {
        (lo, hi)
    } else {
        (0.0, 1.0)
    };
    let x = |t: f64| MARGIN + (t.log10() - lo) / (hi - lo) * (W - 2.0 * MARGIN);
    let y = |p: f64| H - MARGIN - p * (H - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (MARGIN, W - MARGIN, y(0.0), y(1.0));
    let _ = writeln!(
        s,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let p = k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{p:.2}</text>"#,
            x0 - 6.0,
            y(p) + 4.0
        );
    }
    for e in lo.ceil() as i64..=hi.floor() as i64 {
        let px = x(10f64.powi(e as i32));
        let _ = writeln!(
            s,
            r#"<line x1="{px}" y1="{y0}" x2="{px}" y2="{}" stroke="black"/>"#,
            y0 + 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{px}" y="{}" text-anchor="middle">1e{e}</text>"#,
            y0 + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">t</text>"#,
        W / 2.0,
        H - 12.0
    );
    let yt = y(SUCCESS_THRESHOLD);
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{yt}" x2="{x1}" y2="{yt}" stroke="gray" stroke-dasharray="4 4"/>"#
    );
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let upper: Vec<String> = ser
            .curve
            .iter()
            .map(|c| format!("{:.2},{:.2}", x(c.t), y(c.ci_hi)))
            .collect();
        let lower: Vec<String> = ser
            .curve
            .iter()
            .rev()
            .map(|c| format!("{:.2},{:.2}", x(c.t), y(c.ci_lo)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = ser
            .curve
            .iter()
            .map(|c| format!("{:.2},{:.2}", x(c.t), y(c.p)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = 40.0 + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="12" height="3" fill="{color}"/>"#,
            x1 - 150.0,
            ly - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}">{}</text>"#,
            x1 - 132.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
