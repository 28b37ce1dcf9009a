//! Minimal static SVG charts: bar charts with symmetric bounds (correlograms)
//! and line charts with optional vertical markers.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 0.5, x0 + 0.5) };
        let (y0, y1) = if y1 > y0 { (y0, y1) } else { (y0 - 1.0, y0 + 1.0) };
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    s.push_str("<style>.bar{fill:#4a6fa5}.bound{stroke:#c0392b;stroke-dasharray:6 4}.axis{stroke:#333}.series{fill:none;stroke:#2c3e50;stroke-width:1.2}.break{stroke:#27ae60;stroke-dasharray:4 3}text{font-family:sans-serif;font-size:12px}</style>\n");
    let _ = writeln!(
        s,
        r#"<text class="title" x="{}" y="20" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn axes(s: &mut String, f: &Frame, x_ticks: &[(f64, String)]) {
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
        MARGIN,
        HEIGHT - MARGIN,
        WIDTH - MARGIN,
        HEIGHT - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
        MARGIN, MARGIN, MARGIN, HEIGHT - MARGIN
    );
    for (x, label) in x_ticks {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            f.px(*x),
            HEIGHT - MARGIN + 16.0,
            escape(label)
        );
    }
    for y in [f.y0, f.y1] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"#,
            MARGIN - 4.0,
            f.py(y) + 4.0,
            y
        );
    }
}

fn ticks(xs: &[i64]) -> Vec<(f64, String)> {
    match (xs.first(), xs.last()) {
        (Some(&a), Some(&b)) if a != b => vec![(a as f64, a.to_string()), (b as f64, b.to_string())],
        (Some(&a), _) => vec![(a as f64, a.to_string())],
        _ => Vec::new(),
    }
}

/// One `<rect class="bar">` per value, and two `<line class="bound">` at
/// `+bound` and `-bound` when a bound is given.
pub fn bar_chart(title: &str, xs: &[i64], ys: &[f64], bound: Option<f64>) -> String {
    let finite = ys.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(0.0_f64, f64::min).min(-bound.unwrap_or(0.0));
    let hi = finite.fold(0.0_f64, f64::max).max(bound.unwrap_or(0.0));
    let (xmin, xmax) = match (xs.first(), xs.last()) {
        (Some(&a), Some(&b)) => (a as f64 - 0.5, b as f64 + 0.5),
        _ => (0.0, 1.0),
    };
    let f = Frame::new(xmin, xmax, lo, hi);
    let mut s = open(title);
    axes(&mut s, &f, &ticks(xs));
    let w = ((f.px(1.0) - f.px(0.0)) * 0.6).max(1.0);
    for (x, y) in xs.iter().zip(ys) {
        let y = if y.is_finite() { *y } else { 0.0 };
        let (top, bottom) = (f.py(y.max(0.0)), f.py(y.min(0.0)));
        let _ = writeln!(
            s,
            r#"<rect class="bar" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
            f.px(*x as f64) - w / 2.0,
            top,
            w,
            (bottom - top).max(0.0)
        );
    }
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
        MARGIN,
        f.py(0.0),
        WIDTH - MARGIN,
        f.py(0.0)
    );
    if let Some(b) = bound {
        for level in [b, -b] {
            let _ = writeln!(
                s,
                r#"<line class="bound" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
                MARGIN,
                f.py(level),
                WIDTH - MARGIN,
                f.py(level)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// One `<polyline class="series">` per contiguous non-missing run of each
/// series, plus a `<line class="break">` at each marker time.
pub fn line_chart(title: &str, start_time: i64, series: &[(&str, &[f64])], markers: &[i64]) -> String {
    let len = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let xs: Vec<i64> = (0..len as i64).map(|i| start_time + i).collect();
    let all = series.iter().flat_map(|(_, v)| v.iter()).copied().filter(|v| v.is_finite());
    let lo = all.clone().fold(f64::INFINITY, f64::min);
    let hi = all.fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let f = Frame::new(
        start_time as f64,
        (start_time + len.max(1) as i64 - 1) as f64,
        lo,
        hi,
    );
    let mut s = open(title);
    axes(&mut s, &f, &ticks(&xs));
    for (name, values) in series {
        let mut run: Vec<String> = Vec::new();
        let flush = |run: &mut Vec<String>, s: &mut String| {
            if !run.is_empty() {
                let _ = writeln!(
                    s,
                    r#"<polyline class="series" data-name="{}" points="{}"/>"#,
                    escape(name),
                    run.join(" ")
                );
                run.clear();
            }
        };
        for (i, v) in values.iter().enumerate() {
            if v.is_finite() {
                run.push(format!("{:.2},{:.2}", f.px((start_time + i as i64) as f64), f.py(*v)));
            } else {
                flush(&mut run, &mut s);
            }
        }
        flush(&mut run, &mut s);
    }
    for m in markers {
        let _ = writeln!(
            s,
            r#"<line class="break" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/>"#,
            MARGIN,
            HEIGHT - MARGIN,
            x = f.px(*m as f64)
        );
    }
    s.push_str("</svg>\n");
    s
}
