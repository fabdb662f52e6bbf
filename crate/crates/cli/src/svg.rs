//! Static bar charts with error bars.

use std::fmt::Write;

pub struct Bar {
    pub name: String,
    pub value: f64,
    /// Half-length of the error bar.
    pub err: f64,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders one bar per entry. Negative values are drawn at 0; error bars
/// are centered on the raw value and clipped to the plot area.
pub fn bar_chart(title: &str, bars: &[Bar]) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let top_value = bars
        .iter()
        .map(|b| b.value.max(0.0) + b.err.abs())
        .fold(0.0, f64::max);
    let y_max = if top_value > 0.0 && top_value.is_finite() { top_value * 1.05 } else { 1.0 };
    let y_of = |v: f64| TOP + plot_h * (1.0 - (v / y_max).clamp(0.0, 1.0));
    let slot = plot_w / bars.len().max(1) as f64;
    let bar_w = slot * 0.6;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, "<!-- generated by dfi-cli {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        "<style>.bar{{fill:#4c72b0}}.errbar{{stroke:#222;stroke-width:1.5}}.axis{{stroke:#000}}text{{font-family:sans-serif;font-size:12px}}</style>"
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="28" text-anchor="middle" style="font-size:16px">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let base = y_of(0.0);
    let _ = writeln!(s, r#"<line class="axis" x1="{LEFT}" y1="{base}" x2="{}" y2="{base}"/>"#, WIDTH - RIGHT);
    let _ = writeln!(s, r#"<line class="axis" x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{base}"/>"#);
    for k in 0..=4 {
        let v = y_max * k as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{:.3}</text>"#, LEFT - 6.0, y + 4.0, v);
    }
    for (i, b) in bars.iter().enumerate() {
        let cx = LEFT + slot * (i as f64 + 0.5);
        let shown = if b.value.is_finite() { b.value.max(0.0) } else { 0.0 };
        let y = y_of(shown);
        let _ = writeln!(
            s,
            r#"<rect class="bar" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"><title>{}: {}</title></rect>"#,
            cx - bar_w / 2.0,
            y,
            bar_w,
            base - y,
            escape(&b.name),
            b.value
        );
        let (lo, hi) = (y_of(b.value - b.err.abs()), y_of(b.value + b.err.abs()));
        let _ = writeln!(s, r#"<line class="errbar" x1="{cx:.2}" y1="{lo:.2}" x2="{cx:.2}" y2="{hi:.2}"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            base + 18.0,
            escape(&b.name)
        );
    }
    s.push_str("</svg>\n");
    s
}
