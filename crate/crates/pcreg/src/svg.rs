// SPDX-License-Identifier: MIT OR Apache-2.0

//! Static SVG panel of per-method means with one-sd error bars.

use std::fmt::Write;

use pcreg_core::sim::Aggregate;

/// Panels drawn by [`panel`], as `(metric, title)`.
pub const PANELS: [(&str, &str); 3] = [
    ("coef_mse", "MSE"),
    ("hausdorff", "Hausdorff distance"),
    ("count_error", "Count error"),
];

const PANEL_W: f64 = 300.0;
const PANEL_H: f64 = 300.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 40.0;
const COLOURS: [&str; 3] = ["#4e79a7", "#f28e2b", "#59a14f"];

/// Step of roughly `span / 5` from the 1-2-5 sequence.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    format!("{v:.decimals$}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// One panel per entry of [`PANELS`], one bar per method.
pub fn panel(agg: &Aggregate, title: &str) -> String {
    let width = PANEL_W * PANELS.len() as f64;
    let height = PANEL_H + 30.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    for (k, (metric, label)) in PANELS.iter().enumerate() {
        let x0 = k as f64 * PANEL_W;
        let y0 = 30.0;
        let plot_w = PANEL_W - LEFT - RIGHT;
        let plot_h = PANEL_H - TOP - BOTTOM;
        let bars: Vec<(&str, f64, f64)> = agg
            .methods
            .iter()
            .filter_map(|m| m.get(metric).map(|s| (m.method.as_str(), s.mean, s.sd)))
            .collect();
        let top = bars.iter().map(|&(_, m, sd)| m + sd).fold(0.0, f64::max);
        let step = tick_step(if top > 0.0 { top } else { 1.0 });
        let ymax = ((if top > 0.0 { top } else { 1.0 }) / step).ceil() * step;
        let sy = |v: f64| y0 + TOP + plot_h * (1.0 - v / ymax);

        let _ = writeln!(s, r#"<g id="{metric}">"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x0 + LEFT + plot_w / 2.0,
            y0 + TOP - 12.0,
            escape(label)
        );
        let mut t = 0.0;
        while t <= ymax + step * 1e-9 {
            let y = sy(t);
            let _ = writeln!(
                s,
                r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
                x0 + LEFT,
                x0 + LEFT + plot_w,
                x0 + LEFT - 6.0,
                y + 4.0,
                fmt_tick(t, step)
            );
            t += step;
        }
        let slot = plot_w / bars.len().max(1) as f64;
        for (i, &(name, mean, sd)) in bars.iter().enumerate() {
            let cx = x0 + LEFT + slot * (i as f64 + 0.5);
            let bw = slot * 0.6;
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{bw:.1}" height="{:.1}" fill="{}"><title>{name}: {mean:.2} ({sd:.2})</title></rect>"#,
                cx - bw / 2.0,
                sy(mean),
                sy(0.0) - sy(mean),
                COLOURS[i % COLOURS.len()]
            );
            let (lo, hi) = (sy((mean - sd).max(0.0)), sy(mean + sd));
            let _ = writeln!(
                s,
                r#"<path d="M{cx:.1} {lo:.1}V{hi:.1}M{:.1} {lo:.1}H{:.1}M{:.1} {hi:.1}H{:.1}" stroke="black" fill="none"/>"#,
                cx - 6.0,
                cx + 6.0,
                cx - 6.0,
                cx + 6.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                y0 + TOP + plot_h + 18.0,
                escape(name)
            );
        }
        let _ = writeln!(
            s,
            r#"<path d="M{:.1} {:.1}V{:.1}H{:.1}" stroke="black" fill="none"/>"#,
            x0 + LEFT,
            y0 + TOP,
            y0 + TOP + plot_h,
            x0 + LEFT + plot_w
        );
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}
