//! Minimal self-contained SVG charts. Output is deterministic text.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, esc(title));
    s
}

fn axes(s: &mut String, x_label: &str, y_label: &str) {
    let (x0, y0, x1, y1) = (MARGIN, H - MARGIN, W - MARGIN / 2.0, MARGIN);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 14.0, esc(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        esc(y_label)
    );
}

/// Vertical bars with their values printed above.
pub fn bar_chart(title: &str, labels: &[String], values: &[f64], y_label: &str) -> String {
    let mut s = open(title);
    axes(&mut s, "", y_label);
    let max = values.iter().copied().fold(0.0f64, f64::max).max(1e-12);
    let n = values.len().max(1) as f64;
    let plot_w = W - 1.5 * MARGIN;
    let plot_h = H - 2.0 * MARGIN - 10.0;
    let slot = plot_w / n;
    for (i, (l, &v)) in labels.iter().zip(values).enumerate() {
        let h = plot_h * v / max;
        let x = MARGIN + slot * i as f64 + slot * 0.15;
        let y = H - MARGIN - h;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{h:.2}" fill="{}"/>"#,
            slot * 0.7,
            PALETTE[i % PALETTE.len()]
        );
        let cx = x + slot * 0.35;
        let _ = writeln!(s, r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y - 4.0, v);
        let _ = writeln!(s, r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, H - MARGIN + 16.0, esc(l));
    }
    s.push_str("</svg>\n");
    s
}

/// Matrix heatmap, row `i` drawn top to bottom, counts printed in each cell.
pub fn heatmap(title: &str, labels: &[String], cells: &[u64], x_label: &str, y_label: &str) -> String {
    let k = labels.len();
    let mut s = open(title);
    let size = (H - 2.0 * MARGIN).min(W - 2.0 * MARGIN);
    let cell = size / k.max(1) as f64;
    let left = (W - size) / 2.0;
    let top = MARGIN;
    let row_max: Vec<u64> = (0..k).map(|i| cells[i * k..(i + 1) * k].iter().copied().max().unwrap_or(0)).collect();
    for i in 0..k {
        for j in 0..k {
            let v = cells[i * k + j];
            let f = if row_max[i] == 0 { 0.0 } else { v as f64 / row_max[i] as f64 };
            let shade = (255.0 * (1.0 - 0.8 * f)).round() as u8;
            let (x, y) = (left + cell * j as f64, top + cell * i as f64);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{cell:.2}" height="{cell:.2}" fill="rgb({shade},{shade},255)" stroke="gray"/>"#
            );
            let color = if f > 0.6 { "white" } else { "black" };
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" fill="{color}">{v}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 6.0,
            top + cell * (i as f64 + 0.5) + 4.0,
            esc(&labels[i])
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            left + cell * (i as f64 + 0.5),
            top + size + 16.0,
            esc(&labels[i])
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, esc(x_label));
    let _ = writeln!(
        s,
        r#"<text x="{0}" y="{1}" text-anchor="middle" transform="rotate(-90 {0} {1})">{2}</text>"#,
        left - 36.0,
        top + size / 2.0,
        esc(y_label)
    );
    s.push_str("</svg>\n");
    s
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Polylines over fixed axis ranges, with a legend. `diagonal` adds a dashed y = x.
pub fn line_plot(
    title: &str,
    series: &[Series],
    x_range: (f64, f64),
    y_range: (f64, f64),
    labels: (&str, &str),
    diagonal: bool,
) -> String {
    let mut s = open(title);
    axes(&mut s, labels.0, labels.1);
    let (pw, ph) = (W - 1.5 * MARGIN, H - 2.0 * MARGIN);
    let span = |r: (f64, f64)| if r.1 > r.0 { r.1 - r.0 } else { 1.0 };
    let px = |x: f64| MARGIN + pw * (x - x_range.0) / span(x_range);
    let py = |y: f64| H - MARGIN - ph * (y - y_range.0) / span(y_range);
    for (v, anchor) in [(x_range.0, "start"), (x_range.1, "end")] {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{v:.3}</text>"#, px(v), H - MARGIN + 16.0);
    }
    for v in [y_range.0, y_range.1] {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, MARGIN - 4.0, py(v) + 4.0);
    }
    if diagonal {
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 4"/>"#,
            px(x_range.0),
            py(y_range.0),
            px(x_range.1),
            py(y_range.1)
        );
    }
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" "));
        let ly = MARGIN + 16.0 * i as f64;
        let lx = W - MARGIN * 4.0;
        let _ = writeln!(s, r#"<rect x="{lx}" y="{}" width="12" height="4" fill="{color}"/>"#, ly - 4.0);
        let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 16.0, esc(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}
