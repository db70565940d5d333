//! Line chart of error against protection budget, written as plain SVG.
//!
//! The x axis is log10(k). A budget of 0 has no logarithm, so it is drawn
//! one decade left of the smallest positive budget and labelled `0`.

use std::fmt::Write;

pub struct Series {
    pub name: String,
    /// `(budget, value)`, budgets ascending.
    pub points: Vec<(usize, f64)>,
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn log_position(k: usize, smallest_positive: Option<usize>) -> f64 {
    if k > 0 {
        (k as f64).log10()
    } else {
        smallest_positive.map_or(0.0, |m| (m as f64).log10()) - 1.0
    }
}

fn tick_label(v: f64, top: f64) -> String {
    if top >= 0.01 && top < 1e4 {
        format!("{v:.3}")
    } else {
        format!("{v:.1e}")
    }
}

pub fn render(series: &[Series], budgets: &[usize], metric: &str) -> String {
    let smallest = budgets.iter().copied().filter(|&k| k > 0).min();
    let xs: Vec<f64> = budgets.iter().map(|&k| log_position(k, smallest)).collect();
    let (x_lo, x_hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let (x_lo, x_hi) = if x_hi > x_lo { (x_lo, x_hi) } else { (x_lo - 1.0, x_lo + 1.0) };

    let y_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .fold(0.0f64, f64::max);
    let y_top = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |k: usize| LEFT + (log_position(k, smallest) - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |v: f64| TOP + plot_h - v / y_top * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">Mean {} vs protection budget</text>"#,
        LEFT + plot_w / 2.0,
        escape(metric)
    );

    // axes
    let (x0, x1, y0, y1) = (LEFT, LEFT + plot_w, TOP + plot_h, TOP);
    let _ = writeln!(s, r#"<g class="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/>"#);
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g class="x-ticks" text-anchor="middle">"#);
    for &k in budgets {
        let x = px(k);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text class="x-tick" x="{x:.2}" y="{:.2}">{k}</text>"#,
            y0 + 5.0,
            y0 + 20.0
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">protection budget k (log scale)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 20.0
    );

    let _ = writeln!(s, r#"<g class="y-ticks" text-anchor="end">"#);
    for i in 0..=5 {
        let v = y_top * i as f64 / 5.0;
        let y = py(v);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}">{}</text>"##,
            x0,
            x0 - 6.0,
            y + 4.0,
            tick_label(v, y_top)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">mean {} (lower is better)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(metric)
    );

    for (i, series) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let name = escape(&series.name);
        let points: Vec<String> = series
            .points
            .iter()
            .map(|&(k, v)| format!("{:.2},{:.2}", px(k), py(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-method="{name}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        for &(k, v) in &series.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(k),
                py(v)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = x1 + 20.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{name}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}
