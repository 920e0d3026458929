//! Minimal SVG line charts for loss curves and F0 contours.

use std::fmt::Write as _;

use emovc::trainer::LossRecord;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// A named polyline. Non-finite y values break the line.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" stroke="black" fill="none"/>"#
    );
    for (v, y) in [(y0, bottom), (y1, top)] {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, left - 4.0, y + 4.0, tick(v));
    }
    for (v, x) in [(x0, left), (x1, right)] {
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, bottom + 16.0, tick(v));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 8.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in &ser.points {
            if !(x.is_finite() && y.is_finite()) {
                pen_down = false;
                continue;
            }
            let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, sx(x), sy(y));
            pen_down = true;
        }
        if !d.is_empty() {
            let _ = writeln!(s, r#"<path d="{}" stroke="{color}" fill="none" stroke-width="1.2"/>"#, d.trim_end());
        }
        let ly = top + 14.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{}</text>"#,
            right - 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 || (v != 0.0 && v.abs() < 0.01) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Cycle, emotion, adversarial and total losses against step.
pub fn loss_chart(log: &[LossRecord]) -> String {
    let col = |label: &str, f: fn(&LossRecord) -> f64| Series {
        label: label.into(),
        points: log.iter().map(|r| (r.step as f64, f(r))).collect(),
    };
    line_chart(
        "Training losses",
        "step",
        "loss",
        &[
            col("full", |r| r.full),
            col("cycle", |r| r.cyc),
            col("emotion", |r| r.emo),
            col("adv A->B", |r| r.adv_ab),
            col("adv B->A", |r| r.adv_ba),
        ],
    )
}

/// F0 tracks against time; unvoiced frames are gaps.
pub fn f0_chart(title: &str, frame_shift: f64, tracks: &[(&str, &[f64])]) -> String {
    let series: Vec<Series> = tracks
        .iter()
        .map(|(label, f0)| Series {
            label: (*label).into(),
            points: f0
                .iter()
                .enumerate()
                .map(|(t, &f)| (t as f64 * frame_shift, if f > 0.0 { f } else { f64::NAN }))
                .collect(),
        })
        .collect();
    line_chart(title, "time (s)", "F0 (Hz)", &series)
}

/// `x,<label>...` columns for each series sampled at the first series' x.
pub fn series_csv(series: &[Series]) -> String {
    let mut s = String::from("x");
    for ser in series {
        let _ = write!(s, ",{}", ser.label);
    }
    s.push('\n');
    let n = series.iter().map(|ser| ser.points.len()).max().unwrap_or(0);
    for i in 0..n {
        let x = series.iter().find_map(|ser| ser.points.get(i)).map_or(0.0, |p| p.0);
        let _ = write!(s, "{x}");
        for ser in series {
            let _ = write!(s, ",{}", ser.points.get(i).map_or(String::new(), |p| p.1.to_string()));
        }
        s.push('\n');
    }
    s
}
