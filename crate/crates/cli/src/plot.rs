//! Standalone SVG charts. Each file embeds its plotted data as comments.

use std::fmt::Write;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
}

/// One curve; each point is `(x, y, err)`, drawn as y ± err.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorStyle {
    Band,
    Bars,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Comment-safe text (no `--`).
fn comment(s: &str) -> String {
    s.replace("--", "- -")
}

/// Round tick positions covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return vec![lo];
    }
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{:.4}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let (mut x0, mut x1) = bounds(xs);
        let (mut y0, mut y1) = bounds(ys);
        if x1 <= x0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 <= y0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        Self { x0, x1, y0: y0 - pad, y1: y1 + pad }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn open(out: &mut String, chart: &Chart, frame: &Frame) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, (LEFT + WIDTH - RIGHT) / 2.0, escape(chart.title));
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(out, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
    for x in nice_ticks(frame.x0, frame.x1, 6) {
        let px = frame.px(x);
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{}" stroke="black"/>"#, b + 5.0);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, b + 18.0, fmt_tick(x));
    }
    for y in nice_ticks(frame.y0, frame.y1, 6) {
        let py = frame.py(y);
        let _ = writeln!(out, r##"<line x1="{l}" y1="{py:.2}" x2="{r}" y2="{py:.2}" stroke="#e0e0e0"/>"##);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, l - 6.0, py + 4.0, fmt_tick(y));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (l + r) / 2.0, HEIGHT - 18.0, escape(chart.x_label));
    let _ = writeln!(
        out,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
        (t + b) / 2.0,
        escape(chart.y_label)
    );
}

fn legend(out: &mut String, row: usize, color: &str, label: &str) {
    let y = TOP + 14.0 + 18.0 * row as f64;
    let x = WIDTH - RIGHT + 14.0;
    let _ = writeln!(out, r#"<rect x="{x}" y="{}" width="12" height="12" fill="{color}"/>"#, y - 10.0);
    let _ = writeln!(out, r#"<text x="{}" y="{y}">{}</text>"#, x + 18.0, escape(label));
}

pub fn line_chart(chart: &Chart, series: &[Series], style: ErrorStyle) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().flat_map(|p| [p.1 - p.2, p.1 + p.2]));
    let frame = Frame::new(xs.clone().collect::<Vec<_>>().into_iter(), ys.clone().collect::<Vec<_>>().into_iter());
    let mut out = String::new();
    open(&mut out, chart, &frame);
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(out, "<!-- series {}: x y err -->", comment(&s.name));
        for (x, y, e) in &s.points {
            let _ = writeln!(out, "<!-- {x:?} {y:?} {e:?} -->");
        }
        match style {
            ErrorStyle::Band => {
                let upper = s.points.iter().map(|(x, y, e)| format!("{:.2},{:.2}", frame.px(*x), frame.py(y + e)));
                let lower = s.points.iter().rev().map(|(x, y, e)| format!("{:.2},{:.2}", frame.px(*x), frame.py(y - e)));
                let poly: Vec<String> = upper.chain(lower).collect();
                let _ = writeln!(out, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, poly.join(" "));
            }
            ErrorStyle::Bars => {
                for (x, y, e) in &s.points {
                    let px = frame.px(*x);
                    let (top, bottom) = (frame.py(y + e), frame.py(y - e));
                    let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{top:.2}" x2="{px:.2}" y2="{bottom:.2}" stroke="{color}"/>"#);
                    for yy in [top, bottom] {
                        let _ = writeln!(
                            out,
                            r#"<line x1="{:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="{color}"/>"#,
                            px - 4.0,
                            px + 4.0
                        );
                    }
                }
            }
        }
        let line: Vec<String> = s.points.iter().map(|(x, y, _)| format!("{:.2},{:.2}", frame.px(*x), frame.py(*y))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" "));
        for (x, y, _) in &s.points {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, frame.px(*x), frame.py(*y));
        }
        legend(&mut out, k, color, &s.name);
    }
    out.push_str("</svg>\n");
    out
}

/// Linear blend from dark blue (first group) to yellow (last).
fn ramp(t: f64) -> String {
    let (a, b) = ([68.0, 1.0, 84.0], [253.0, 231.0, 37.0]);
    let c: Vec<u8> = (0..3).map(|i| (a[i] + (b[i] - a[i]) * t).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Points `(x, y, group)`, colored by group on a sequential ramp.
pub fn scatter_chart(chart: &Chart, points: &[(f64, f64, usize)], group_name: &str) -> String {
    let frame = Frame::new(
        points.iter().map(|p| p.0).collect::<Vec<_>>().into_iter(),
        points.iter().map(|p| p.1).collect::<Vec<_>>().into_iter(),
    );
    let max_group = points.iter().map(|p| p.2).max().unwrap_or(0);
    let color = |g: usize| ramp(if max_group == 0 { 0.0 } else { g as f64 / max_group as f64 });
    let mut out = String::new();
    open(&mut out, chart, &frame);
    let _ = writeln!(out, "<!-- points: x y {} -->", comment(group_name));
    for (x, y, g) in points {
        let _ = writeln!(out, "<!-- {x:?} {y:?} {g} -->");
    }
    for (x, y, g) in points {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" fill-opacity="0.8"/>"#,
            frame.px(*x),
            frame.py(*y),
            color(*g)
        );
    }
    let shown: Vec<usize> = if max_group < 8 { (0..=max_group).collect() } else { (0..8).map(|k| k * max_group / 7).collect() };
    for (row, g) in shown.into_iter().enumerate() {
        legend(&mut out, row, &color(g), &format!("{group_name} {g}"));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHART: Chart = Chart { title: "t", x_label: "x", y_label: "y" };

    #[test]
    fn ticks_are_round_and_cover_range() {
        assert_eq!(nice_ticks(0.0, 10.0, 5), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let t = nice_ticks(3.2, 71.0, 6);
        assert!(t.first().unwrap() >= &3.2 && t.last().unwrap() <= &71.0);
        assert_eq!(nice_ticks(1.0, 1.0, 5), vec![1.0]);
    }

    #[test]
    fn line_chart_embeds_data() {
        let s = Series { name: "a<b".into(), points: vec![(1.0, 2.0, 0.0), (2.0, 3.5, 0.25)] };
        let svg = line_chart(&CHART, &[s], ErrorStyle::Band);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("<!-- 2.0 3.5 0.25 -->"));
        assert!(svg.contains("a&lt;b"));
        let bars = line_chart(&CHART, &[Series { name: "m".into(), points: vec![(50.0, 4.0, 1.0)] }], ErrorStyle::Bars);
        assert!(bars.contains("<!-- 50.0 4.0 1.0 -->"));
    }

    #[test]
    fn scatter_plots_every_point_once() {
        let pts: Vec<(f64, f64, usize)> = (0..30).map(|i| (i as f64, (i * i) as f64, i / 10)).collect();
        let svg = scatter_chart(&CHART, &pts, "step");
        assert_eq!(svg.matches("<circle").count(), 30);
        assert_eq!(svg.lines().filter(|l| l.starts_with("<!-- ") && !l.contains("points")).count(), 30);
    }
}
