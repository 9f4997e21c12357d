//! Dependency-free SVG line plots of sweep results.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::CliError;

/// One point: the swept coordinate, the series it belongs to, and sigma.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub x: f64,
    /// Loss parameter; picks the colour.
    pub loss: f64,
    /// Remaining cell parameters; points sharing `loss` and `group` form one
    /// polyline.
    pub group: String,
    pub sigma: f64,
}

const COLORS: [&str; 6] = ["black", "red", "blue", "green", "orange", "purple"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

fn key(x: f64) -> u64 {
    // total order on finite floats, positive and negative
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | 1 << 63
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.2}")
}

fn tick_label(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Renders sigma against `x_label`, one polyline per series. Series are
/// coloured black, red, blue (then green, orange, purple) in increasing
/// order of the loss parameter.
pub fn emit_svg(points: &[PlotPoint], x_label: &str) -> Result<String, CliError> {
    if points.is_empty() {
        return Err(CliError::Plot("no rows to plot".into()));
    }
    if let Some(p) = points
        .iter()
        .find(|p| !p.x.is_finite() || !p.sigma.is_finite())
    {
        return Err(CliError::Plot(format!(
            "non-finite value in row (x = {}, sigma = {})",
            p.x, p.sigma
        )));
    }

    let mut losses: Vec<f64> = points.iter().map(|p| p.loss).collect();
    losses.sort_by_key(|&l| key(l));
    losses.dedup();
    let mut series: BTreeMap<(u64, &str), Vec<(f64, f64)>> = BTreeMap::new();
    for p in points {
        series
            .entry((key(p.loss), p.group.as_str()))
            .or_default()
            .push((p.x, p.sigma));
    }
    for pts in series.values_mut() {
        pts.sort_by_key(|&(x, _)| key(x));
    }

    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y1 = 0.0f64;
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y1 = y1.max(p.sigma);
    }
    if x1 == x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 == 0.0 {
        y1 = 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + plot_h - y / y1 * plot_h;

    let mut s = String::new();
    let w = &mut s;
    writeln!(
        w,
        r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#
    )
    .unwrap();
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(
        w,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )
    .unwrap();
    writeln!(
        w,
        r#"<g stroke="black" stroke-width="1" fill="none"><line x1="{l}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{l}" y1="{b}" x2="{l}" y2="{t}"/></g>"#,
        l = fmt(LEFT),
        r = fmt(LEFT + plot_w),
        b = fmt(TOP + plot_h),
        t = fmt(TOP)
    )
    .unwrap();

    writeln!(
        w,
        r#"<g font-family="sans-serif" font-size="11" fill="black">"#
    )
    .unwrap();
    for k in 0..=4 {
        let xv = x0 + (x1 - x0) * k as f64 / 4.0;
        let yv = y1 * k as f64 / 4.0;
        let (px, py) = (sx(xv), sy(yv));
        let base = TOP + plot_h;
        writeln!(
            w,
            r#"<line x1="{px}" y1="{base}" x2="{px}" y2="{t}" stroke="black"/><text x="{px}" y="{ty}" text-anchor="middle">{lab}</text>"#,
            px = fmt(px),
            base = fmt(base),
            t = fmt(base + 5.0),
            ty = fmt(base + 18.0),
            lab = tick_label(xv)
        )
        .unwrap();
        writeln!(
            w,
            r#"<line x1="{l}" y1="{py}" x2="{l5}" y2="{py}" stroke="black"/><text x="{tx}" y="{ty}" text-anchor="end">{lab}</text>"#,
            l = fmt(LEFT),
            l5 = fmt(LEFT - 5.0),
            py = fmt(py),
            tx = fmt(LEFT - 8.0),
            ty = fmt(py + 4.0),
            lab = tick_label(yv)
        )
        .unwrap();
    }
    writeln!(
        w,
        r#"<text x="{x}" y="{y}" text-anchor="middle" font-size="13">{x_label}</text>"#,
        x = fmt(LEFT + plot_w / 2.0),
        y = fmt(HEIGHT - 15.0)
    )
    .unwrap();
    writeln!(
        w,
        r#"<text x="18" y="{y}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {y})">time-averaged sigma</text>"#,
        y = fmt(TOP + plot_h / 2.0)
    )
    .unwrap();
    writeln!(w, "</g>").unwrap();

    for ((loss_key, group), pts) in &series {
        let idx = losses.iter().position(|&l| key(l) == *loss_key).unwrap();
        let color = COLORS[idx % COLORS.len()];
        if pts.len() == 1 {
            let (x, y) = pts[0];
            writeln!(
                w,
                r#"<circle cx="{}" cy="{}" r="3" fill="{color}"/>"#,
                fmt(sx(x)),
                fmt(sy(y))
            )
            .unwrap();
        } else {
            let coords: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{},{}", fmt(sx(x)), fmt(sy(y))))
                .collect();
            writeln!(
                w,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
                coords.join(" "),
                escape(group)
            )
            .unwrap();
        }
    }

    writeln!(w, r#"<g font-family="sans-serif" font-size="11">"#).unwrap();
    for (k, &loss) in losses.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * k as f64;
        let color = COLORS[k % COLORS.len()];
        writeln!(
            w,
            r#"<line x1="{a}" y1="{y}" x2="{b}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{c}" y="{ty}">F = {loss}</text>"#,
            a = fmt(WIDTH - RIGHT + 15.0),
            b = fmt(WIDTH - RIGHT + 40.0),
            c = fmt(WIDTH - RIGHT + 46.0),
            y = fmt(y),
            ty = fmt(y + 4.0),
        )
        .unwrap();
    }
    writeln!(w, "</g>").unwrap();
    writeln!(w, "</svg>").unwrap();
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, loss: f64, sigma: f64) -> PlotPoint {
        PlotPoint {
            x,
            loss,
            group: String::new(),
            sigma,
        }
    }

    #[test]
    fn three_series_in_colour_order() {
        let mut pts = Vec::new();
        for &loss in &[3.0, 1.0, 1.5] {
            for k in (1..=19).rev() {
                pts.push(pt(0.05 * k as f64, loss, 1.0 / k as f64));
            }
        }
        let svg = emit_svg(&pts, "mu").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        let order: Vec<usize> = ["\"black\"", "\"red\"", "\"blue\""]
            .iter()
            .map(|c| {
                svg.find(&format!("stroke={c} stroke-width=\"1.5\""))
                    .unwrap()
            })
            .collect();
        assert!(order[0] < order[1] && order[1] < order[2]);
        assert!(svg.contains("F = 1.5"));

        // x coordinates increase along each polyline
        for line in svg.lines().filter(|l| l.starts_with("<polyline")) {
            let pts = line
                .split("points=\"")
                .nth(1)
                .unwrap()
                .split('"')
                .next()
                .unwrap();
            let xs: Vec<f64> = pts
                .split(' ')
                .map(|p| p.split(',').next().unwrap().parse().unwrap())
                .collect();
            assert!(xs.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn single_row_is_a_marker() {
        let svg = emit_svg(&[pt(0.3, 1.0, 0.2)], "mu").unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains("version=\"1.1\""));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(emit_svg(&[], "mu").is_err());
        let err = emit_svg(&[pt(0.3, 1.0, 0.2), pt(0.4, 1.0, f64::NAN)], "mu").unwrap_err();
        assert!(err.to_string().contains("non-finite"));
    }

    #[test]
    fn deterministic() {
        let pts = vec![pt(0.1, 1.0, 0.5), pt(0.2, 1.0, 0.25)];
        assert_eq!(emit_svg(&pts, "mu").unwrap(), emit_svg(&pts, "mu").unwrap());
    }
}
