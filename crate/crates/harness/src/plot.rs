//! Static SVG line charts for the sweep outputs. No external tooling: the
//! charts are assembled as plain SVG text.

use std::collections::BTreeMap;
use std::path::Path;

use crate::runner::{BaseScaleRow, EigengapRow};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#393b79", "#637939",
];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn render_chart(title: &str, x_label: &str, series: &[Series]) -> String {
    let xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    let (xmin, xmax) = xs
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = (xmax - xmin).max(1e-12);
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let to_x = |v: f64| MARGIN_L + (v - xmin) / span * plot_w;
    let to_y = |v: f64| MARGIN_T + (1.0 - v.clamp(0.0, 1.0)) * plot_h;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n",
        W = WIDTH,
        H = HEIGHT
    ));
    svg.push_str(&format!(
        "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        WIDTH, HEIGHT
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        title
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = MARGIN_L,
        r = MARGIN_L + plot_w,
        t = MARGIN_T,
        b = MARGIN_T + plot_h
    ));
    // y ticks at 0, 0.25, 0.5, 0.75, 1
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let y = to_y(v);
        svg.push_str(&format!(
            "<line x1=\"{l}\" y1=\"{y}\" x2=\"{r}\" y2=\"{y}\" stroke=\"#dddddd\"/>\n<text x=\"{tx}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{v:.2}</text>\n",
            l = MARGIN_L,
            r = MARGIN_L + plot_w,
            y = y,
            tx = MARGIN_L - 8.0,
            ty = y + 4.0,
            v = v
        ));
    }
    // x ticks at the data points of the first series
    if let Some(first) = series.first() {
        for &(x, _) in &first.points {
            let px = to_x(x);
            svg.push_str(&format!(
                "<text x=\"{px}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{x}</text>\n",
                px = px,
                ty = MARGIN_T + plot_h + 18.0,
                x = x
            ));
        }
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0,
        x_label
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">MCC</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    ));
    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", to_x(x), to_y(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
            color,
            pts.join(" ")
        ));
        for &(x, y) in &s.points {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\"/>\n",
                to_x(x),
                to_y(y),
                color
            ));
        }
        let ly = MARGIN_T + 16.0 * idx as f64;
        svg.push_str(&format!(
            "<line x1=\"{x1}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"{c}\" stroke-width=\"2\"/>\n<text x=\"{tx}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"12\">{label}</text>\n",
            x1 = WIDTH - MARGIN_R + 10.0,
            x2 = WIDTH - MARGIN_R + 30.0,
            y = ly,
            c = color,
            tx = WIDTH - MARGIN_R + 36.0,
            ty = ly + 4.0,
            label = s.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn plot_eigengap(dir: &Path, rows: &[EigengapRow]) -> anyhow::Result<()> {
    let mut by_series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        by_series
            .entry(format!("{} {} ({})", r.manifold, r.method.name(), r.chart))
            .or_default()
            .push((r.r_s, r.mcc_mean));
    }
    let series: Vec<Series> = by_series
        .into_iter()
        .map(|(label, mut points)| {
            points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            Series { label, points }
        })
        .collect();
    let svg = render_chart("MCC vs source decay", "r_s", &series);
    std::fs::write(dir.join("sweep_eigengap.svg"), svg)?;
    Ok(())
}

pub fn plot_base_scale(dir: &Path, rows: &[BaseScaleRow]) -> anyhow::Result<()> {
    let mut by_series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        by_series
            .entry(format!("{} ({})", r.manifold, r.chart))
            .or_default()
            .push((r.b, r.mcc_mean));
    }
    let series: Vec<Series> = by_series
        .into_iter()
        .map(|(label, mut points)| {
            points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            Series { label, points }
        })
        .collect();
    let svg = render_chart("MCC vs base scale", "b", &series);
    std::fs::write(dir.join("sweep_base_scale.svg"), svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_renders_valid_svg_skeleton() {
        let series = vec![Series {
            label: "demo".into(),
            points: vec![(0.6, 0.4), (0.85, 0.9), (0.999, 1.0)],
        }];
        let svg = render_chart("t", "x", &series);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polyline"));
    }
}
