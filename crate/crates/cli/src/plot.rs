//! Tiny self-contained SVG line-plot renderer for the sum-rate curves; no
//! plotting dependency needed to look at results.

use hybrid_precoding::evaluation::CurvePoint;

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 560.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 180.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub fn curve_svg(curve: &[CurvePoint], title: &str) -> String {
    let n_algs = curve.first().map_or(0, |p| p.stats.len());
    let x_min = curve.first().map_or(0.0, |p| p.snr_db);
    let x_max = curve.last().map_or(1.0, |p| p.snr_db);
    let x_span = (x_max - x_min).max(1e-9);
    let y_max = curve
        .iter()
        .flat_map(|p| p.stats.iter().map(|s| s.mean_sum_rate))
        .fold(1.0f64, f64::max)
        * 1.05;

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x_of = |snr: f64| MARGIN_L + (snr - x_min) / x_span * plot_w;
    let y_of = |rate: f64| MARGIN_T + (1.0 - rate / y_max) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        title
    ));

    // Axes with ticks and grid lines.
    for point in curve {
        let x = x_of(point.snr_db);
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#dddddd\"/>\n",
            MARGIN_T,
            MARGIN_T + plot_h
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_T + plot_h + 20.0,
            point.snr_db
        ));
    }
    let y_ticks = 6;
    for i in 0..=y_ticks {
        let rate = y_max * i as f64 / y_ticks as f64;
        let y = y_of(rate);
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\"/>\n",
            MARGIN_L,
            MARGIN_L + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{:.0}</text>\n",
            MARGIN_L - 8.0,
            y + 4.0,
            rate
        ));
    }
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">SNR (dB)</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">average sum rate (bits per channel use)</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    ));

    // One polyline per algorithm plus a legend entry.
    for ai in 0..n_algs {
        let color = PALETTE[ai % PALETTE.len()];
        let pts: Vec<String> = curve
            .iter()
            .map(|p| format!("{:.2},{:.2}", x_of(p.snr_db), y_of(p.stats[ai].mean_sum_rate)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            pts.join(" ")
        ));
        for p in curve {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.4\" fill=\"{color}\"/>\n",
                x_of(p.snr_db),
                y_of(p.stats[ai].mean_sum_rate)
            ));
        }
        let ly = MARGIN_T + 16.0 + 20.0 * ai as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            MARGIN_L + plot_w + 12.0,
            MARGIN_L + plot_w + 36.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            MARGIN_L + plot_w + 42.0,
            ly + 4.0,
            curve[0].stats[ai].algorithm
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
