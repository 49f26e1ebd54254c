//! Self-contained SVG convergence plots: one mean line per series with a
//! ±1-standard-deviation band, linear or log-scale vertical axis. Output is
//! a pure function of the input, so files are byte-reproducible.

use crate::experiment::AggregateRow;
use crate::HarnessError;

/// Values at or below this floor are clipped on log-scale plots.
pub const LOG_CLIP_FLOOR: f64 = 1e-16;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// One plotted curve, typically read from an aggregate CSV.
pub struct PlotSeries {
    pub label: String,
    pub rows: Vec<AggregateRow>,
}

#[derive(Debug, Clone, Default)]
pub struct PlotOptions {
    /// Log-scale vertical axis, clipping at [`LOG_CLIP_FLOOR`].
    pub log_y: bool,
    pub title: Option<String>,
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, value: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::MIN_POSITIVE);
        MARGIN_LEFT + (value - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, value: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(f64::MIN_POSITIVE);
        HEIGHT - MARGIN_BOTTOM
            - (value - self.y_min) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

/// Fixed-precision coordinate text keeps the output stable.
fn coord(value: f64) -> String {
    format!("{value:.2}")
}

fn axis_label(value: f64, log_scale: bool) -> String {
    if log_scale {
        format!("1e{value:.1}")
    } else if value != 0.0 && (value.abs() >= 1e4 || value.abs() < 1e-3) {
        format!("{value:.2e}")
    } else {
        format!("{value:.3}")
    }
}

fn escape_xml(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the SVG document.
pub fn render_plot(series: &[PlotSeries], options: &PlotOptions) -> Result<String, HarnessError> {
    if series.is_empty() || series.iter().any(|s| s.rows.is_empty()) {
        return Err(HarnessError::Config {
            message: "plot needs at least one series with at least one row".into(),
        });
    }

    // Band edges in data space; log mode transforms to log10 with clipping.
    let mut clipped = false;
    let mut transform = |value: f64| -> f64 {
        if options.log_y {
            if value <= LOG_CLIP_FLOOR {
                clipped = true;
            }
            value.max(LOG_CLIP_FLOOR).log10()
        } else {
            value
        }
    };

    struct Curve {
        label: String,
        xs: Vec<f64>,
        mean: Vec<f64>,
        upper: Vec<f64>,
        lower: Vec<f64>,
    }

    let curves: Vec<Curve> = series
        .iter()
        .map(|s| Curve {
            label: s.label.clone(),
            xs: s.rows.iter().map(|r| r.k as f64).collect(),
            mean: s.rows.iter().map(|r| transform(r.mean_gap)).collect(),
            upper: s
                .rows
                .iter()
                .map(|r| transform(r.mean_gap + r.std_gap))
                .collect(),
            lower: s
                .rows
                .iter()
                .map(|r| transform(r.mean_gap - r.std_gap))
                .collect(),
        })
        .collect();

    let all_x = curves.iter().flat_map(|c| c.xs.iter().copied());
    let (x_min, x_max) = min_max(all_x);
    let all_y = curves
        .iter()
        .flat_map(|c| c.mean.iter().chain(&c.upper).chain(&c.lower).copied());
    let (mut y_min, mut y_max) = min_max(all_y);
    if y_min == y_max {
        y_min -= 0.5;
        y_max += 0.5;
    } else {
        let pad = 0.05 * (y_max - y_min);
        y_min -= pad;
        y_max += pad;
    }
    let frame = Frame {
        x_min,
        x_max: if x_max > x_min { x_max } else { x_min + 1.0 },
        y_min,
        y_max,
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    if let Some(title) = &options.title {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"16\">{}</text>\n",
            coord(WIDTH / 2.0),
            escape_xml(title)
        ));
    }

    // Gridlines and tick labels: five divisions each way.
    for tick in 0..=4 {
        let fraction = tick as f64 / 4.0;
        let x_value = frame.x_min + fraction * (frame.x_max - frame.x_min);
        let y_value = frame.y_min + fraction * (frame.y_max - frame.y_min);
        let x_pixel = coord(frame.x(x_value));
        let y_pixel = coord(frame.y(y_value));
        svg.push_str(&format!(
            "<line x1=\"{x_pixel}\" y1=\"{}\" x2=\"{x_pixel}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            coord(MARGIN_TOP),
            coord(HEIGHT - MARGIN_BOTTOM),
        ));
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y_pixel}\" x2=\"{}\" y2=\"{y_pixel}\" stroke=\"#dddddd\"/>\n",
            coord(MARGIN_LEFT),
            coord(WIDTH - MARGIN_RIGHT),
        ));
        svg.push_str(&format!(
            "<text x=\"{x_pixel}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"12\">{}</text>\n",
            coord(HEIGHT - MARGIN_BOTTOM + 18.0),
            axis_label(x_value, false)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"12\">{}</text>\n",
            coord(MARGIN_LEFT - 8.0),
            coord(frame.y(y_value) + 4.0),
            axis_label(y_value, options.log_y)
        ));
    }

    // Axes on top of the grid.
    svg.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = coord(MARGIN_LEFT),
        r = coord(WIDTH - MARGIN_RIGHT),
        t = coord(MARGIN_TOP),
        b = coord(HEIGHT - MARGIN_BOTTOM),
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\">iteration k</text>\n",
        coord((MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0),
        coord(HEIGHT - 12.0),
    ));

    for (index, curve) in curves.iter().enumerate() {
        let color = PALETTE[index % PALETTE.len()];
        // Band: upper edge forward, lower edge backward.
        let mut band = String::new();
        for (x, y) in curve.xs.iter().zip(&curve.upper) {
            band.push_str(&format!("{},{} ", coord(frame.x(*x)), coord(frame.y(*y))));
        }
        for (x, y) in curve.xs.iter().rev().zip(curve.lower.iter().rev()) {
            band.push_str(&format!("{},{} ", coord(frame.x(*x)), coord(frame.y(*y))));
        }
        svg.push_str(&format!(
            "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n",
            band.trim_end()
        ));
        let line: Vec<String> = curve
            .xs
            .iter()
            .zip(&curve.mean)
            .map(|(x, y)| format!("{},{}", coord(frame.x(*x)), coord(frame.y(*y))))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            line.join(" ")
        ));
        // Legend entry.
        let legend_y = MARGIN_TOP + 16.0 + 18.0 * index as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" \
             stroke-width=\"2.5\"/>\n",
            coord(WIDTH - MARGIN_RIGHT - 180.0),
            coord(WIDTH - MARGIN_RIGHT - 150.0),
            ly = coord(legend_y),
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            coord(WIDTH - MARGIN_RIGHT - 142.0),
            coord(legend_y + 4.0),
            escape_xml(&curve.label)
        ));
    }

    if clipped {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"#b00000\">warning: values at or below {LOG_CLIP_FLOOR:e} clipped on the \
             log axis</text>\n",
            coord(MARGIN_LEFT + 4.0),
            coord(MARGIN_TOP - 8.0),
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}
