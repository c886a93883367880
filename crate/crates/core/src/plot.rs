//! Static SVG charts: price marks, indicator overlays and a legend.
//!
//! Output depends only on the inputs. Coordinates are printed with two
//! decimals and there are no timestamps or generated ids, so identical
//! inputs give byte-identical files.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{IndicatorSeries, ModelError, PlotConfig, PlotType, TimeSeriesFrame, Viewport};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 540.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 48.0;
const UP: &str = "#26a69a";
const DOWN: &str = "#ef5350";
const PRICE_LINE: &str = "#1f77b4";
const PALETTE: [&str; 6] = ["#ff7f0e", "#2ca02c", "#9467bd", "#d62728", "#8c564b", "#e377c2"];
const Y_TICKS: usize = 5;
const X_TICKS: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlotError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("indicator '{label}' has {len} values but the frame has {rows} rows")]
    Misaligned { label: String, len: usize, rows: usize },
}

struct Scale {
    count: usize,
    y_min: f64,
    y_max: f64,
}

impl Scale {
    fn plot_width() -> f64 {
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    }

    fn plot_height() -> f64 {
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    }

    fn slot(&self) -> f64 {
        Scale::plot_width() / self.count.max(1) as f64
    }

    fn x(&self, i: usize) -> f64 {
        MARGIN_LEFT + (i as f64 + 0.5) * self.slot()
    }

    fn y(&self, v: f64) -> f64 {
        MARGIN_TOP + (self.y_max - v) / (self.y_max - self.y_min) * Scale::plot_height()
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    text.chars()
        .map(|c| match c {
            '&' => "&amp;".to_string(),
            '<' => "&lt;".to_string(),
            '>' => "&gt;".to_string(),
            '"' => "&quot;".to_string(),
            '\'' => "&apos;".to_string(),
            c => c.to_string(),
        })
        .collect()
}

/// Renders `frame` with `indicators` overlaid. Indicator series must be
/// aligned with the frame's rows.
pub fn render_svg(
    frame: &TimeSeriesFrame,
    indicators: &[IndicatorSeries],
    config: &PlotConfig,
) -> Result<String, PlotError> {
    for s in indicators {
        if s.values.len() != frame.len() {
            return Err(PlotError::Misaligned {
                label: s.label(),
                len: s.values.len(),
                rows: frame.len(),
            });
        }
    }

    let (start, end, y_range) = match config.viewport {
        Viewport::Auto => (0, frame.len(), None),
        Viewport::Explicit {
            x_min,
            x_max,
            y_min,
            y_max,
        } => {
            let dates = frame.dates();
            (
                dates.partition_point(|d| *d < x_min),
                dates.partition_point(|d| *d <= x_max),
                Some((y_min, y_max)),
            )
        }
    };
    let end = end.max(start);
    let open = &frame.column("Open")?[start..end];
    let high = &frame.column("High")?[start..end];
    let low = &frame.column("Low")?[start..end];
    let close = &frame.column("Close")?[start..end];
    let dates = &frame.dates()[start..end];
    let overlays: Vec<(String, &[Option<f64>])> =
        indicators.iter().map(|s| (s.label(), &s.values[start..end])).collect();

    let (y_min, y_max) = y_range.unwrap_or_else(|| {
        let price_cols: &[&[Option<f64>]] = match config.plot_type {
            PlotType::Line => &[close],
            PlotType::Candle | PlotType::Ohlc => &[high, low, open, close],
        };
        auto_range(
            price_cols
                .iter()
                .copied()
                .chain(overlays.iter().map(|o| o.1))
                .flat_map(|c| c.iter().flatten().copied()),
        )
    });
    let scale = Scale {
        count: dates.len(),
        y_min,
        y_max,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(
        svg,
        r#"<defs><clipPath id="plot-area"><rect x="{}" y="{}" width="{}" height="{}"/></clipPath></defs>"#,
        num(MARGIN_LEFT),
        num(MARGIN_TOP),
        num(Scale::plot_width()),
        num(Scale::plot_height())
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(
        svg,
        r#"<text class="title" x="{}" y="24" font-size="16">{} ({})</text>"#,
        num(MARGIN_LEFT),
        escape(frame.source_label()),
        config.plot_type
    );

    write_axes(&mut svg, &scale, dates);

    let _ = writeln!(
        svg,
        r#"<g class="price {}" clip-path="url(#plot-area)">"#,
        config.plot_type
    );
    match config.plot_type {
        PlotType::Line => write_polylines(&mut svg, &scale, close, PRICE_LINE, "price-line"),
        PlotType::Candle => write_candles(&mut svg, &scale, open, high, low, close),
        PlotType::Ohlc => write_ohlc_bars(&mut svg, &scale, open, high, low, close),
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g class="indicators" clip-path="url(#plot-area)">"#);
    for (k, (label, values)) in overlays.iter().enumerate() {
        let _ = writeln!(svg, r#"<g class="indicator" data-label="{}">"#, escape(label));
        write_polylines(&mut svg, &scale, values, PALETTE[k % PALETTE.len()], "indicator-line");
        let _ = writeln!(svg, "</g>");
    }
    let _ = writeln!(svg, "</g>");

    if dates.is_empty() {
        let _ = writeln!(
            svg,
            r##"<text class="empty" x="{}" y="{}" text-anchor="middle" fill="#888888">No data</text>"##,
            num(MARGIN_LEFT + Scale::plot_width() / 2.0),
            num(MARGIN_TOP + Scale::plot_height() / 2.0)
        );
    }

    write_legend(&mut svg, &overlays);
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn auto_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo {
        (hi - lo) * 0.05
    } else {
        lo.abs().max(1.0) * 0.05
    };
    (lo - pad, hi + pad)
}

fn write_axes(svg: &mut String, scale: &Scale, dates: &[chrono::NaiveDate]) {
    let bottom = MARGIN_TOP + Scale::plot_height();
    let right = MARGIN_LEFT + Scale::plot_width();
    let _ = writeln!(svg, r##"<g class="axes" stroke="#444444" fill="#444444">"##);
    let _ = writeln!(
        svg,
        r#"<line class="x-axis" x1="{l}" y1="{b}" x2="{r}" y2="{b}"/>"#,
        l = num(MARGIN_LEFT),
        r = num(right),
        b = num(bottom)
    );
    let _ = writeln!(
        svg,
        r#"<line class="y-axis" x1="{l}" y1="{t}" x2="{l}" y2="{b}"/>"#,
        l = num(MARGIN_LEFT),
        t = num(MARGIN_TOP),
        b = num(bottom)
    );
    for k in 0..Y_TICKS {
        let v = scale.y_min + (scale.y_max - scale.y_min) * k as f64 / (Y_TICKS - 1) as f64;
        let y = num(scale.y(v));
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}"/><text x="{}" y="{y}" stroke="none" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            num(MARGIN_LEFT - 4.0),
            num(MARGIN_LEFT),
            num(MARGIN_LEFT - 6.0),
            num(v)
        );
    }
    if !dates.is_empty() {
        let ticks = X_TICKS.min(dates.len());
        let mut last = None;
        for k in 0..ticks {
            let i = if ticks == 1 {
                0
            } else {
                k * (dates.len() - 1) / (ticks - 1)
            };
            if last == Some(i) {
                continue;
            }
            last = Some(i);
            let x = num(scale.x(i));
            let _ = writeln!(
                svg,
                r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}"/><text x="{x}" y="{}" stroke="none" text-anchor="middle">{}</text>"#,
                num(bottom),
                num(bottom + 4.0),
                num(bottom + 18.0),
                dates[i].format("%Y-%m-%d")
            );
        }
    }
    let _ = writeln!(svg, "</g>");
}

/// One polyline per run of defined values.
fn write_polylines(svg: &mut String, scale: &Scale, values: &[Option<f64>], color: &str, class: &str) {
    let mut run: Vec<String> = Vec::new();
    let flush = |run: &mut Vec<String>, svg: &mut String| {
        if run.is_empty() {
            return;
        }
        let _ = writeln!(
            svg,
            r#"<polyline class="{class}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            run.join(" ")
        );
        run.clear();
    };
    for (i, v) in values.iter().enumerate() {
        match v {
            Some(v) => run.push(format!("{},{}", num(scale.x(i)), num(scale.y(*v)))),
            None => flush(&mut run, svg),
        }
    }
    flush(&mut run, svg);
}

fn direction(open: f64, close: f64) -> (&'static str, &'static str) {
    if close >= open {
        ("up", UP)
    } else {
        ("down", DOWN)
    }
}

fn write_candles(
    svg: &mut String,
    scale: &Scale,
    open: &[Option<f64>],
    high: &[Option<f64>],
    low: &[Option<f64>],
    close: &[Option<f64>],
) {
    let body = (scale.slot() * 0.6).max(1.0);
    for i in 0..open.len() {
        let (Some(o), Some(h), Some(l), Some(c)) = (open[i], high[i], low[i], close[i]) else {
            continue;
        };
        let (class, color) = direction(o, c);
        let x = scale.x(i);
        let top = scale.y(o.max(c));
        let height = (scale.y(o.min(c)) - top).max(1.0);
        let _ = writeln!(
            svg,
            r#"<g class="candle {class}"><line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="{color}"/><rect x="{}" y="{}" width="{}" height="{}" fill="{color}"/></g>"#,
            num(scale.y(h)),
            num(scale.y(l)),
            num(x - body / 2.0),
            num(top),
            num(body),
            num(height),
            x = num(x),
        );
    }
}

fn write_ohlc_bars(
    svg: &mut String,
    scale: &Scale,
    open: &[Option<f64>],
    high: &[Option<f64>],
    low: &[Option<f64>],
    close: &[Option<f64>],
) {
    let tick = (scale.slot() * 0.3).max(1.0);
    for i in 0..open.len() {
        let (Some(o), Some(h), Some(l), Some(c)) = (open[i], high[i], low[i], close[i]) else {
            continue;
        };
        let (class, color) = direction(o, c);
        let x = scale.x(i);
        let _ = writeln!(
            svg,
            r#"<g class="ohlc {class}" stroke="{color}"><line x1="{x}" y1="{}" x2="{x}" y2="{}"/><line x1="{}" y1="{o}" x2="{x}" y2="{o}"/><line x1="{x}" y1="{c}" x2="{}" y2="{c}"/></g>"#,
            num(scale.y(h)),
            num(scale.y(l)),
            num(x - tick),
            num(x + tick),
            x = num(x),
            o = num(scale.y(o)),
            c = num(scale.y(c)),
        );
    }
}

fn write_legend(svg: &mut String, overlays: &[(String, &[Option<f64>])]) {
    let x = MARGIN_LEFT + Scale::plot_width() - 150.0;
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (k, (label, _)) in overlays.iter().enumerate() {
        let y = MARGIN_TOP + 14.0 + 18.0 * k as f64;
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text class="legend-label" x="{}" y="{y}" dominant-baseline="middle">{}</text>"#,
            num(x),
            num(x + 20.0),
            num(x + 26.0),
            escape(label),
            y = num(y),
        );
    }
    let _ = writeln!(svg, "</g>");
}
