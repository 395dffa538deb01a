//! Self-contained SVG figure emission. Every function is a pure map from
//! results to the document text, so identical results yield byte-identical
//! files. Styling is deliberately minimal: axes, labels, a legend.

use glosa_core::{ProportionCell, RunResult, Trajectory};

const SERIES_COLORS: [&str; 4] = ["#1f6feb", "#d1242f", "#2da44e", "#bf8700"];

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        self.x0 + (v - self.xmin) / (self.xmax - self.xmin).max(1e-12) * self.w
    }

    fn y(&self, v: f64) -> f64 {
        self.y0 + self.h - (v - self.ymin) / (self.ymax - self.ymin).max(1e-12) * self.h
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str) {
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n",
            fmt(self.x0), fmt(self.y0), fmt(self.w), fmt(self.h)
        ));
        for i in 0..=4 {
            let fx = self.xmin + (self.xmax - self.xmin) * i as f64 / 4.0;
            let fy = self.ymin + (self.ymax - self.ymin) * i as f64 / 4.0;
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"9\" text-anchor=\"middle\" fill=\"#333\">{}</text>\n",
                fmt(self.x(fx)), fmt(self.y0 + self.h + 12.0), fmt(fx)
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"9\" text-anchor=\"end\" fill=\"#333\">{}</text>\n",
                fmt(self.x0 - 4.0), fmt(self.y(fy) + 3.0), fmt(fy)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\" fill=\"#000\">{}</text>\n",
            fmt(self.x0 + self.w / 2.0), fmt(self.y0 + self.h + 26.0), x_label
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\" fill=\"#000\" transform=\"rotate(-90 {} {})\">{}</text>\n",
            fmt(self.x0 - 34.0), fmt(self.y0 + self.h / 2.0), fmt(self.x0 - 34.0), fmt(self.y0 + self.h / 2.0), y_label
        ));
    }

    fn polyline(&self, out: &mut String, points: &[(f64, f64)], color: &str) {
        if points.is_empty() {
            return;
        }
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{},{}", fmt(self.x(x)), fmt(self.y(y.clamp(self.ymin, self.ymax)))))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"/>\n",
            path.join(" ")
        ));
    }
}

fn document(width: f64, height: f64, title: &str, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{tx}\" y=\"16\" font-size=\"12\" text-anchor=\"middle\" fill=\"#000\">{title}</text>\n\
         {body}</svg>\n",
        w = fmt(width),
        h = fmt(height),
        tx = fmt(width / 2.0),
    )
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        (0.0, 1.0)
    } else if (hi - lo).abs() < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Four stacked panels (distance, speed, acceleration, control level vs time)
/// for up to four labelled trajectories, with the switch time marked.
pub fn trajectory_panel(
    title: &str,
    runs: &[(String, &Trajectory)],
    switch_time_s: f64,
) -> String {
    let width = 640.0;
    let panel_h = 120.0;
    let height = 40.0 + 4.0 * (panel_h + 40.0);
    let tmax = runs
        .iter()
        .map(|(_, t)| t.last_state().time_s)
        .fold(1.0f64, f64::max);
    let mut body = String::new();

    let extract: [(&str, fn(&glosa_core::VehicleState) -> f64); 4] = [
        ("distance [m]", |s| s.position_m),
        ("speed [m/s]", |s| s.speed_mps),
        ("acceleration [m/s^2]", |s| s.accel_mps2),
        ("control level", |s| s.control.value()),
    ];
    for (panel, (label, getter)) in extract.iter().enumerate() {
        let (lo, hi) = bounds(
            runs.iter()
                .flat_map(|(_, t)| t.steps.iter().map(|s| getter(&s.state))),
        );
        let frame = Frame {
            x0: 60.0,
            y0: 30.0 + panel as f64 * (panel_h + 40.0),
            w: width - 90.0,
            h: panel_h,
            xmin: 0.0,
            xmax: tmax,
            ymin: lo,
            ymax: hi,
        };
        frame.axes(&mut body, if panel == 3 { "time [s]" } else { "" }, label);
        // switch-time marker
        body.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y1}\" x2=\"{x}\" y2=\"{y2}\" stroke=\"#2da44e\" stroke-width=\"1\" stroke-dasharray=\"4,3\"/>\n",
            x = fmt(frame.x(switch_time_s)),
            y1 = fmt(frame.y0),
            y2 = fmt(frame.y0 + frame.h)
        ));
        for (i, (run_label, traj)) in runs.iter().enumerate() {
            let color = SERIES_COLORS[i % SERIES_COLORS.len()];
            let pts: Vec<(f64, f64)> = traj
                .steps
                .iter()
                .map(|s| (s.state.time_s, getter(&s.state)))
                .collect();
            frame.polyline(&mut body, &pts, color);
            if panel == 0 {
                body.push_str(&format!(
                    "<text x=\"{}\" y=\"{}\" font-size=\"9\" fill=\"{color}\">{run_label}</text>\n",
                    fmt(frame.x0 + frame.w - 130.0),
                    fmt(frame.y0 + 12.0 + i as f64 * 11.0)
                ));
            }
        }
    }
    document(width, height, title, &body)
}

/// Grouped bar chart of percent savings per cell (one group per scenario
/// label, one bar per labelled series).
pub fn savings_bars(
    title: &str,
    groups: &[(String, Vec<(String, f64)>)],
) -> String {
    let width = 640.0;
    let height = 300.0;
    let frame = Frame {
        x0: 50.0,
        y0: 30.0,
        w: width - 80.0,
        h: height - 90.0,
        xmin: 0.0,
        xmax: groups.len() as f64,
        ymin: 0.0,
        ymax: groups
            .iter()
            .flat_map(|(_, bars)| bars.iter().map(|(_, v)| *v))
            .fold(10.0f64, f64::max)
            * 1.15,
    };
    let mut body = String::new();
    frame.axes(&mut body, "", "fuel savings [%]");
    let n_series = groups.first().map(|(_, b)| b.len()).unwrap_or(1).max(1);
    let group_w = frame.w / groups.len().max(1) as f64;
    let bar_w = group_w * 0.7 / n_series as f64;
    for (gi, (group_label, bars)) in groups.iter().enumerate() {
        for (bi, (series_label, value)) in bars.iter().enumerate() {
            let x = frame.x0 + gi as f64 * group_w + group_w * 0.15 + bi as f64 * bar_w;
            let y = frame.y(*value);
            let color = SERIES_COLORS[bi % SERIES_COLORS.len()];
            body.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{color}\"/>\n",
                fmt(x),
                fmt(y),
                fmt(bar_w * 0.9),
                fmt(frame.y0 + frame.h - y)
            ));
            if gi == 0 {
                body.push_str(&format!(
                    "<text x=\"{}\" y=\"{}\" font-size=\"9\" fill=\"{color}\">{series_label}</text>\n",
                    fmt(frame.x0 + frame.w - 110.0),
                    fmt(frame.y0 + 12.0 + bi as f64 * 11.0)
                ));
            }
        }
        body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"8\" text-anchor=\"middle\" fill=\"#333\">{group_label}</text>\n",
            fmt(frame.x0 + gi as f64 * group_w + group_w / 2.0),
            fmt(frame.y0 + frame.h + 12.0)
        ));
    }
    document(width, height, title, &body)
}

fn heat_color(t: f64) -> String {
    // blue (cheap) to red (dear)
    let t = t.clamp(0.0, 1.0);
    let r = (40.0 + 200.0 * t) as u8;
    let g = (80.0 + 60.0 * (1.0 - t)) as u8;
    let b = (220.0 - 180.0 * t) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Bias x SD heatmap of per-cell values (mean fuel or savings proportion).
pub fn sensitivity_heatmap(
    title: &str,
    bias_levels: &[f64],
    sd_levels: &[f64],
    values: &[f64],
    value_fmt: &dyn Fn(f64) -> String,
) -> String {
    assert_eq!(values.len(), bias_levels.len() * sd_levels.len());
    let cell = 54.0;
    let x0 = 70.0;
    let y0 = 40.0;
    let width = x0 + sd_levels.len() as f64 * cell + 30.0;
    let height = y0 + bias_levels.len() as f64 * cell + 60.0;
    let (lo, hi) = bounds(values.iter().copied());
    let mut body = String::new();
    for (i, &bias) in bias_levels.iter().enumerate() {
        for (j, &sd) in sd_levels.iter().enumerate() {
            let v = values[i * sd_levels.len() + j];
            let t = (v - lo) / (hi - lo).max(1e-12);
            let x = x0 + j as f64 * cell;
            let y = y0 + i as f64 * cell;
            body.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#fff\"/>\n",
                fmt(x), fmt(y), fmt(cell), fmt(cell), heat_color(t)
            ));
            body.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"9\" text-anchor=\"middle\" fill=\"#fff\">{}</text>\n",
                fmt(x + cell / 2.0), fmt(y + cell / 2.0 + 3.0), value_fmt(v)
            ));
            if j == 0 {
                body.push_str(&format!(
                    "<text x=\"{}\" y=\"{}\" font-size=\"9\" text-anchor=\"end\" fill=\"#333\">b={bias}</text>\n",
                    fmt(x0 - 6.0), fmt(y + cell / 2.0 + 3.0)
                ));
            }
            if i == bias_levels.len() - 1 {
                body.push_str(&format!(
                    "<text x=\"{}\" y=\"{}\" font-size=\"9\" text-anchor=\"middle\" fill=\"#333\">sd={sd}</text>\n",
                    fmt(x + cell / 2.0), fmt(y + cell + 14.0)
                ));
            }
        }
    }
    document(width, height, title, &body)
}

/// Heatmap of per-cell mean fuel for one (grade, switching time) slice.
pub fn fuel_heatmap(
    title: &str,
    bias_levels: &[f64],
    sd_levels: &[f64],
    results: &[&RunResult],
) -> String {
    let values: Vec<f64> = results.iter().map(|r| r.mean_fuel_l * 1e3).collect();
    sensitivity_heatmap(title, bias_levels, sd_levels, &values, &|v| format!("{v:.1}"))
}

/// Heatmap of the savings-proportion surface for one slice.
pub fn proportion_heatmap(
    title: &str,
    bias_levels: &[f64],
    sd_levels: &[f64],
    cells: &[&ProportionCell],
) -> String {
    let values: Vec<f64> = cells.iter().map(|c| c.proportion.unwrap_or(f64::NAN)).collect();
    sensitivity_heatmap(title, bias_levels, sd_levels, &values, &|v| {
        if v.is_nan() { "-".to_string() } else { format!("{v:.2}") }
    })
}
