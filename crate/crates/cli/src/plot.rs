//! Self-contained SVG plots. Output depends only on the report, so repeated
//! runs produce identical files.

use std::fmt::Write;

use crate::report::SimulationReport;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const BINS: usize = 20;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Self { x: widen(x), y: widen(y) }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn open(out: &mut String, title: &str, frame: &Frame, xlabel: &str, ylabel: &str) {
    let _ = write!(
        out,
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" ",
            "font-family=\"sans-serif\" font-size=\"12\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{cx}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n",
            "<text x=\"{cx}\" y=\"{xl}\" text-anchor=\"middle\">{xlabel}</text>\n",
            "<text x=\"16\" y=\"{cy}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {cy})\">{ylabel}</text>\n",
        ),
        w = WIDTH,
        h = HEIGHT,
        cx = (LEFT + WIDTH - RIGHT) / 2.0,
        cy = (TOP + HEIGHT - BOTTOM) / 2.0,
        xl = HEIGHT - 12.0,
        title = escape(title),
        xlabel = escape(xlabel),
        ylabel = escape(ylabel),
    );
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        "<path d=\"M{x0} {y0} L{x0} {y1} L{x1} {y1}\" fill=\"none\" stroke=\"black\"/>"
    );
    for k in 0..=4 {
        let fx = frame.x.0 + (frame.x.1 - frame.x.0) * k as f64 / 4.0;
        let fy = frame.y.0 + (frame.y.1 - frame.y.0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            frame.px(fx),
            y1 + 16.0,
            tick(fx)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            x0 - 6.0,
            frame.py(fy) + 4.0,
            tick(fy)
        );
    }
}

fn close(out: &mut String) {
    out.push_str("</svg>\n");
}

fn range(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn histogram(title: &str, xlabel: &str, values: &[f64], marker: Option<(f64, &str)>) -> String {
    let mut out = String::new();
    let (mut lo, mut hi) = if values.is_empty() { (0.0, 1.0) } else { range(values) };
    if let Some((m, _)) = marker {
        lo = lo.min(m);
        hi = hi.max(m);
    }
    if hi <= lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / BINS as f64;
    let mut counts = [0usize; BINS];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(BINS - 1);
        counts[b] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let frame = Frame::new((lo, hi), (0.0, top));
    open(&mut out, title, &frame, xlabel, "count");
    for (b, &c) in counts.iter().enumerate() {
        let x0 = frame.px(lo + b as f64 * width);
        let x1 = frame.px(lo + (b + 1) as f64 * width);
        let y = frame.py(c as f64);
        let _ = writeln!(
            out,
            "<rect x=\"{x0:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#4a7ab5\" stroke=\"white\"/>",
            x1 - x0,
            frame.py(0.0) - y
        );
    }
    if let Some((m, label)) = marker {
        let x = frame.px(m);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#c0392b\" stroke-width=\"2\" stroke-dasharray=\"6 3\"/>",
            frame.py(top),
            frame.py(0.0)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"#c0392b\">{}</text>",
            x + 4.0,
            frame.py(top) + 12.0,
            escape(label)
        );
    }
    close(&mut out);
    out
}

/// Histogram of the KL losses of successful replicates.
pub fn kl_histogram(report: &SimulationReport) -> String {
    let values: Vec<f64> = report.records.iter().filter_map(|r| r.kl_loss).collect();
    histogram("KL loss", "d(estimate)", &values, None)
}

/// Distribution of the noise dual with the calibrated threshold marked (the
/// mean threshold when it varies across replicates).
pub fn noise_dual_plot(report: &SimulationReport) -> String {
    let values: Vec<f64> = report.records.iter().filter_map(|r| r.noise_dual).collect();
    let r0: Vec<f64> = report.records.iter().filter_map(|r| r.r0).collect();
    let label;
    let marker = if r0.is_empty() {
        None
    } else {
        let mean = r0.iter().sum::<f64>() / r0.len() as f64;
        label = format!("r0 = {}", tick(mean));
        Some((mean, label.as_str()))
    };
    histogram("Dual gauge of the noise term", "noise dual", &values, marker)
}

/// KL loss against the oracle bound `r (u(L*) + u(-L*)) + gap`, with the
/// diagonal. Points above the diagonal are violations.
pub fn bound_vs_loss(report: &SimulationReport) -> String {
    let points: Vec<(f64, f64, bool)> = report
        .records
        .iter()
        .filter_map(|r| Some((r.bound_value? + r.solver_gap?, r.kl_loss?, r.r_condition?)))
        .collect();
    let all: Vec<f64> = points.iter().flat_map(|&(x, y, _)| [x, y]).chain([0.0]).collect();
    let (lo, hi) = range(&all);
    let frame = Frame::new((lo, hi), (lo, hi));
    let mut out = String::new();
    open(&mut out, "Oracle bound vs KL loss", &frame, "bound + gap", "KL loss");
    let _ = writeln!(
        out,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>",
        frame.px(frame.x.0),
        frame.py(frame.y.0),
        frame.px(frame.x.1),
        frame.py(frame.y.1)
    );
    for (x, y, rc) in points {
        let colour = if rc { "#4a7ab5" } else { "#aaaaaa" };
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{colour}\" fill-opacity=\"0.7\"/>",
            frame.px(x),
            frame.py(y)
        );
    }
    close(&mut out);
    out
}
