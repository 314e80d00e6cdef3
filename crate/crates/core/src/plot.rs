//! Static SVG figures rendered from a report.
//!
//! Output is plain text with fixed-precision coordinates, so rendering the
//! same report twice yields byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::encoding::is_boundary_input;
use crate::experiment::{Experiment, ExperimentReport};
use crate::report::{write_file, ReportError};

pub const ACCURACY_SVG: &str = "accuracy.svg";
pub const SIMILARITY_SVG: &str = "similarity.svg";
pub const MDS_SVG: &str = "mds.svg";
pub const COMPARISON_SVG: &str = "comparison.svg";
pub const CURRICULUM_STAGES_SVG: &str = "curriculum_stages.svg";
pub const CURRICULUM_HEATMAP_SVG: &str = "curriculum_heatmap.svg";

const BLUE: &str = "#1f5fa8";
const RED: &str = "#c0392b";
const GREY: &str = "#888888";

pub type Result<T> = std::result::Result<T, ReportError>;

/// Renders every figure the report has data for into `dir`.
pub fn emit_plots(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let mut put = |name: &str, svg: Option<String>| -> Result<()> {
        if let Some(svg) = svg {
            let path = dir.join(name);
            write_file(&path, &svg)?;
            written.push(path);
        }
        Ok(())
    };
    put(ACCURACY_SVG, accuracy_svg(report))?;
    put(SIMILARITY_SVG, similarity_svg(report))?;
    put(MDS_SVG, mds_svg(report))?;
    let want_curriculum = report.config.experiment == Experiment::Curriculum;
    match &report.curriculum {
        Some(_) => {
            put(CURRICULUM_STAGES_SVG, curriculum_stages_svg(report))?;
            put(CURRICULUM_HEATMAP_SVG, curriculum_heatmap_svg(report))?;
        }
        None if want_curriculum => warn!("curriculum section missing; curriculum plots skipped"),
        None => info!("not a curriculum report; curriculum plots skipped"),
    }
    Ok(written)
}

/// Paired bars of angle SD and boundary-vector magnitude for two reports.
pub fn emit_comparison_plot(
    count_list: &ExperimentReport,
    place_value: &ExperimentReport,
    dir: &Path,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(COMPARISON_SVG);
    write_file(&path, &comparison_svg(count_list, place_value))?;
    Ok(path)
}

fn fmt(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

struct Svg {
    buf: String,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        let mut buf = String::new();
        let _ = writeln!(
            buf,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
            w = fmt(width),
            h = fmt(height)
        );
        let _ = writeln!(
            buf,
            r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
            fmt(width),
            fmt(height)
        );
        Self { buf }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        let _ = writeln!(
            self.buf,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{stroke}" stroke-width="{}"/>"#,
            fmt(x1),
            fmt(y1),
            fmt(x2),
            fmt(y2),
            fmt(width)
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str, opacity: f64) {
        let _ = writeln!(
            self.buf,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}" fill-opacity="{}"/>"#,
            fmt(x),
            fmt(y),
            fmt(r),
            fmt(opacity)
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: &str) {
        let _ = writeln!(
            self.buf,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" stroke="{stroke}"/>"#,
            fmt(x),
            fmt(y),
            fmt(w),
            fmt(h)
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str) {
        let mut d = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            if i > 0 {
                d.push(' ');
            }
            let _ = write!(d, "{},{}", fmt(*x), fmt(*y));
        }
        let _ = writeln!(
            self.buf,
            r#"<polyline points="{d}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.buf,
            r#"<text x="{}" y="{}" text-anchor="{anchor}">{}</text>"#,
            fmt(x),
            fmt(y),
            escape(s)
        );
    }

    fn arrow(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        self.line(x1, y1, x2, y2, stroke, 1.5);
        let (dx, dy) = (x2 - x1, y2 - y1);
        let len = dx.hypot(dy);
        if len < 1e-9 {
            return;
        }
        let (ux, uy) = (dx / len, dy / len);
        let head = 7.0_f64.min(len / 2.0);
        for side in [-1.0, 1.0] {
            let hx = x2 - head * ux + side * 0.5 * head * -uy;
            let hy = y2 - head * uy + side * 0.5 * head * ux;
            self.line(x2, y2, hx, hy, stroke, 1.5);
        }
    }

    fn finish(mut self) -> String {
        self.buf.push_str("</svg>\n");
        self.buf
    }
}

/// A plotting area mapping data coordinates to pixels.
struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(left: f64, top: f64, width: f64, height: f64, x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if (hi - lo).abs() < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        Self {
            left,
            top,
            width,
            height,
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y.0) / (self.y.1 - self.y.0) * self.height
    }

    fn axes(&self, svg: &mut Svg, title: &str, xlabel: &str, ylabel: &str) {
        let bottom = self.top + self.height;
        svg.line(
            self.left,
            bottom,
            self.left + self.width,
            bottom,
            "black",
            1.0,
        );
        svg.line(self.left, self.top, self.left, bottom, "black", 1.0);
        for t in ticks(self.x) {
            let x = self.px(t);
            svg.line(x, bottom, x, bottom + 4.0, "black", 1.0);
            svg.text(x, bottom + 15.0, "middle", &tick_label(t));
        }
        for t in ticks(self.y) {
            let y = self.py(t);
            svg.line(self.left - 4.0, y, self.left, y, "black", 1.0);
            svg.text(self.left - 6.0, y + 4.0, "end", &tick_label(t));
        }
        svg.text(
            self.left + self.width / 2.0,
            self.top - 8.0,
            "middle",
            title,
        );
        svg.text(
            self.left + self.width / 2.0,
            bottom + 30.0,
            "middle",
            xlabel,
        );
        let _ = writeln!(
            svg.buf,
            r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">{}</text>"#,
            fmt(self.left - 38.0),
            fmt(self.top + self.height / 2.0),
            fmt(self.left - 38.0),
            fmt(self.top + self.height / 2.0),
            escape(ylabel)
        );
    }
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let m = raw / mag;
    let nice = if m < 1.5 {
        1.0
    } else if m < 3.5 {
        2.0
    } else if m < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks((lo, hi): (f64, f64)) -> Vec<f64> {
    let step = nice_step(hi - lo);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(t);
        t += step;
    }
    out
}

fn tick_label(t: f64) -> String {
    if (t - t.round()).abs() < 1e-9 {
        format!("{}", t.round() as i64)
    } else {
        fmt(t)
    }
}

fn range(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

fn pad((lo, hi): (f64, f64), frac: f64) -> (f64, f64) {
    let d = (hi - lo).max(1e-9) * frac;
    (lo - d, hi + d)
}

/// Correct successor against mean predicted successor, with the fitted line.
pub fn accuracy_svg(report: &ExperimentReport) -> Option<String> {
    let preds = &report.mean_predictions;
    if preds.is_empty() {
        warn!("no predictions; accuracy plot skipped");
        return None;
    }
    let mut svg = Svg::new(520.0, 440.0);
    let frame = Frame::new(70.0, 40.0, 420.0, 340.0, (0.0, 100.0), (0.0, 100.0));
    let r = &report.regression;
    frame.axes(
        &mut svg,
        &format!(
            "{}: B0 = {}, B1 = {}, R² = {:.3}",
            report.config.model.label(),
            fmt(r.intercept),
            fmt(r.slope),
            r.r_squared
        ),
        "mean predicted successor",
        "correct successor",
    );
    svg.line(
        frame.px(0.0),
        frame.py(0.0),
        frame.px(100.0),
        frame.py(100.0),
        GREY,
        1.0,
    );
    for (n, &p) in preds.iter().enumerate() {
        svg.circle(frame.px(p), frame.py(n as f64 + 1.0), 3.0, BLUE, 0.8);
    }
    let clip = |x: f64| r.predict(x).clamp(0.0, 100.0);
    let (x_lo, x_hi) = (
        (0.0 - r.intercept) / r.slope,
        (100.0 - r.intercept) / r.slope,
    );
    let (a, b) = if r.slope.is_finite() && r.slope != 0.0 {
        (x_lo.min(x_hi).max(0.0), x_lo.max(x_hi).min(100.0))
    } else {
        (0.0, 100.0)
    };
    svg.line(
        frame.px(a),
        frame.py(clip(a)),
        frame.px(b),
        frame.py(clip(b)),
        RED,
        1.5,
    );
    Some(svg.finish())
}

/// Mean successive cosine similarity per number; boundary inputs in red.
pub fn similarity_svg(report: &ExperimentReport) -> Option<String> {
    let pts: Vec<(u32, f64)> = report
        .similarity
        .profile
        .iter()
        .filter_map(|p| p.mean.map(|m| (p.n, m)))
        .collect();
    let Some(yr) = range(pts.iter().map(|p| p.1)) else {
        warn!("similarity profile empty; similarity plot skipped");
        return None;
    };
    let mut svg = Svg::new(620.0, 400.0);
    let frame = Frame::new(
        70.0,
        40.0,
        520.0,
        300.0,
        (0.0, 100.0),
        pad((yr.0.min(0.0), yr.1.max(1.0)), 0.02),
    );
    let t = &report.similarity.boundary_test;
    frame.axes(
        &mut svg,
        &format!(
            "{}: mean similarity {:.3}, boundary t({}) = {}, p = {:.3}",
            report.config.model.label(),
            report.similarity.per_sim_mean.mean,
            t.df,
            fmt(t.t),
            t.p
        ),
        "n",
        "cos(h(n), h(n+1))",
    );
    let line: Vec<(f64, f64)> = pts
        .iter()
        .map(|&(n, m)| (frame.px(f64::from(n)), frame.py(m)))
        .collect();
    svg.polyline(&line, BLUE);
    for &(n, m) in &pts {
        if is_boundary_input(n) {
            svg.circle(frame.px(f64::from(n)), frame.py(m), 3.5, RED, 1.0);
        }
    }
    Some(svg.finish())
}

/// 2D MDS of the first simulation with the `*9 -> *0` vectors drawn as arrows.
pub fn mds_svg(report: &ExperimentReport) -> Option<String> {
    let Some(sim) = report.simulations.first() else {
        warn!("no simulations; MDS plot skipped");
        return None;
    };
    let emb = &sim.embedding;
    let (Some(xr), Some(yr)) = (
        range(emb.coords.iter().map(|c| c[0])),
        range(emb.coords.iter().map(|c| c[1])),
    ) else {
        warn!("empty embedding; MDS plot skipped");
        return None;
    };
    // equal aspect
    let half = (xr.1 - xr.0).max(yr.1 - yr.0).max(1e-9) * 0.55;
    let (cx, cy) = ((xr.0 + xr.1) / 2.0, (yr.0 + yr.1) / 2.0);
    let mut svg = Svg::new(500.0, 480.0);
    let frame = Frame::new(
        70.0,
        40.0,
        400.0,
        400.0,
        (cx - half, cx + half),
        (cy - half, cy + half),
    );
    frame.axes(
        &mut svg,
        &format!(
            "{} seed {}: angle SD {:.3}, mean magnitude {:.3}",
            report.config.model.label(),
            sim.seed,
            sim.boundary_vectors.angle_sd,
            sim.boundary_vectors.mean_magnitude
        ),
        "MDS 1",
        "MDS 2",
    );
    for (n, c) in emb.numbers.iter().zip(&emb.coords) {
        let (x, y) = (frame.px(c[0]), frame.py(c[1]));
        svg.circle(x, y, 2.5, GREY, 0.9);
        if emb.numbers.len() <= 30 || n % 10 == 0 || n % 10 == 9 {
            svg.text(x + 4.0, y - 4.0, "start", &n.to_string());
        }
    }
    for k in 0..9u32 {
        if let (Ok(a), Ok(b)) = (emb.coord(10 * k + 9), emb.coord(10 * k + 10)) {
            svg.arrow(
                frame.px(a[0]),
                frame.py(a[1]),
                frame.px(b[0]),
                frame.py(b[1]),
                RED,
            );
        }
    }
    Some(svg.finish())
}

/// Paired bars (mean with ±1 SD whiskers) of angle SD and mean magnitude.
pub fn comparison_svg(count_list: &ExperimentReport, place_value: &ExperimentReport) -> String {
    let mut svg = Svg::new(640.0, 380.0);
    let panels = [
        (
            "boundary-vector angle SD",
            &count_list.geometry.angle_sd,
            &place_value.geometry.angle_sd,
        ),
        (
            "boundary-vector mean magnitude",
            &count_list.geometry.mean_magnitude,
            &place_value.geometry.mean_magnitude,
        ),
    ];
    for (i, (title, cl, pv)) in panels.into_iter().enumerate() {
        let top = (cl.mean + cl.sd).max(pv.mean + pv.sd).max(1e-9) * 1.1;
        let frame = Frame::new(
            70.0 + 310.0 * i as f64,
            40.0,
            230.0,
            280.0,
            (0.0, 2.0),
            (0.0, top),
        );
        let bottom = frame.top + frame.height;
        svg.line(
            frame.left,
            bottom,
            frame.left + frame.width,
            bottom,
            "black",
            1.0,
        );
        svg.line(frame.left, frame.top, frame.left, bottom, "black", 1.0);
        for t in ticks(frame.y) {
            let y = frame.py(t);
            svg.line(frame.left - 4.0, y, frame.left, y, "black", 1.0);
            svg.text(frame.left - 6.0, y + 4.0, "end", &tick_label(t));
        }
        svg.text(
            frame.left + frame.width / 2.0,
            frame.top - 8.0,
            "middle",
            title,
        );
        for (j, (label, d, colour)) in [("count-list", cl, GREY), ("place-value", pv, BLUE)]
            .into_iter()
            .enumerate()
        {
            let x = frame.px(j as f64 + 0.5);
            let w = frame.width * 0.3;
            let y = frame.py(d.mean);
            svg.rect(x - w / 2.0, y, w, bottom - y, colour, "black");
            let (lo, hi) = (frame.py((d.mean - d.sd).max(0.0)), frame.py(d.mean + d.sd));
            svg.line(x, lo, x, hi, "black", 1.0);
            svg.line(x - 6.0, hi, x + 6.0, hi, "black", 1.0);
            svg.line(x - 6.0, lo, x + 6.0, lo, "black", 1.0);
            svg.text(x, bottom + 15.0, "middle", label);
        }
    }
    svg.finish()
}

/// One panel per stage: accuracy on the trained items and a scatter of the
/// mean predicted successor against the correct one.
pub fn curriculum_stages_svg(report: &ExperimentReport) -> Option<String> {
    let cur = report.curriculum.as_ref()?;
    let (pw, ph) = (260.0, 220.0);
    let cols = 3;
    let rows = cur.stages.len().div_ceil(cols);
    let mut svg = Svg::new(
        cols as f64 * (pw + 70.0) + 20.0,
        rows as f64 * (ph + 80.0) + 20.0,
    );
    for (k, stage) in cur.stages.iter().enumerate() {
        let (col, row) = ((k % cols) as f64, (k / cols) as f64);
        let hi = f64::from(stage.domain_max) + 2.0;
        let frame = Frame::new(
            70.0 + col * (pw + 70.0),
            40.0 + row * (ph + 80.0),
            pw,
            ph,
            (0.0, hi),
            (0.0, hi),
        );
        frame.axes(
            &mut svg,
            &format!(
                "stage {} [0, {}]: train accuracy {:.3}",
                stage.stage_index, stage.domain_max, stage.train_accuracy.mean
            ),
            "correct successor",
            "mean predicted",
        );
        svg.line(
            frame.px(0.0),
            frame.py(0.0),
            frame.px(hi),
            frame.py(hi),
            GREY,
            1.0,
        );
        for (n, &p) in stage.mean_predictions.iter().enumerate() {
            svg.circle(
                frame.px(n as f64 + 1.0),
                frame.py(p.clamp(0.0, hi)),
                2.0,
                BLUE,
                0.8,
            );
        }
    }
    Some(svg.finish())
}

fn heat_colour(r: f64) -> String {
    // white at r <= 0, dark blue at r = 1
    let t = r.clamp(0.0, 1.0);
    let mix = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(255.0, 31.0),
        mix(255.0, 95.0),
        mix(255.0, 168.0)
    )
}

/// Stage by target-range correlation heatmap; untrained cells stay blank.
pub fn curriculum_heatmap_svg(report: &ExperimentReport) -> Option<String> {
    let cur = report.curriculum.as_ref()?;
    let (cw, ch) = (80.0, 40.0);
    let (left, top) = (90.0, 50.0);
    let mut svg = Svg::new(
        left + cw * cur.ranges.len() as f64 + 20.0,
        top + ch * cur.correlations.len() as f64 + 50.0,
    );
    svg.text(
        left + cw * cur.ranges.len() as f64 / 2.0,
        25.0,
        "middle",
        "correlation of mean prediction with correct successor",
    );
    for (j, range) in cur.ranges.iter().enumerate() {
        svg.text(
            left + cw * (j as f64 + 0.5),
            top + ch * cur.correlations.len() as f64 + 18.0,
            "middle",
            &range.label(),
        );
    }
    for (i, row) in cur.correlations.iter().enumerate() {
        let y = top + ch * i as f64;
        let stage = cur.stages.get(i).map_or(i as u32 + 1, |s| s.stage_index);
        svg.text(
            left - 8.0,
            y + ch / 2.0 + 4.0,
            "end",
            &format!("stage {stage}"),
        );
        for (j, cell) in row.iter().enumerate() {
            let x = left + cw * j as f64;
            match cell {
                Some(r) => {
                    svg.rect(x, y, cw, ch, &heat_colour(*r), "#cccccc");
                    let label = format!("{r:.3}");
                    let _ = writeln!(
                        svg.buf,
                        r#"<text x="{}" y="{}" text-anchor="middle" fill="{}">{}</text>"#,
                        fmt(x + cw / 2.0),
                        fmt(y + ch / 2.0 + 4.0),
                        if *r > 0.6 { "white" } else { "black" },
                        label
                    );
                }
                None => svg.rect(x, y, cw, ch, "none", "#cccccc"),
            }
        }
    }
    Some(svg.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_range() {
        assert_eq!(
            ticks((0.0, 100.0)),
            vec![0.0, 20.0, 40.0, 60.0, 80.0, 100.0]
        );
        let t = ticks((0.13, 0.87));
        assert!(t.len() >= 3 && t[0] >= 0.13 && *t.last().unwrap() <= 0.87);
    }

    #[test]
    fn formatting_has_no_negative_zero() {
        assert_eq!(fmt(-0.0001), "0.00");
        assert_eq!(fmt(1.005), format!("{:.2}", 1.005));
        assert_eq!(escape("a<b&c"), "a&lt;b&amp;c");
    }

    #[test]
    fn heat_colour_endpoints() {
        assert_eq!(heat_colour(0.0), "#ffffff");
        assert_eq!(heat_colour(-1.0), "#ffffff");
        assert_eq!(heat_colour(1.0), "#1f5fa8");
    }
}
