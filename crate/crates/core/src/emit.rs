//! Text and SVG output helpers.
//!
//! All SVG documents are self-contained: inline styles, no external fonts
//! or references, and coordinates printed with two decimals so the bytes
//! depend only on the input data.

use std::fmt::Write as _;

use crate::dboundary::BoundarySet;
use crate::plane::{Plane, Window};
use crate::regions::{CellVerdict, RegionMap, RobustRegion, SweepStack};

/// Plain decimal for moderate magnitudes, scientific otherwise. Both forms
/// round-trip exactly.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".to_string()
    } else if (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

const PLOT: f64 = 560.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 60.0;
const RIGHT: f64 = 20.0;

const STABLE: &str = "#2e7d32";
const UNSTABLE: &str = "#c62828";
const MARGINAL: &str = "#000000";
const UNKNOWN: &str = "#9e9e9e";

fn color(v: CellVerdict) -> &'static str {
    match v {
        CellVerdict::Stable => STABLE,
        CellVerdict::Unstable => UNSTABLE,
        CellVerdict::Marginal => MARGINAL,
        CellVerdict::Unknown => UNKNOWN,
    }
}

/// Plot frame mapping window coordinates to pixels.
struct Frame {
    window: Window,
    out: String,
}

impl Frame {
    fn new(plane: &Plane, window: &Window) -> Frame {
        let width = LEFT + PLOT + RIGHT;
        let height = TOP + PLOT + BOTTOM;
        let mut out = String::new();
        writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
        )
        .unwrap();
        writeln!(out, "<rect x=\"0\" y=\"0\" width=\"{width:.0}\" height=\"{height:.0}\" fill=\"#ffffff\"/>").unwrap();
        writeln!(
            out,
            "<defs><clipPath id=\"plot\"><rect x=\"{LEFT:.2}\" y=\"{TOP:.2}\" width=\"{PLOT:.2}\" height=\"{PLOT:.2}\"/></clipPath></defs>"
        )
        .unwrap();
        let mut frame = Frame {
            window: *window,
            out,
        };
        frame.axes(plane);
        frame
    }

    fn x(&self, x: f64) -> f64 {
        LEFT + (x - self.window.p1.0) / self.window.width() * PLOT
    }

    fn y(&self, y: f64) -> f64 {
        TOP + (self.window.p2.1 - y) / self.window.height() * PLOT
    }

    fn axes(&mut self, plane: &Plane) {
        let w = self.window;
        let style = "font-family=\"sans-serif\" font-size=\"12\" fill=\"#000000\"";
        let base = TOP + PLOT;
        for x in ticks(w.p1) {
            let px = self.x(x);
            writeln!(
                self.out,
                "<line x1=\"{px:.2}\" y1=\"{base:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#000000\"/>",
                base + 5.0
            )
            .unwrap();
            writeln!(
                self.out,
                "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\" {style}>{}</text>",
                base + 18.0,
                fmt_num(x)
            )
            .unwrap();
        }
        for y in ticks(w.p2) {
            let py = self.y(y);
            writeln!(
                self.out,
                "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{LEFT:.2}\" y2=\"{py:.2}\" stroke=\"#000000\"/>",
                LEFT - 5.0
            )
            .unwrap();
            writeln!(
                self.out,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" {style}>{}</text>",
                LEFT - 8.0,
                py + 4.0,
                fmt_num(y)
            )
            .unwrap();
        }
        writeln!(
            self.out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" {style}>{}</text>",
            LEFT + PLOT / 2.0,
            base + 45.0,
            escape(&plane.p1)
        )
        .unwrap();
        writeln!(
            self.out,
            "<text x=\"16.00\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16.00 {:.2})\" {style}>{}</text>",
            TOP + PLOT / 2.0,
            TOP + PLOT / 2.0,
            escape(&plane.p2)
        )
        .unwrap();
    }

    fn border(&mut self) {
        writeln!(
            self.out,
            "<rect x=\"{LEFT:.2}\" y=\"{TOP:.2}\" width=\"{PLOT:.2}\" height=\"{PLOT:.2}\" fill=\"none\" stroke=\"#000000\"/>"
        )
        .unwrap();
    }

    /// Filled rectangles, merging horizontal runs of equal fill.
    fn cells<F>(&mut self, resolution: (usize, usize), fill: F)
    where
        F: Fn(usize, usize) -> Option<&'static str>,
    {
        let (n1, n2) = resolution;
        let dx = PLOT / n1 as f64;
        let dy = PLOT / n2 as f64;
        self.out.push_str("<g shape-rendering=\"crispEdges\">\n");
        for j in 0..n2 {
            let mut i = 0;
            while i < n1 {
                let f = fill(i, j);
                let start = i;
                while i < n1 && fill(i, j) == f {
                    i += 1;
                }
                if let Some(c) = f {
                    writeln!(
                        self.out,
                        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{c}\"/>",
                        LEFT + start as f64 * dx,
                        TOP + PLOT - (j + 1) as f64 * dy,
                        (i - start) as f64 * dx,
                        dy
                    )
                    .unwrap();
                }
            }
        }
        self.out.push_str("</g>\n");
    }

    fn boundaries(&mut self, set: &BoundarySet) {
        self.out.push_str("<g clip-path=\"url(#plot)\" fill=\"none\">\n");
        for line in [set.rrb, set.irb].into_iter().flatten() {
            if let Some((a, b)) = line.segment_in(&self.window) {
                writeln!(
                    self.out,
                    "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#1565c0\" stroke-width=\"2\"/>",
                    self.x(a.0),
                    self.y(a.1),
                    self.x(b.0),
                    self.y(b.1)
                )
                .unwrap();
            }
        }
        for branch in &set.crb {
            let pts: Vec<(f64, f64)> = branch.samples.iter().map(|s| s.point).collect();
            self.polyline(&pts, "#1565c0", 2.0);
        }
        self.out.push_str("</g>\n");
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, width: f64) {
        if pts.is_empty() {
            return;
        }
        let mut d = String::with_capacity(pts.len() * 16);
        for (k, p) in pts.iter().enumerate() {
            let cmd = if k == 0 { 'M' } else { 'L' };
            write!(d, "{cmd}{:.2} {:.2}", self.x(p.0), self.y(p.1)).unwrap();
        }
        writeln!(
            self.out,
            "<path d=\"{d}\" stroke=\"{stroke}\" stroke-width=\"{width}\" fill=\"none\"/>"
        )
        .unwrap();
    }

    fn finish(mut self) -> String {
        self.border();
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Window ends plus zero when it lies strictly inside.
fn ticks((lo, hi): (f64, f64)) -> Vec<f64> {
    if lo < 0.0 && hi > 0.0 {
        vec![lo, 0.0, hi]
    } else {
        vec![lo, hi]
    }
}

/// Cells colored by verdict with optional boundary curves on top.
pub fn region_svg(map: &RegionMap, boundaries: Option<&BoundarySet>) -> String {
    let mut f = Frame::new(&map.plane, &map.window);
    f.cells(map.resolution, |i, j| Some(color(map.cell(i, j).verdict)));
    if let Some(b) = boundaries {
        f.boundaries(b);
    }
    f.finish()
}

/// Boundary curves alone.
pub fn boundary_svg(plane: &Plane, window: &Window, set: &BoundarySet) -> String {
    let mut f = Frame::new(plane, window);
    f.boundaries(set);
    f.finish()
}

pub fn robust_svg(robust: &RobustRegion, boundaries: Option<&BoundarySet>) -> String {
    let mut f = Frame::new(&robust.plane, &robust.window);
    let n1 = robust.resolution.0;
    f.cells(robust.resolution, |i, j| robust.mask[j * n1 + i].then_some(STABLE));
    if let Some(b) = boundaries {
        f.boundaries(b);
    }
    f.finish()
}

/// Outline of the stable cells of every layer; stroke lightness runs from
/// dark (first layer) to light (last layer).
pub fn stack_svg(stack: &SweepStack) -> String {
    let Some(first) = stack.layers.first() else {
        return String::new();
    };
    let mut f = Frame::new(&first.map.plane, &first.map.window);
    let count = stack.layers.len();
    f.out.push_str("<g fill=\"none\" stroke-width=\"1\">\n");
    for (k, layer) in stack.layers.iter().enumerate() {
        let light = if count > 1 {
            15.0 + 65.0 * k as f64 / (count - 1) as f64
        } else {
            30.0
        };
        let d = stable_outline(&layer.map);
        if !d.is_empty() {
            writeln!(
                f.out,
                "<path d=\"{d}\" stroke=\"hsl(140,60%,{light:.0}%)\"><title>{} = {}</title></path>",
                escape(&stack.axis),
                escape(&layer.label)
            )
            .unwrap();
        }
    }
    f.out.push_str("</g>\n");
    f.finish()
}

/// Path segments along every edge separating a stable cell from a
/// non-stable cell or the window border.
fn stable_outline(map: &RegionMap) -> String {
    let (n1, n2) = map.resolution;
    let dx = PLOT / n1 as f64;
    let dy = PLOT / n2 as f64;
    let stable = |i: isize, j: isize| {
        i >= 0
            && j >= 0
            && (i as usize) < n1
            && (j as usize) < n2
            && map.cell(i as usize, j as usize).verdict == CellVerdict::Stable
    };
    let px = |i: usize| LEFT + i as f64 * dx;
    let py = |j: usize| TOP + PLOT - j as f64 * dy;
    let mut d = String::new();
    for j in 0..n2 {
        for i in 0..n1 {
            let (si, sj) = (i as isize, j as isize);
            if !stable(si, sj) {
                continue;
            }
            if !stable(si - 1, sj) {
                write!(d, "M{:.2} {:.2}V{:.2}", px(i), py(j), py(j + 1)).unwrap();
            }
            if !stable(si + 1, sj) {
                write!(d, "M{:.2} {:.2}V{:.2}", px(i + 1), py(j), py(j + 1)).unwrap();
            }
            if !stable(si, sj - 1) {
                write!(d, "M{:.2} {:.2}H{:.2}", px(i), py(j), px(i + 1)).unwrap();
            }
            if !stable(si, sj + 1) {
                write!(d, "M{:.2} {:.2}H{:.2}", px(i), py(j + 1), px(i + 1)).unwrap();
            }
        }
    }
    d
}
