//! Standalone SVG 1.1 output: λ heatmaps with polyline overlays, and
//! convergence curves.

use num_complex::Complex64 as Point;
use std::fmt::Write;
use submetric::convergence::ExperimentTable;
use submetric::curves::Polyline;
use submetric::MetricScene;

const SIZE: f64 = 512.0;

// A few stops of a perceptual dark-to-light ramp.
const RAMP: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let k = (t.floor() as usize).min(RAMP.len() - 2);
    let f = t - k as f64;
    let (a, b) = (RAMP[k], RAMP[k + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

struct Frame {
    lo: Point,
    scale: f64,
}

impl Frame {
    fn new(lo: Point, hi: Point) -> Self {
        let w = (hi.re - lo.re).max(hi.im - lo.im).max(1e-12);
        Frame { lo, scale: SIZE / w }
    }

    fn xy(&self, z: Point) -> (f64, f64) {
        ((z.re - self.lo.re) * self.scale, SIZE - (z.im - self.lo.im) * self.scale)
    }
}

/// Heatmap of `ln λ` on the square `[lo, hi]` (cells outside the domain left
/// blank), with atoms marked and the given polylines drawn on top.
pub fn heatmap(scene: &MetricScene, lo: Point, hi: Point, cells: usize, curves: &[&Polyline]) -> String {
    let frame = Frame::new(lo, hi);
    let side = (hi.re - lo.re).max(hi.im - lo.im);
    let h = side / cells as f64;
    let mut values = Vec::with_capacity(cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let z = lo + Point::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            values.push(if scene.domain.contains(z) { Some(scene.log_lambda(z)) } else { None });
        }
    }
    let finite = values.iter().flatten().filter(|v| v.is_finite());
    let (vmin, vmax) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let span = if vmax > vmin { vmax - vmin } else { 1.0 };

    let mut s = header();
    let px = h * frame.scale;
    for j in 0..cells {
        for i in 0..cells {
            let Some(v) = values[j * cells + i] else { continue };
            let t = if v == f64::INFINITY {
                1.0
            } else if v.is_finite() {
                (v - vmin) / span
            } else {
                0.0
            };
            let (x, y) = frame.xy(lo + Point::new(i as f64 * h, (j + 1) as f64 * h));
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                px + 0.3,
                px + 0.3,
                color(t)
            );
        }
    }
    for a in scene.measure.atoms() {
        let (x, y) = frame.xy(a.pos);
        let (stroke, r) = if a.weight > 0.0 { ("#d62728", 5.0) } else { ("#1f77b4", 4.0) };
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="none" stroke="{stroke}" stroke-width="2"><title>atom {:.6}</title></circle>"#,
            a.weight
        );
    }
    for p in curves {
        polyline(&mut s, &frame, p, "#ffffff");
    }
    let _ = writeln!(
        s,
        r##"<text x="6" y="{:.0}" font-family="sans-serif" font-size="12" fill="#000">ln λ in [{vmin:.3}, {vmax:.3}]</text>"##,
        SIZE + 16.0
    );
    s.push_str("</svg>\n");
    s
}

fn header() -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{SIZE}\" height=\"{}\" viewBox=\"0 0 {SIZE} {}\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n",
        SIZE + 24.0,
        SIZE + 24.0
    )
}

fn polyline(s: &mut String, frame: &Frame, p: &Polyline, stroke: &str) {
    let mut pts: Vec<String> = p
        .vertices()
        .iter()
        .map(|z| {
            let (x, y) = frame.xy(*z);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    if p.is_closed() {
        pts.push(pts[0].clone());
    }
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="2"/>"#,
        pts.join(" ")
    );
}

/// Discrepancy against scale on log-log axes, scales decreasing left to right.
pub fn convergence_curve(table: &ExperimentTable, label: &str) -> String {
    let pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .map(|r| (r.scale.ln(), r.discrepancy.max(1e-300).ln()))
        .collect();
    let (xmin, xmax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (ymin, ymax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let pad = 40.0;
    let sx = |x: f64| {
        if xmax > xmin {
            pad + (xmax - x) / (xmax - xmin) * (SIZE - 2.0 * pad)
        } else {
            SIZE / 2.0
        }
    };
    let sy = |y: f64| {
        if ymax > ymin {
            SIZE - pad - (y - ymin) / (ymax - ymin) * (SIZE - 2.0 * pad)
        } else {
            SIZE / 2.0
        }
    };
    let mut s = header();
    let _ = writeln!(
        s,
        r##"<path d="M {pad} {pad} L {pad} {b} L {r} {b}" fill="none" stroke="#000"/>"##,
        b = SIZE - pad,
        r = SIZE - pad
    );
    let line: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##, line.join(" "));
    for (r, (x, y)) in table.rows.iter().zip(&pts) {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#1f77b4"><title>scale {} discrepancy {:e}</title></circle>"##,
            sx(*x),
            sy(*y),
            r.scale,
            r.discrepancy
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.0}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            sx(*x),
            SIZE - pad + 14.0,
            r.scale
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{pad}" y="20" font-family="sans-serif" font-size="12">{label}: sup discrepancy (log) vs scale (log)</text>"#
    );
    s.push_str("</svg>\n");
    s
}
