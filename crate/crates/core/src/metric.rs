//! λ-lengths of segments and broken lines, and λ-areas.

use crate::curves::Polyline;
use crate::error::{Error, Result};
use crate::geometry::closest_param;
use crate::quadrature::{integrate, QuadOpts};
use crate::scene::MetricScene;
use crate::Point;
use std::f64::consts::PI;

/// A quadrature result that may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate {
        value: 0.0,
        error: 0.0,
        converged: true,
    };
    pub const INFINITE: Estimate = Estimate {
        value: f64::INFINITY,
        error: 0.0,
        converged: true,
    };

    fn add(self, other: Estimate) -> Estimate {
        Estimate {
            value: self.value + other.value,
            error: self.error + other.error,
            converged: self.converged && other.converged,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

fn reaches_two_pi(w: f64) -> bool {
    w >= 2.0 * PI * (1.0 - 1e-12)
}

// Integral over t in [ta, tb] of f, where f behaves like |t - ta|^{beta_a}
// (resp. |t - tb|^{beta_b}) at the ends. A power substitution absorbs the
// local behaviour of an exact cone.
fn integrate_piece(
    f: &impl Fn(f64) -> f64,
    ta: f64,
    tb: f64,
    beta_a: f64,
    beta_b: f64,
    breaks: &[f64],
    opts: QuadOpts,
) -> Estimate {
    let width = tb - ta;
    if width <= 0.0 {
        return Estimate::ZERO;
    }
    if beta_a != 0.0 && beta_b != 0.0 {
        let mid = 0.5 * (ta + tb);
        return integrate_piece(f, ta, mid, beta_a, 0.0, breaks, opts)
            .add(integrate_piece(f, mid, tb, 0.0, beta_b, breaks, opts));
    }
    let guard = |v: f64| if v.is_finite() { v } else { 0.0 };
    let r = if beta_a != 0.0 {
        let e = 1.0 / (1.0 + beta_a);
        let inner: Vec<f64> = breaks
            .iter()
            .filter(|t| **t > ta && **t < tb)
            .map(|t| ((t - ta) / width).powf(1.0 + beta_a))
            .collect();
        integrate(
            |u| {
                if u <= 0.0 {
                    return 0.0;
                }
                let s = u.powf(e);
                guard(f(ta + width * s) * width * e * s / u)
            },
            0.0,
            1.0,
            &inner,
            opts,
        )
    } else if beta_b != 0.0 {
        let e = 1.0 / (1.0 + beta_b);
        let inner: Vec<f64> = breaks
            .iter()
            .filter(|t| **t > ta && **t < tb)
            .map(|t| ((tb - t) / width).powf(1.0 + beta_b))
            .collect();
        integrate(
            |u| {
                if u <= 0.0 {
                    return 0.0;
                }
                let s = u.powf(e);
                guard(f(tb - width * s) * width * e * s / u)
            },
            0.0,
            1.0,
            &inner,
            opts,
        )
    } else {
        integrate(|t| guard(f(t)), ta, tb, breaks, opts)
    };
    Estimate {
        value: r.value,
        error: r.error,
        converged: r.converged,
    }
}

/// λ-length of the segment `[z1, z2]` without the domain check.
pub fn segment_length_unchecked(scene: &MetricScene, z1: Point, z2: Point, opts: QuadOpts) -> Estimate {
    let d = z2 - z1;
    let len = d.norm();
    if len == 0.0 {
        return Estimate::ZERO;
    }
    let scale = 1.0 + z1.norm().max(z2.norm());
    let on_tol = 1e-13 * scale;
    let mut breaks = Vec::new();
    // (parameter, exponent) of singular points lying on the segment
    let mut singular: Vec<(f64, f64)> = Vec::new();
    for &(zeta, w) in scene.singularities() {
        let t = closest_param(z1, z2, zeta);
        let dist = (z1 + d * t - zeta).norm();
        if dist <= on_tol {
            if w > 0.0 && reaches_two_pi(w) {
                return Estimate::INFINITE;
            }
            singular.push((t, -w / (2.0 * PI)));
        } else if dist < 2.0 * len {
            let spread = dist / len;
            breaks.extend([t, t - spread, t + spread]);
        }
    }
    let f = |t: f64| scene.sqrt_lambda(z1 + d * t) * len;
    singular.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cuts: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for (t, beta) in singular {
        if t <= 0.0 {
            cuts[0].1 += beta;
        } else if t >= 1.0 {
            // handled below
            cuts.push((1.0, beta));
        } else {
            cuts.push((t, beta));
        }
    }
    if cuts.last().is_none_or(|c| c.0 < 1.0) {
        cuts.push((1.0, 0.0));
    }
    let mut total = Estimate::ZERO;
    for w in cuts.windows(2) {
        total = total.add(integrate_piece(&f, w[0].0, w[1].0, w[0].1, w[1].1, &breaks, opts));
    }
    total
}

/// λ-length of the segment `[z1, z2]`: `∫ sqrt(λ(z(t))) |z2 - z1| dt`.
///
/// The segment is split at the closest approach to every atom; an atom at
/// an endpoint (or on the segment) with weight `w < 2π` is absorbed by the
/// substitution `t = u^{1/(1+β)}`, `β = -w/2π`, and `w ≥ 2π` gives `+∞`.
pub fn segment_length(scene: &MetricScene, z1: Point, z2: Point) -> Result<Estimate> {
    if !scene.domain.contains(z1) || !scene.domain.contains(z2) {
        return Err(Error::Precondition("segment must lie in the domain".into()));
    }
    Ok(segment_length_unchecked(scene, z1, z2, QuadOpts::default()))
}

pub fn polyline_length(scene: &MetricScene, p: &Polyline) -> Result<Estimate> {
    polyline_length_with(scene, p, QuadOpts::default())
}

pub fn polyline_length_with(scene: &MetricScene, p: &Polyline, opts: QuadOpts) -> Result<Estimate> {
    if p.vertices().iter().any(|v| !scene.domain.contains(*v)) {
        return Err(Error::Precondition("polyline must lie in the domain".into()));
    }
    Ok(p.edges()
        .map(|(a, b)| segment_length_unchecked(scene, a, b, opts))
        .fold(Estimate::ZERO, Estimate::add))
}

// ∬ over triangle (apex, b, c) of λ, in polar coordinates about the apex,
// with the radial substitution matched to λ ~ |z - apex|^{2β}.
fn triangle_polar(scene: &MetricScene, apex: Point, b: Point, c: Point, beta: f64, opts: QuadOpts) -> Estimate {
    let (db, dc) = (b - apex, c - apex);
    let th0 = db.arg();
    let span = (dc / db).arg();
    if span == 0.0 {
        return Estimate::ZERO;
    }
    let edge = c - b;
    let normal = Point::new(edge.im, -edge.re);
    let e = 1.0 / (2.0 * beta + 2.0);
    let mut err = 0.0;
    let mut ok = true;
    let outer = integrate(
        |phi| {
            let dir = Point::from_polar(1.0, th0 + phi);
            // distance along dir to the line through b, c
            let rmax = (db.re * normal.re + db.im * normal.im) / (dir.re * normal.re + dir.im * normal.im);
            let inner = integrate(
                |v| {
                    if v <= 0.0 {
                        return 0.0;
                    }
                    let r = rmax * v.powf(e);
                    let val = scene.lambda(apex + dir * r) * r * rmax * e * v.powf(e - 1.0);
                    if val.is_finite() {
                        val
                    } else {
                        0.0
                    }
                },
                0.0,
                1.0,
                &[],
                opts,
            );
            err += inner.error;
            ok &= inner.converged;
            inner.value
        },
        0.0,
        span,
        &[],
        opts,
    );
    Estimate {
        value: outer.value.abs(),
        error: outer.error + err,
        converged: outer.converged && ok,
    }
}

fn rect_nested(scene: &MetricScene, x0: f64, y0: f64, x1: f64, y1: f64, opts: QuadOpts) -> Estimate {
    let mut err = 0.0;
    let mut ok = true;
    let xb: Vec<f64> = scene.singularities().iter().map(|(p, _)| p.re).collect();
    let yb: Vec<f64> = scene.singularities().iter().map(|(p, _)| p.im).collect();
    let outer = integrate(
        |x| {
            let inner = integrate(|y| scene.lambda(Point::new(x, y)), y0, y1, &yb, opts);
            err += inner.error;
            ok &= inner.converged;
            inner.value
        },
        x0,
        x1,
        &xb,
        opts,
    );
    Estimate {
        value: outer.value,
        error: outer.error + err,
        converged: outer.converged && ok,
    }
}

/// λ-area `∬ λ` of the axis-aligned rectangle `[x0, x1] x [y0, y1]`.
pub fn area(scene: &MetricScene, x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Estimate> {
    if !(x0 < x1 && y0 < y1) {
        return Err(Error::InvalidInput("rectangle needs x0 < x1 and y0 < y1".into()));
    }
    let corners = [Point::new(x0, y0), Point::new(x1, y0), Point::new(x1, y1), Point::new(x0, y1)];
    if corners.iter().any(|c| !scene.domain.contains(*c)) {
        return Err(Error::Precondition("rectangle must lie in the domain".into()));
    }
    let inside: Vec<(Point, f64)> = scene
        .singularities()
        .iter()
        .copied()
        .filter(|(p, _)| p.re >= x0 && p.re <= x1 && p.im >= y0 && p.im <= y1)
        .collect();
    if inside.iter().any(|(_, w)| *w > 0.0 && reaches_two_pi(*w)) {
        return Ok(Estimate::INFINITE);
    }
    let opts = QuadOpts {
        abs_tol: 1e-10,
        rel_tol: 1e-9,
        max_intervals: 300,
    };
    let mut xs = vec![x0, x1];
    let mut ys = vec![y0, y1];
    for (p, _) in &inside {
        xs.push(p.re);
        ys.push(p.im);
    }
    for v in [&mut xs, &mut ys] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let beta_at = |z: Point| -> Option<f64> {
        inside
            .iter()
            .find(|(p, _)| *p == z)
            .map(|(_, w)| -w / (2.0 * PI))
    };
    let mut total = Estimate::ZERO;
    for i in 0..xs.len() - 1 {
        for j in 0..ys.len() - 1 {
            let (a0, a1, b0, b1) = (xs[i], xs[i + 1], ys[j], ys[j + 1]);
            let (am, bm) = (0.5 * (a0 + a1), 0.5 * (b0 + b1));
            // quarters: each has at most one singular corner
            for (qx0, qx1, qy0, qy1, corner) in [
                (a0, am, b0, bm, Point::new(a0, b0)),
                (am, a1, b0, bm, Point::new(a1, b0)),
                (am, a1, bm, b1, Point::new(a1, b1)),
                (a0, am, bm, b1, Point::new(a0, b1)),
            ] {
                let part = match beta_at(corner) {
                    Some(beta) => {
                        let quad = [
                            Point::new(qx0, qy0),
                            Point::new(qx1, qy0),
                            Point::new(qx1, qy1),
                            Point::new(qx0, qy1),
                        ];
                        let k = quad.iter().position(|q| *q == corner).unwrap_or(0);
                        let (p1, p2, p3) = (quad[(k + 1) % 4], quad[(k + 2) % 4], quad[(k + 3) % 4]);
                        triangle_polar(scene, corner, p1, p2, beta, opts)
                            .add(triangle_polar(scene, corner, p2, p3, beta, opts))
                    }
                    None => rect_nested(scene, qx0, qy0, qx1, qy1, opts),
                };
                total = total.add(part);
            }
        }
    }
    Ok(total)
}

/// λ-area of the disc `Q(center, radius)`, in polar coordinates about the
/// centre (with the cone substitution when an atom sits there).
pub fn area_disc(scene: &MetricScene, center: Point, radius: f64) -> Result<Estimate> {
    if !scene.domain.contains_disc(center, 0.0) || (center - scene.domain.center).norm() + radius > scene.domain.radius {
        return Err(Error::Precondition("disc must lie in the domain".into()));
    }
    let mut rb = Vec::new();
    let mut tb = Vec::new();
    let mut beta = 0.0;
    for &(p, w) in scene.singularities() {
        let d = (p - center).norm();
        if d == 0.0 {
            if w > 0.0 && reaches_two_pi(w) {
                return Ok(Estimate::INFINITE);
            }
            beta = -w / (2.0 * PI);
        } else if d <= radius {
            if w > 0.0 && reaches_two_pi(w) {
                return Ok(Estimate::INFINITE);
            }
            rb.push(d);
            tb.push((p - center).arg().rem_euclid(2.0 * PI));
        }
    }
    let opts = QuadOpts {
        abs_tol: 1e-10,
        rel_tol: 1e-9,
        max_intervals: 300,
    };
    let e = 1.0 / (2.0 * beta + 2.0);
    let vb: Vec<f64> = rb.iter().map(|r| (r / radius).powf(2.0 * beta + 2.0)).collect();
    let mut err = 0.0;
    let mut ok = true;
    let outer = integrate(
        |v| {
            if v <= 0.0 {
                return 0.0;
            }
            let r = radius * v.powf(e);
            let jac = r * radius * e * v.powf(e - 1.0);
            let inner = integrate(
                |th| {
                    let val = scene.lambda(center + Point::from_polar(r, th));
                    if val.is_finite() {
                        val
                    } else {
                        0.0
                    }
                },
                0.0,
                2.0 * PI,
                &tb,
                opts,
            );
            err += inner.error * jac;
            ok &= inner.converged;
            inner.value * jac
        },
        0.0,
        1.0,
        &vb,
        opts,
    );
    Ok(Estimate {
        value: outer.value,
        error: outer.error + err,
        converged: outer.converged && ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{ComplexPoly, HarmonicPoly};
    use crate::measure::{Domain, SignedMeasure};
    use crate::scene::{pullback, Derivation};

    fn c(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn cone(w: f64) -> MetricScene {
        MetricScene::new(
            Domain::new(c(0.0, 0.0), 10.0).unwrap(),
            SignedMeasure::atom(c(0.0, 0.0), w).unwrap(),
            HarmonicPoly::zero(),
        )
        .unwrap()
    }

    #[test]
    fn segment_length_examples() {
        let flat = MetricScene::flat(Domain::new(c(0.0, 0.0), 10.0).unwrap());
        assert!((segment_length(&flat, c(0.0, 0.0), c(3.0, 4.0)).unwrap().value - 5.0).abs() < 1e-12);
        let l = segment_length(&cone(PI), c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((l.value - 2.0).abs() < 1e-6, "{l:?}");
        let l = segment_length(&cone(PI), c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!((l.value - 2.0).abs() < 1e-6);
        assert_eq!(segment_length(&cone(2.0 * PI), c(0.0, 0.0), c(1.0, 0.0)).unwrap().value, f64::INFINITY);
        assert_eq!(segment_length(&cone(2.0 * PI), c(-1.0, 0.0), c(1.0, 0.0)).unwrap().value, f64::INFINITY);
        // through an integrable atom: twice the radial length
        let l = segment_length(&cone(1.5 * PI), c(-1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((l.value - 2.0 * 4.0).abs() < 1e-6, "{l:?}");
        // negative atom: β = 1/2, radial length r^{3/2}/(3/2)
        let l = segment_length(&cone(-PI), c(0.0, 0.0), c(2.0, 0.0)).unwrap();
        assert!((l.value - 2f64.powf(1.5) / 1.5).abs() < 1e-8);
    }

    #[test]
    fn circle_lengths() {
        for (r, beta) in [(1.0, -0.5), (2.0, 0.5), (0.5, -0.25)] {
            let s = cone(-2.0 * PI * beta);
            let poly = Polyline::regular_polygon(c(0.0, 0.0), r, 1024);
            let l = polyline_length(&s, &poly).unwrap().value;
            let expect = 2.0 * PI * f64::powf(r, 1.0 + beta);
            assert!((l / expect - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn spiral_length_in_quadratic_factor() {
        // λ = |z|² from an atom of weight -2π; along r ↦ r e^{i(1/r - π)} the
        // element is sqrt(1 + r²) dr, with antiderivative ½[r sqrt(1+r²) + asinh r].
        let s = cone(-2.0 * PI);
        let (r0, r1) = (1.0 / PI, 1.0);
        let n = 4000;
        let pts: Vec<Point> = (0..=n)
            .map(|k| {
                let r = r0 + (r1 - r0) * k as f64 / n as f64;
                Point::from_polar(r, 1.0 / r - PI)
            })
            .collect();
        let l = polyline_length(&s, &Polyline::open(pts).unwrap()).unwrap().value;
        let prim = |r: f64| 0.5 * (r * (1.0 + r * r).sqrt() + r.asinh());
        assert!((l - (prim(r1) - prim(r0))).abs() < 1e-5, "{l}");
    }

    #[test]
    fn area_examples() {
        let flat = MetricScene::flat(Domain::new(c(0.0, 0.0), 10.0).unwrap());
        assert!((area(&flat, 0.0, 0.0, 1.0, 1.0).unwrap().value - 1.0).abs() < 1e-12);
        for w in [-PI, 0.5, PI, 1.5 * PI] {
            let beta = -w / (2.0 * PI);
            let s = cone(w);
            let a = area_disc(&s, c(0.0, 0.0), 1.0).unwrap().value;
            assert!((a - PI / (1.0 + beta)).abs() < 1e-7, "w={w}: {a}");
            // rectangle split at the atom, checked against the polar closed
            // form for the square [-1, 1]² = disc + corners
            let sq = area(&s, -1.0, -1.0, 1.0, 1.0).unwrap().value;
            let corners = 4.0 * {
                // ∬ over [0,1]² minus quarter disc, in polar about 0
                let opts = QuadOpts::tight();
                integrate(
                    |th: f64| {
                        let rmax = 1.0 / th.cos().max(th.sin());
                        (rmax.powf(2.0 * beta + 2.0) - 1.0) / (2.0 * beta + 2.0)
                    },
                    0.0,
                    PI / 2.0,
                    &[PI / 4.0],
                    opts,
                )
                .value
            };
            assert!((sq - (PI / (1.0 + beta) + corners)).abs() < 1e-6, "w={w}: {sq}");
        }
        assert_eq!(area(&cone(2.0 * PI), -1.0, -1.0, 1.0, 1.0).unwrap().value, f64::INFINITY);
    }

    #[test]
    fn affine_pullback_preserves_area() {
        let s = MetricScene::new(
            Domain::new(c(0.0, 0.0), 10.0).unwrap(),
            SignedMeasure::atom(c(0.2, 0.1), 1.0).unwrap(),
            HarmonicPoly::new(vec![c(0.0, 0.0), c(0.3, 0.0)]),
        )
        .unwrap();
        // z ↦ 2z + 1 maps [0, 0.5]² onto [1, 2] x [0, 1]
        let f = ComplexPoly::new(vec![c(1.0, 0.0), c(2.0, 0.0)]);
        let p = pullback(&s, &f, Domain::new(c(0.0, 0.0), 2.0).unwrap()).unwrap();
        let a1 = area(&p, 0.0, 0.0, 0.5, 0.5).unwrap().value;
        let a2 = area(&s, 1.0, 0.0, 2.0, 1.0).unwrap().value;
        assert!((a1 / a2 - 1.0).abs() < 1e-4, "{a1} {a2}");
        let d = s.derive(Derivation::Affine { a: c(2.0, 0.0), b: c(1.0, 0.0), factor: 1.0 }, Domain::new(c(0.0, 0.0), 2.0).unwrap()).unwrap();
        assert!((area(&d, 0.0, 0.0, 0.5, 0.5).unwrap().value / a2 - 1.0).abs() < 1e-4);
    }
}
