//! Left and right turns of broken lines, the Gauss-Bonnet audit, angles at a
//! vertex and comparison-angle excesses.

use crate::cone::{self, ConeSpec};
use crate::curves::{angular_function, locate, one_sided_angles, rotation, OnCurve, Polyline};
use crate::distance::{distance, point_at_fraction, DistanceOpts, DistanceResult};
use crate::error::{Error, Result};
use crate::geometry::{
    circle_arc_fraction_in_polygon, clip_convex, polygon_disc_area, polygon_signed_area, segment_circle_params,
    segment_distance, segments_intersect, winding_number,
};
use crate::harmonic::conjugate_diff;
use crate::measure::SignedMeasure;
use crate::quadrature::{gauss_legendre, integrate, QuadOpts};
use crate::scene::MetricScene;
use crate::Point;
use std::f64::consts::PI;
use std::sync::Mutex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

fn plain_scene(scene: &MetricScene) -> Result<()> {
    if scene.is_derived() {
        return Err(Error::DerivedScene);
    }
    Ok(())
}

// φ at a quadrature node; nodes landing on the curve take the mean of the
// one-sided limits, which does not affect the integral.
fn phi_at(p: &Polyline, z: Point) -> f64 {
    match angular_function(p, z) {
        Ok(v) => v,
        Err(_) => one_sided_angles(p, z).map(|(l, r)| 0.5 * (l + r)).unwrap_or(0.0),
    }
}

fn opts() -> QuadOpts {
    QuadOpts {
        abs_tol: 1e-11,
        rel_tol: 1e-10,
        max_intervals: 400,
    }
}

// Parameters r > 0 where the ray c + r e^{iθ} meets an edge.
fn ray_hits(p: &Polyline, c: Point, theta: f64) -> Vec<f64> {
    let d = Point::from_polar(1.0, theta);
    let mut out = Vec::new();
    for (a, b) in p.edges() {
        let e = b - a;
        let denom = d.re * e.im - d.im * e.re;
        if denom == 0.0 {
            continue;
        }
        let w = a - c;
        let r = (w.re * e.im - w.im * e.re) / denom;
        let s = (w.re * d.im - w.im * d.re) / denom;
        if r > 0.0 && (0.0..=1.0).contains(&s) {
            out.push(r);
        }
    }
    out
}

fn circle_phi(p: &Polyline, c: Point, r: f64) -> f64 {
    let mut breaks = Vec::new();
    for (a, b) in p.edges() {
        for t in segment_circle_params(a, b, c, r) {
            breaks.push((a + (b - a) * t - c).arg().rem_euclid(2.0 * PI));
        }
    }
    integrate(|th| phi_at(p, c + Point::from_polar(r, th)), 0.0, 2.0 * PI, &breaks, opts()).value / (2.0 * PI)
}

// Mean of φ over the disc Q(c, r), in polar coordinates about c.
fn disc_phi(p: &Polyline, c: Point, r: f64) -> f64 {
    let mut breaks: Vec<f64> = p
        .vertices()
        .iter()
        .filter(|v| (**v - c).norm() < r && **v != c)
        .map(|v| (*v - c).arg().rem_euclid(2.0 * PI))
        .collect();
    for (a, b) in p.edges() {
        for t in segment_circle_params(a, b, c, r) {
            breaks.push((a + (b - a) * t - c).arg().rem_euclid(2.0 * PI));
        }
    }
    let total = integrate(
        |th| {
            let hits = ray_hits(p, c, th);
            integrate(|s| phi_at(p, c + Point::from_polar(s, th)) * s, 0.0, r, &hits, opts()).value
        },
        0.0,
        2.0 * PI,
        &breaks,
        opts(),
    );
    total.value / (PI * r * r)
}

// Mean of φ over an axis-aligned cell: tensor Gauss-Legendre away from the
// curve, nested adaptive quadrature split at crossings near it.
fn cell_phi(p: &Polyline, corners: &[Point; 4], rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (x0, y0) = (corners[0].re, corners[0].im);
    let (x1, y1) = (corners[2].re, corners[2].im);
    let (w, h) = (x1 - x0, y1 - y0);
    let center = Point::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let gap = p.edges().map(|(a, b)| segment_distance(a, b, center)).fold(f64::INFINITY, f64::min);
    if gap > 0.75 * w.max(h) {
        let mut total = 0.0;
        for (xi, wi) in rule.0.iter().zip(&rule.1) {
            for (yj, wj) in rule.0.iter().zip(&rule.1) {
                let z = Point::new(x0 + 0.5 * w * (xi + 1.0), y0 + 0.5 * h * (yj + 1.0));
                total += 0.25 * wi * wj * phi_at(p, z);
            }
        }
        return total;
    }
    let xb: Vec<f64> = p.vertices().iter().map(|v| v.re).collect();
    let inner = |x: f64| {
        let mut yb = Vec::new();
        for (a, b) in p.edges() {
            if (a.re - x) * (b.re - x) <= 0.0 && a.re != b.re {
                let t = (x - a.re) / (b.re - a.re);
                yb.push(a.im + t * (b.im - a.im));
            }
        }
        integrate(|y| phi_at(p, Point::new(x, y)), y0, y1, &yb, opts()).value
    };
    integrate(inner, x0, x1, &xb, opts()).value / (w * h)
}

/// `∬ φ_side(K, ζ) dω(ζ)`: exact one-sided limits for atoms, quadrature for
/// densities.
pub fn phi_integral(m: &SignedMeasure, p: &Polyline, side: Side) -> Result<f64> {
    let mut total = 0.0;
    for a in m.atoms() {
        if locate(p, a.pos) == OnCurve::Endpoint {
            return Err(Error::AtomOnCurve(a.pos, "at an extremity of the curve"));
        }
        let (l, r) = one_sided_angles(p, a.pos)?;
        total += a.weight * if side == Side::Left { l } else { r };
    }
    for c in m.circles() {
        total += c.mass * circle_phi(p, c.center, c.radius);
    }
    for d in m.discs() {
        total += d.mass * disc_phi(p, d.center, d.radius);
    }
    let rule = gauss_legendre(4);
    for g in m.grids() {
        for (i, j, mass) in g.cells() {
            if mass != 0.0 {
                total += mass * cell_phi(p, &g.cell_polygon(i, j), &rule);
            }
        }
    }
    Ok(total)
}

/// `κ_l(K) = κ(K) - (1/2π) ∬ φ_r dω + h*(z₁) - h*(z₂)`.
pub fn left_turn(scene: &MetricScene, p: &Polyline) -> Result<f64> {
    plain_scene(scene)?;
    let phi = phi_integral(&scene.measure, p, Side::Right)?;
    Ok(rotation(p)? - phi / (2.0 * PI) + conjugate_diff(&scene.harmonic, p.start(), p.end()))
}

/// `κ_r(K) = -κ(K) + (1/2π) ∬ φ_l dω - h*(z₁) + h*(z₂)`.
pub fn right_turn(scene: &MetricScene, p: &Polyline) -> Result<f64> {
    plain_scene(scene)?;
    let phi = phi_integral(&scene.measure, p, Side::Left)?;
    Ok(-rotation(p)? + phi / (2.0 * PI) - conjugate_diff(&scene.harmonic, p.start(), p.end()))
}

/// `ω(K°)`: mass carried by the curve minus its extremities. Densities give
/// no mass to a broken line.
pub fn mass_on_curve(m: &SignedMeasure, p: &Polyline) -> f64 {
    m.atoms()
        .iter()
        .filter(|a| matches!(locate(p, a.pos), OnCurve::Edge(_) | OnCurve::Vertex(_)))
        .map(|a| a.weight)
        .sum()
}

/// `ω(D)` for the region bounded by a closed polygon, counted with winding
/// number. Atoms on the polygon are not counted.
pub fn interior_mass(m: &SignedMeasure, polygon: &[Point]) -> f64 {
    let closed = Polyline::closed(polygon.to_vec());
    let mut total = 0.0;
    for a in m.atoms() {
        let on = closed.as_ref().map(|p| locate(p, a.pos) != OnCurve::Off).unwrap_or(false);
        if !on {
            total += a.weight * winding_number(polygon, a.pos) as f64;
        }
    }
    for d in m.discs() {
        total += d.mass * polygon_disc_area(polygon, d.center, d.radius) / (PI * d.radius * d.radius);
    }
    let sign = polygon_signed_area(polygon).signum();
    for c in m.circles() {
        total += sign * c.mass * circle_arc_fraction_in_polygon(polygon, c.center, c.radius);
    }
    for g in m.grids() {
        let area = g.cell() * g.cell();
        for (i, j, mass) in g.cells() {
            if mass != 0.0 {
                let clipped = clip_convex(polygon, &g.cell_polygon(i, j));
                if clipped.len() >= 3 {
                    total += mass * polygon_signed_area(&clipped) / area;
                }
            }
        }
    }
    total
}

fn check_simple(p: &Polyline) -> Result<()> {
    let e: Vec<(Point, Point)> = p.edges().collect();
    let n = e.len();
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (p.is_closed() && i == 0 && j == n - 1);
            if !adjacent && segments_intersect(e[i].0, e[i].1, e[j].0, e[j].1) {
                return Err(Error::Precondition(format!("edges {i} and {j} intersect")));
            }
        }
    }
    Ok(())
}

/// `κ_l(K) + ω(D) - 2π` for a closed, simple, positively oriented polygon.
pub fn gauss_bonnet_defect(scene: &MetricScene, p: &Polyline) -> Result<f64> {
    plain_scene(scene)?;
    if !p.is_closed() {
        return Err(Error::Precondition("Gauss-Bonnet needs a closed polyline".into()));
    }
    if polygon_signed_area(p.vertices()) <= 0.0 {
        return Err(Error::Precondition("polygon must be positively oriented".into()));
    }
    check_simple(p)?;
    for a in scene.measure.atoms() {
        if locate(p, a.pos) != OnCurve::Off {
            return Err(Error::AtomOnCurve(a.pos, "on the boundary"));
        }
    }
    let kl = left_turn(scene, p)?;
    Ok(kl + interior_mass(&scene.measure, p.vertices()) - 2.0 * PI)
}

/// Sector angle on the left between two broken lines leaving a common point
/// (CCW from `p2`'s initial direction to `p1`'s), scaled by `1 - ω({z})/2π`.
pub fn subharmonic_angle(scene: &MetricScene, p1: &Polyline, p2: &Polyline) -> Result<f64> {
    let z = p1.start();
    if p2.start() != z {
        return Err(Error::InvalidInput("broken lines must share their start point".into()));
    }
    let w = scene.atom_weight_at(z);
    if w >= 2.0 * PI * (1.0 - 1e-12) {
        return Err(Error::PossiblyAtInfinity(z, w));
    }
    let d1 = p1.vertices()[1] - z;
    let d2 = p2.vertices()[1] - z;
    let theta = (d1 / d2).arg().rem_euclid(2.0 * PI);
    Ok(theta * (1.0 - w / (2.0 * PI)))
}

/// Distances and shortest arcs of some metric.
pub trait GeodesicOracle {
    fn distance(&self, a: Point, b: Point) -> Result<f64>;
    /// Point at fraction `t` of the length of a shortest arc from `a` to `b`.
    fn point_along(&self, a: Point, b: Point, t: f64) -> Result<Point>;
    fn shortest_arc(&self, a: Point, b: Point) -> Result<Polyline>;
}

impl GeodesicOracle for ConeSpec {
    fn distance(&self, a: Point, b: Point) -> Result<f64> {
        Ok(cone::cone_distance(self, a, b))
    }

    fn point_along(&self, a: Point, b: Point, t: f64) -> Result<Point> {
        Ok(cone::point_along(self, a, b, t))
    }

    fn shortest_arc(&self, a: Point, b: Point) -> Result<Polyline> {
        let mut v: Vec<Point> = (0..=128).map(|k| cone::point_along(self, a, b, k as f64 / 128.0)).collect();
        v.dedup();
        Polyline::open(v)
    }
}

/// Geodesics from the distance solver; witnesses are cached per pair.
pub struct SolverOracle<'a> {
    scene: &'a MetricScene,
    opts: DistanceOpts,
    cache: Mutex<Vec<(Point, Point, DistanceResult)>>,
}

impl<'a> SolverOracle<'a> {
    pub fn new(scene: &'a MetricScene, opts: DistanceOpts) -> Self {
        Self {
            scene,
            opts,
            cache: Mutex::new(Vec::new()),
        }
    }

    fn solve(&self, a: Point, b: Point) -> Result<DistanceResult> {
        if let Some((_, _, r)) = self.cache.lock().unwrap().iter().find(|(p, q, _)| *p == a && *q == b) {
            return Ok(r.clone());
        }
        let r = distance(self.scene, a, b, &self.opts)?;
        self.cache.lock().unwrap().push((a, b, r.clone()));
        Ok(r)
    }
}

impl GeodesicOracle for SolverOracle<'_> {
    fn distance(&self, a: Point, b: Point) -> Result<f64> {
        Ok(self.solve(a, b)?.value)
    }

    fn point_along(&self, a: Point, b: Point, t: f64) -> Result<Point> {
        Ok(point_at_fraction(self.scene, &self.solve(a, b)?.witness, t))
    }

    fn shortest_arc(&self, a: Point, b: Point) -> Result<Polyline> {
        Ok(self.solve(a, b)?.witness)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Angle of the Euclidean comparison triangle of the whole triangle.
    pub alpha0: f64,
    /// `(t, α_t)`: comparison angles of the shrinking triangles.
    pub sequence: Vec<(f64, f64)>,
    /// Extrapolation of the sequence to `t = 0`.
    pub alpha_bar: f64,
    /// `ω⁺` of the interior of the geodesic triangle.
    pub omega_plus: f64,
    pub excess: f64,
    pub excess_bound_holds: bool,
}

fn comparison_angle(a: f64, b: f64, c: f64) -> f64 {
    ((a * a + b * b - c * c) / (2.0 * a * b)).clamp(-1.0, 1.0).acos()
}

/// Comparison angle at `x` of the triangle `x y1 y2` and its small-triangle
/// limit along the shortest arcs, checked against `ᾱ - α₀ ≤ ω⁺(T°) + tol`.
pub fn comparison_excess(
    scene: &MetricScene,
    oracle: &dyn GeodesicOracle,
    x: Point,
    y1: Point,
    y2: Point,
    t_schedule: &[f64],
    tol: f64,
) -> Result<Comparison> {
    plain_scene(scene)?;
    if t_schedule.is_empty() || t_schedule.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(Error::InvalidInput("t schedule must be non-empty with entries in (0, 1]".into()));
    }
    let a = oracle.distance(x, y1)?;
    let b = oracle.distance(x, y2)?;
    let c = oracle.distance(y1, y2)?;
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(Error::Precondition("triangle sides must be finite".into()));
    }
    let slack = 1e-9 * (a + b + c);
    if a + b - c <= slack || a + c - b <= slack || b + c - a <= slack {
        return Err(Error::DegenerateTriangle(format!("sides {a}, {b}, {c}")));
    }
    let alpha0 = comparison_angle(a, b, c);
    let mut sequence = Vec::with_capacity(t_schedule.len());
    for &t in t_schedule {
        let p1 = oracle.point_along(x, y1, t)?;
        let p2 = oracle.point_along(x, y2, t)?;
        let ct = oracle.distance(p1, p2)?;
        sequence.push((t, comparison_angle(t * a, t * b, ct)));
    }
    let alpha_bar = match sequence.as_slice() {
        [.., (t0, a0), (t1, a1)] if t0 != t1 => a1 + (a1 - a0) * t1 / (t0 - t1),
        _ => sequence[sequence.len() - 1].1,
    };
    let mut boundary: Vec<Point> = Vec::new();
    for (p, q) in [(x, y1), (y1, y2), (y2, x)] {
        let arc = oracle.shortest_arc(p, q)?;
        boundary.extend_from_slice(&arc.vertices()[..arc.vertices().len() - 1]);
    }
    if polygon_signed_area(&boundary) < 0.0 {
        boundary.reverse();
    }
    let omega_plus = interior_mass(&scene.measure.jordan_parts().0, &boundary);
    let excess = alpha_bar - alpha0;
    Ok(Comparison {
        alpha0,
        sequence,
        alpha_bar,
        omega_plus,
        excess,
        excess_bound_holds: excess <= omega_plus + tol,
    })
}
