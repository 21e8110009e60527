//! Euclidean analysis of broken lines: length, rotation, angular functions.

use crate::error::{Error, Result};
use crate::geometry::{cross, dot, segment_distance};
use crate::Point;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<Point>,
    closed: bool,
}

impl Polyline {
    pub fn new(vertices: Vec<Point>, closed: bool) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidInput("a polyline needs at least two vertices".into()));
        }
        for v in &vertices {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::InvalidInput("polyline vertices must be finite".into()));
            }
        }
        for (i, w) in vertices.windows(2).enumerate() {
            if w[0] == w[1] {
                return Err(Error::InvalidInput(format!("vertices {i} and {} coincide", i + 1)));
            }
        }
        if closed && vertices.len() < 3 {
            return Err(Error::InvalidInput("a closed polyline needs at least three vertices".into()));
        }
        if closed && vertices[0] == vertices[vertices.len() - 1] {
            return Err(Error::InvalidInput("closed polylines must not repeat the first vertex".into()));
        }
        Ok(Self { vertices, closed })
    }

    pub fn open(vertices: Vec<Point>) -> Result<Self> {
        Self::new(vertices, false)
    }

    pub fn closed(vertices: Vec<Point>) -> Result<Self> {
        Self::new(vertices, true)
    }

    /// Regular `n`-gon inscribed in `C(center, r)`, counter-clockwise.
    pub fn regular_polygon(center: Point, r: f64, n: usize) -> Self {
        let v = (0..n)
            .map(|k| center + Point::from_polar(r, 2.0 * PI * k as f64 / n as f64))
            .collect();
        Self::closed(v).expect("regular polygon is valid")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn start(&self) -> Point {
        self.vertices[0]
    }

    pub fn end(&self) -> Point {
        if self.closed {
            self.vertices[0]
        } else {
            self.vertices[self.vertices.len() - 1]
        }
    }

    /// Edges as `(from, to)`, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        let m = if self.closed { n } else { n - 1 };
        (0..m).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        Self {
            vertices: v,
            closed: self.closed,
        }
    }

    /// Open concatenation; `other` must start where `self` ends.
    pub fn concat(&self, other: &Polyline) -> Result<Self> {
        if self.closed || other.closed || self.end() != other.start() {
            return Err(Error::InvalidInput("concatenation needs open polylines sharing an endpoint".into()));
        }
        let mut v = self.vertices.clone();
        v.extend_from_slice(&other.vertices[1..]);
        Self::open(v)
    }

    /// Split an open polyline at interior vertex `k` into `[0..=k]` and `[k..]`.
    pub fn split_at(&self, k: usize) -> Result<(Self, Self)> {
        if self.closed || k == 0 || k + 1 >= self.vertices.len() {
            return Err(Error::InvalidInput("split needs an interior vertex of an open polyline".into()));
        }
        Ok((
            Self::open(self.vertices[..=k].to_vec())?,
            Self::open(self.vertices[k..].to_vec())?,
        ))
    }

    /// Signed exterior angles at the vertices where the direction changes
    /// (interior vertices; every vertex when closed).
    pub fn exterior_angles(&self) -> Result<Vec<f64>> {
        let n = self.vertices.len();
        let idx: Vec<usize> = if self.closed { (0..n).collect() } else { (1..n - 1).collect() };
        idx.into_iter()
            .map(|i| {
                let a = self.vertices[(i + n - 1) % n];
                let b = self.vertices[i];
                let c = self.vertices[(i + 1) % n];
                let (d0, d1) = (b - a, c - b);
                let (cr, dt) = (cross(d0, d1), dot(d0, d1));
                if cr == 0.0 && dt < 0.0 {
                    return Err(Error::Reversal(i));
                }
                Ok(cr.atan2(dt))
            })
            .collect()
    }

    /// The same polyline with every edge cut into `k` equal pieces.
    pub fn subdivided(&self, k: usize) -> Self {
        let mut v = Vec::new();
        for (a, b) in self.edges() {
            for j in 0..k.max(1) {
                v.push(a + (b - a) * (j as f64 / k.max(1) as f64));
            }
        }
        if !self.closed {
            v.push(self.end());
        }
        Self {
            vertices: v,
            closed: self.closed,
        }
    }
}

pub fn euclid_length(p: &Polyline) -> f64 {
    p.edges().map(|(a, b)| (b - a).norm()).sum()
}

/// Sum of signed exterior angles, each in `(-π, π)`.
pub fn rotation(p: &Polyline) -> Result<f64> {
    Ok(p.exterior_angles()?.iter().sum())
}

/// Sum of absolute exterior angles.
pub fn abs_rotation(p: &Polyline) -> Result<f64> {
    Ok(p.exterior_angles()?.iter().map(|a| a.abs()).sum())
}

/// Running rotation after each vertex, starting at 0.
pub fn rotation_function(p: &Polyline) -> Result<Vec<f64>> {
    let mut acc = 0.0;
    let mut out = vec![0.0];
    for a in p.exterior_angles()? {
        acc += a;
        out.push(acc);
    }
    Ok(out)
}

// On-segment test with a relative round-off allowance.
fn on_segment(a: Point, b: Point, z: Point) -> bool {
    segment_distance(a, b, z) <= 1e-14 * (1.0 + z.norm() + (b - a).norm())
}

fn check_off_curve(p: &Polyline, zeta: Point) -> Result<()> {
    if p.edges().any(|(a, b)| on_segment(a, b, zeta)) {
        return Err(Error::PointOnCurve(zeta));
    }
    Ok(())
}

// Angle swept by segment [a, b] as seen from zeta (not on the segment).
fn edge_angle(a: Point, b: Point, zeta: Point) -> f64 {
    ((b - zeta) / (a - zeta)).arg()
}

/// `φ(K, ζ)`: total angle under which the polyline is seen from `ζ`.
pub fn angular_function(p: &Polyline, zeta: Point) -> Result<f64> {
    check_off_curve(p, zeta)?;
    Ok(p.edges().map(|(a, b)| edge_angle(a, b, zeta)).sum())
}

/// Total variation of `t -> φ(K_t, ζ)`; the angle is monotone along each edge.
pub fn angular_tv(p: &Polyline, zeta: Point) -> Result<f64> {
    check_off_curve(p, zeta)?;
    Ok(p.edges().map(|(a, b)| edge_angle(a, b, zeta).abs()).sum())
}

/// Where `ζ` lies on a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OnCurve {
    Off,
    /// Interior of edge `k`.
    Edge(usize),
    /// Vertex `k` (interior, or any vertex of a closed polyline).
    Vertex(usize),
    /// An endpoint of an open polyline.
    Endpoint,
}

pub fn locate(p: &Polyline, zeta: Point) -> OnCurve {
    let n = p.vertices().len();
    for (k, v) in p.vertices().iter().enumerate() {
        if *v == zeta {
            return if !p.is_closed() && (k == 0 || k == n - 1) {
                OnCurve::Endpoint
            } else {
                OnCurve::Vertex(k)
            };
        }
    }
    for (k, (a, b)) in p.edges().enumerate() {
        if on_segment(a, b, zeta) {
            return OnCurve::Edge(k);
        }
    }
    OnCurve::Off
}

/// Unit normal pointing to the left of the polyline at `ζ`.
fn left_normal(p: &Polyline, at: OnCurve) -> Option<Point> {
    let v = p.vertices();
    let n = v.len();
    let i = Point::new(0.0, 1.0);
    match at {
        OnCurve::Edge(k) => {
            let d = v[(k + 1) % n] - v[k];
            Some(i * d / d.norm())
        }
        OnCurve::Vertex(k) => {
            let d0 = v[k] - v[(k + n - 1) % n];
            let d1 = v[(k + 1) % n] - v[k];
            let s = d0 / d0.norm() + d1 / d1.norm();
            if s.norm() < 1e-300 {
                return None;
            }
            Some(i * s / s.norm())
        }
        _ => None,
    }
}

/// One-sided limits `(φ_l, φ_r)` computed in closed form: the edges incident
/// to `ζ` contribute the angle of their direction seen along the normal.
pub fn one_sided_angles(p: &Polyline, zeta: Point) -> Result<(f64, f64)> {
    let at = locate(p, zeta);
    match at {
        OnCurve::Off => {
            let phi = angular_function(p, zeta)?;
            Ok((phi, phi))
        }
        OnCurve::Endpoint => Err(Error::PointOnCurve(zeta)),
        OnCurve::Edge(_) | OnCurve::Vertex(_) => {
            let nl = left_normal(p, at).ok_or(Error::Reversal(0))?;
            let mut phi_l = 0.0;
            let mut phi_r = 0.0;
            for (a, b) in p.edges() {
                if !on_segment(a, b, zeta) {
                    let e = edge_angle(a, b, zeta);
                    phi_l += e;
                    phi_r += e;
                    continue;
                }
                if a != zeta && b != zeta {
                    // ζ inside this edge: it fills a half-turn on either side.
                    phi_l += PI;
                    phi_r -= PI;
                    continue;
                }
                // Limit of arg((b - z)/(a - z)) as z -> ζ along ±n.
                for (side, out) in [(1.0, &mut phi_l), (-1.0, &mut phi_r)] {
                    let dir = nl * side;
                    let ta = if a == zeta { -dir } else { a - zeta };
                    let tb = if b == zeta { -dir } else { b - zeta };
                    *out += (tb / ta).arg();
                }
            }
            Ok((phi_l, phi_r))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideAngles {
    pub phi_l: f64,
    pub phi_r: f64,
}

/// `(φ_l, φ_r)` at a point of the polyline by offsetting along the left
/// normal by `ε ∈ {1e-3, 5e-4, 2.5e-4}` and Richardson-extrapolating to 0.
pub fn left_right_angles(p: &Polyline, zeta: Point) -> Result<SideAngles> {
    let at = locate(p, zeta);
    if at == OnCurve::Off {
        let phi = angular_function(p, zeta)?;
        return Ok(SideAngles { phi_l: phi, phi_r: phi });
    }
    if at == OnCurve::Endpoint {
        return Err(Error::PointOnCurve(zeta));
    }
    let nl = left_normal(p, at).ok_or(Error::Reversal(0))?;
    let scale = 1.0_f64.max(zeta.norm());
    let eps = [1e-3 * scale, 5e-4 * scale, 2.5e-4 * scale];
    let side = |sign: f64| -> Result<f64> {
        let f: Vec<f64> = eps
            .iter()
            .map(|e| angular_function(p, zeta + nl * (sign * e)))
            .collect::<Result<_>>()?;
        // Two rounds of Richardson for an expansion in powers of ε.
        let r1 = 2.0 * f[1] - f[0];
        let r2 = 2.0 * f[2] - f[1];
        let r = (4.0 * r2 - r1) / 3.0;
        let spread = (r2 - r1).abs();
        if spread > 1e-4 {
            return Err(Error::ExtrapolationDisagreement(spread));
        }
        Ok(r)
    };
    Ok(SideAngles {
        phi_l: side(1.0)?,
        phi_r: side(-1.0)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlexandrovCheck {
    /// `cos(|κ|/2) s(K)`.
    pub lhs: f64,
    /// `|z₁ - z₂|`.
    pub rhs: f64,
    pub holds: bool,
    /// `s(K)`.
    pub length: f64,
    /// `(diam/2)(|κ| + π)`.
    pub diameter_bound: f64,
    pub diameter_holds: bool,
}

/// Alexandrov inequality `cos(|κ|/2) s(K) ≤ |z₁ - z₂|` and the bound
/// `s(K) ≤ (diam K / 2)(|κ| + π)` for an open polyline with `|κ| < π`.
pub fn alexandrov_bound_check(p: &Polyline) -> Result<AlexandrovCheck> {
    if p.is_closed() {
        return Err(Error::Precondition("the Alexandrov inequality concerns open arcs".into()));
    }
    let k = abs_rotation(p)?;
    if k >= PI {
        return Err(Error::Precondition(format!("absolute rotation {k} is not below π")));
    }
    let s = euclid_length(p);
    let lhs = (0.5 * k).cos() * s;
    let rhs = (p.end() - p.start()).norm();
    let v = p.vertices();
    let mut diam: f64 = 0.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            diam = diam.max((v[i] - v[j]).norm());
        }
    }
    let bound = 0.5 * diam * (k + PI);
    let tol = 1e-12 * (1.0 + s);
    Ok(AlexandrovCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + tol,
        length: s,
        diameter_bound: bound,
        diameter_holds: s <= bound + tol,
    })
}
