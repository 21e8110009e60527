//! Exact planar geometry used for mass queries and polygon tests.

use crate::Point;
use std::f64::consts::PI;

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a.re * b.im - a.im * b.re
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a.re * b.re + a.im * b.im
}

/// Parameter in `[0, 1]` of the point of segment `[a, b]` closest to `z`.
pub fn closest_param(a: Point, b: Point, z: Point) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return 0.0;
    }
    (dot(z - a, d) / len2).clamp(0.0, 1.0)
}

pub fn segment_distance(a: Point, b: Point, z: Point) -> f64 {
    let t = closest_param(a, b, z);
    (a + (b - a) * t - z).norm()
}

/// Fraction of the circle `C(cc, rc)` lying inside the open disc `Q(dc, rd)`.
pub fn arc_fraction_in_disc(cc: Point, rc: f64, dc: Point, rd: f64) -> f64 {
    let d = (cc - dc).norm();
    if d + rc <= rd {
        return 1.0;
    }
    if d >= rc + rd || rc >= d + rd {
        return 0.0;
    }
    let cos_half = ((d * d + rc * rc - rd * rd) / (2.0 * d * rc)).clamp(-1.0, 1.0);
    cos_half.acos() / PI
}

/// Area of the intersection of two discs.
pub fn lens_area(c1: Point, r1: f64, c2: Point, r2: f64) -> f64 {
    let d = (c1 - c2).norm();
    if d >= r1 + r2 {
        return 0.0;
    }
    if d + r1.min(r2) <= r1.max(r2) {
        let r = r1.min(r2);
        return PI * r * r;
    }
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
    r1 * r1 * (a1 - a1.sin() * a1.cos()) + r2 * r2 * (a2 - a2.sin() * a2.cos())
}

/// Parameters `t` in `(0, 1)` where segment `[a, b]` crosses the circle `C(c, r)`.
pub fn segment_circle_params(a: Point, b: Point, c: Point, r: f64) -> Vec<f64> {
    let d = b - a;
    let f = a - c;
    let qa = d.norm_sqr();
    let qb = 2.0 * dot(f, d);
    let qc = f.norm_sqr() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if qa == 0.0 || disc < 0.0 {
        return Vec::new();
    }
    let s = disc.sqrt();
    let mut out = Vec::with_capacity(2);
    for t in [(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)] {
        if t > 0.0 && t < 1.0 {
            out.push(t);
        }
    }
    out
}

// Signed area of triangle (0, a, b) intersected with the disc of radius r at 0.
fn tri_disc_area(a: Point, b: Point, r: f64) -> f64 {
    let mut pts = vec![a];
    for t in segment_circle_params(a, b, Point::new(0.0, 0.0), r) {
        pts.push(a + (b - a) * t);
    }
    pts.push(b);
    let mut area = 0.0;
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let mid = (p + q) * 0.5;
        if mid.norm() < r {
            area += 0.5 * cross(p, q);
        } else {
            let ang = cross(p, q).atan2(dot(p, q));
            area += 0.5 * r * r * ang;
        }
    }
    area
}

/// Signed area of `polygon ∩ Q(c, r)`; positive for counter-clockwise polygons.
pub fn polygon_disc_area(polygon: &[Point], c: Point, r: f64) -> f64 {
    let n = polygon.len();
    (0..n)
        .map(|i| tri_disc_area(polygon[i] - c, polygon[(i + 1) % n] - c, r))
        .sum()
}

pub fn polygon_signed_area(polygon: &[Point]) -> f64 {
    let n = polygon.len();
    0.5 * (0..n)
        .map(|i| cross(polygon[i], polygon[(i + 1) % n]))
        .sum::<f64>()
}

/// Winding number of a closed polygon about `z` (z off the polygon).
pub fn winding_number(polygon: &[Point], z: Point) -> i64 {
    let n = polygon.len();
    let total: f64 = (0..n)
        .map(|i| ((polygon[(i + 1) % n] - z) / (polygon[i] - z)).arg())
        .sum();
    (total / (2.0 * PI)).round() as i64
}

/// Length of the part of circle `C(c, r)` inside a closed simple polygon.
pub fn circle_arc_fraction_in_polygon(polygon: &[Point], c: Point, r: f64) -> f64 {
    let n = polygon.len();
    let mut angles: Vec<f64> = Vec::new();
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[(i + 1) % n]);
        for t in segment_circle_params(a, b, c, r) {
            let p = a + (b - a) * t - c;
            angles.push(p.im.atan2(p.re).rem_euclid(2.0 * PI));
        }
    }
    if angles.is_empty() {
        let probe = c + Point::new(r, 0.0);
        return if winding_number(polygon, probe) != 0 { 1.0 } else { 0.0 };
    }
    angles.sort_by(f64::total_cmp);
    let mut inside = 0.0;
    for i in 0..angles.len() {
        let a0 = angles[i];
        let a1 = if i + 1 < angles.len() {
            angles[i + 1]
        } else {
            angles[0] + 2.0 * PI
        };
        let mid = 0.5 * (a0 + a1);
        let probe = c + Point::from_polar(r, mid);
        if winding_number(polygon, probe) != 0 {
            inside += a1 - a0;
        }
    }
    inside / (2.0 * PI)
}

/// Clip `subject` against a convex counter-clockwise polygon (Sutherland-Hodgman).
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut out = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if out.is_empty() {
            break;
        }
        let (e0, e1) = (clip[i], clip[(i + 1) % m]);
        let inside = |p: Point| cross(e1 - e0, p - e0) >= 0.0;
        let input = std::mem::take(&mut out);
        let k = input.len();
        for j in 0..k {
            let cur = input[j];
            let prev = input[(j + k - 1) % k];
            let (ci, pi) = (inside(cur), inside(prev));
            if ci != pi {
                let d = cur - prev;
                let denom = cross(e1 - e0, d);
                if denom != 0.0 {
                    let t = cross(e1 - e0, e0 - prev) / denom;
                    out.push(prev + d * t);
                }
            }
            if ci {
                out.push(cur);
            }
        }
    }
    out
}

pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q2 - q1, p1 - q1);
    let d2 = cross(q2 - q1, p2 - q1);
    let d3 = cross(p2 - p1, q1 - p1);
    let d4 = cross(p2 - p1, q2 - p1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point, b: Point, p: Point, d: f64| {
        d == 0.0
            && p.re >= a.re.min(b.re)
            && p.re <= a.re.max(b.re)
            && p.im >= a.im.min(b.im)
            && p.im <= a.im.max(b.im)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn arc_fraction_matches_dense_sampling() {
        let cases = [
            (c(0.0, 0.0), 1.0, c(1.0, 0.0), 1.0),
            (c(0.3, -0.2), 0.7, c(-0.4, 0.5), 0.9),
            (c(0.0, 0.0), 2.0, c(1.5, 0.0), 1.0),
        ];
        for (cc, rc, dc, rd) in cases {
            let n = 400_000;
            let hits = (0..n)
                .filter(|k| {
                    let th = 2.0 * PI * (*k as f64 + 0.5) / n as f64;
                    (cc + Point::from_polar(rc, th) - dc).norm() < rd
                })
                .count();
            let sampled = hits as f64 / n as f64;
            assert!((arc_fraction_in_disc(cc, rc, dc, rd) - sampled).abs() < 1e-5);
        }
        assert!((arc_fraction_in_disc(c(0.0, 0.0), 1.0, c(1.0, 0.0), 1.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn polygon_disc_area_cases() {
        let square = [c(-1.0, -1.0), c(1.0, -1.0), c(1.0, 1.0), c(-1.0, 1.0)];
        // disc inside square
        assert!((polygon_disc_area(&square, c(0.0, 0.0), 0.5) - PI * 0.25).abs() < 1e-14);
        // square inside disc
        assert!((polygon_disc_area(&square, c(0.0, 0.0), 3.0) - 4.0).abs() < 1e-14);
        // disc centred on a corner: a quarter of it
        assert!((polygon_disc_area(&square, c(1.0, 1.0), 0.5) - PI * 0.25 / 4.0).abs() < 1e-14);
        // lens formula vs polygonised disc
        let poly: Vec<Point> = (0..20000)
            .map(|k| c(0.7, 0.1) + Point::from_polar(0.8, 2.0 * PI * k as f64 / 20000.0))
            .collect();
        let a = polygon_disc_area(&poly, c(0.0, 0.0), 1.0);
        assert!((a - lens_area(c(0.7, 0.1), 0.8, c(0.0, 0.0), 1.0)).abs() < 1e-7);
    }

    #[test]
    fn winding_and_arc_in_polygon() {
        let tri = [c(0.0, 0.0), c(2.0, 0.0), c(0.0, 2.0)];
        assert_eq!(winding_number(&tri, c(0.5, 0.5)), 1);
        assert_eq!(winding_number(&tri, c(1.5, 1.5)), 0);
        let square = [c(-1.0, -1.0), c(1.0, -1.0), c(1.0, 1.0), c(-1.0, 1.0)];
        assert!((circle_arc_fraction_in_polygon(&square, c(1.0, 0.0), 0.5) - 0.5).abs() < 1e-14);
        assert!((circle_arc_fraction_in_polygon(&square, c(0.0, 0.0), 0.5) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn clip_square_by_square() {
        let a = [c(0.0, 0.0), c(2.0, 0.0), c(2.0, 2.0), c(0.0, 2.0)];
        let b = [c(1.0, 1.0), c(3.0, 1.0), c(3.0, 3.0), c(1.0, 3.0)];
        let clipped = clip_convex(&a, &b);
        assert!((polygon_signed_area(&clipped) - 1.0).abs() < 1e-14);
    }
}
