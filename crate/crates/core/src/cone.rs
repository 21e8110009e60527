//! Closed-form geometry of the flat cone `|z - v|^{2β} |dz|²`.
//!
//! The map `z ↦ (z - v)^{1+β} / (1+β)` is an isometry onto a Euclidean sector
//! of angle `α = 2π - ω₀` whose edges are glued, so distances come from
//! unfolding.

use crate::error::{Error, Result};
use crate::potential::Bump;
use crate::Point;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeSpec {
    pub vertex: Point,
    pub omega0: f64,
}

impl ConeSpec {
    pub fn new(vertex: Point, omega0: f64) -> Result<Self> {
        if !omega0.is_finite() || !(vertex.re.is_finite() && vertex.im.is_finite()) {
            return Err(Error::InvalidInput("cone parameters must be finite".into()));
        }
        if omega0 >= 2.0 * PI {
            return Err(Error::InvalidInput(format!(
                "cone curvature {omega0} leaves no positive angle"
            )));
        }
        Ok(Self { vertex, omega0 })
    }

    pub fn beta(&self) -> f64 {
        -self.omega0 / (2.0 * PI)
    }

    /// Total cone angle `α = 2π - ω₀`.
    pub fn alpha(&self) -> f64 {
        2.0 * PI - self.omega0
    }

    pub fn lambda(&self, z: Point) -> f64 {
        (z - self.vertex).norm().powf(2.0 * self.beta())
    }
}

/// Intrinsic polar coordinates `(ρ, θ)` with `θ ∈ [0, α)`; the vertex maps
/// to `(0, NaN)`.
pub fn plane_to_cone(c: &ConeSpec, z: Point) -> (f64, f64) {
    let d = z - c.vertex;
    let r = d.norm();
    if r == 0.0 {
        return (0.0, f64::NAN);
    }
    let e = 1.0 + c.beta();
    (r.powf(e) / e, (e * d.arg()).rem_euclid(c.alpha()))
}

pub fn cone_to_plane(c: &ConeSpec, rho: f64, theta: f64) -> Point {
    if rho == 0.0 {
        return c.vertex;
    }
    let e = 1.0 + c.beta();
    // θ / e in [0, 2π): fold into (-π, π] so the branch matches plane_to_cone
    let mut a = theta.rem_euclid(c.alpha()) / e;
    if a > PI {
        a -= 2.0 * PI;
    }
    c.vertex + Point::from_polar((e * rho).powf(1.0 / e), a)
}

// Signed angular offset from θ₁ to θ₂ of minimal size, in (-α/2, α/2].
fn angle_offset(c: &ConeSpec, t1: f64, t2: f64) -> f64 {
    let alpha = c.alpha();
    let mut d = (t2 - t1).rem_euclid(alpha);
    if d > 0.5 * alpha {
        d -= alpha;
    }
    d
}

pub fn cone_distance(c: &ConeSpec, z1: Point, z2: Point) -> f64 {
    let (r1, t1) = plane_to_cone(c, z1);
    let (r2, t2) = plane_to_cone(c, z2);
    if r1 == 0.0 || r2 == 0.0 {
        return r1 + r2;
    }
    let delta = angle_offset(c, t1, t2).abs();
    if delta <= PI {
        ((r1 - r2).powi(2) + 4.0 * r1 * r2 * (0.5 * delta).sin().powi(2)).sqrt()
    } else {
        r1 + r2
    }
}

/// Point at fraction `t` of the cone distance along a shortest arc from `z1`
/// to `z2`.
pub fn point_along(c: &ConeSpec, z1: Point, z2: Point, t: f64) -> Point {
    let (r1, t1) = plane_to_cone(c, z1);
    let (r2, t2) = plane_to_cone(c, z2);
    if r1 == 0.0 || r2 == 0.0 {
        let (rho, th) = if r1 == 0.0 { (t * r2, t2) } else { ((1.0 - t) * r1, t1) };
        return cone_to_plane(c, rho, th);
    }
    let off = angle_offset(c, t1, t2);
    if off.abs() <= PI {
        let p1 = Point::new(r1, 0.0);
        let p2 = Point::from_polar(r2, off);
        let q = p1 + (p2 - p1) * t;
        cone_to_plane(c, q.norm(), t1 + q.arg())
    } else {
        let s = t * (r1 + r2);
        if s <= r1 {
            cone_to_plane(c, r1 - s, t1)
        } else {
            cone_to_plane(c, s - r1, t2)
        }
    }
}

pub fn cone_circle_length(c: &ConeSpec, r_plane: f64) -> f64 {
    2.0 * PI * r_plane.powf(1.0 + c.beta())
}

pub fn sector_angle(c: &ConeSpec, theta_plane: f64) -> f64 {
    theta_plane * (1.0 - c.omega0 / (2.0 * PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureKind {
    Spherical,
    Hyperbolic,
}

/// `4|z|^{2β} / (1 ± (β+1)^{-2} |z|^{2(β+1)})²`, the conformal factor of a
/// spherical (`+`) or hyperbolic (`-`) cone of weight `β` at the origin.
pub fn curvature_factor(kind: CurvatureKind, beta: f64, z: Point) -> Result<f64> {
    let r = z.norm();
    let q = r.powf(2.0 * (beta + 1.0)) / ((beta + 1.0) * (beta + 1.0));
    let denom = match kind {
        CurvatureKind::Spherical => 1.0 + q,
        CurvatureKind::Hyperbolic => {
            if q >= 1.0 {
                return Err(Error::Precondition(format!(
                    "hyperbolic factor is only defined where (β+1)^-2 |z|^(2(β+1)) < 1, got {q}"
                )));
            }
            1.0 - q
        }
    };
    Ok(4.0 * r.powf(2.0 * beta) / (denom * denom))
}

/// `|∬ u Δφ - (ω₀ φ(0) + ∬ φ λ̃)|` with `u = -½ ln λ̃`: the weak form of
/// `-½ Δ ln λ̃ = ω₀ δ₀ ± λ̃` for the spherical (`+`) or hyperbolic (`-`)
/// factor, tested against a bump.
pub fn curvature_factor_residual(kind: CurvatureKind, beta: f64, bump: &Bump, level: u32) -> Result<f64> {
    let origin = Point::new(0.0, 0.0);
    // the bump support is checked against the hyperbolic domain
    if kind == CurvatureKind::Hyperbolic {
        let far = bump.center.norm() + bump.radius;
        curvature_factor(kind, beta, Point::new(far, 0.0))?;
    }
    let lam = |z: Point| curvature_factor(kind, beta, z).unwrap_or(f64::NAN);
    let around = if (bump.center - origin).norm() < bump.radius { origin } else { bump.center };
    let lhs = bump.integrate(|z| -0.5 * lam(z).ln() * bump.laplacian(z), around, level);
    let sign = if kind == CurvatureKind::Spherical { 1.0 } else { -1.0 };
    let omega0 = -2.0 * PI * beta;
    let rhs = omega0 * bump.value(origin) + sign * bump.integrate(|z| bump.value(z) * lam(z), around, level);
    Ok((lhs - rhs).abs())
}
