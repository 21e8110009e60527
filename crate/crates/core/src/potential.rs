//! Logarithmic potentials `p(z; ω) = (1/2π) ∬ ln|z - ζ| dω(ζ)`, mollification,
//! weak-Laplacian audits and harmonic localization.

use crate::error::{Error, Result};
use crate::measure::{Atom, GridDensity, SignedMeasure};
use crate::quadrature::gauss_legendre;
use crate::scene::MetricScene;
use crate::Point;
use rayon::prelude::*;
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// `∬ ln sqrt(x² + y²) dx dy` over `[x0, x1] x [y0, y1]`.
pub fn rect_log_integral(x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    fn prim(x: f64, y: f64) -> f64 {
        let r2 = x * x + y * y;
        if r2 == 0.0 {
            return 0.0;
        }
        let mut v = x * y * (0.5 * r2.ln() - 1.5);
        if x != 0.0 {
            v += 0.5 * x * x * (y / x).atan();
        }
        if y != 0.0 {
            v += 0.5 * y * y * (x / y).atan();
        }
        v
    }
    prim(x1, y1) - prim(x0, y1) - prim(x1, y0) + prim(x0, y0)
}

const MULTIPOLE_ORDER: usize = 16;

// E[u^4], E[u^8] for u uniform on the square of side s centred at 0.
fn square_moments(s: f64) -> (f64, f64) {
    let h = 0.5 * s;
    (-s.powi(4) / 60.0, h.powi(8) * 16.0 / 45.0)
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}
const BLOCK: usize = 8;

#[derive(Debug, Clone, Default)]
struct Block {
    center: Point,
    radius: f64,
    mass: f64,
    // b_k = -(1/k) Σ m_j (ζ_j - c)^k, k = 1..=MULTIPOLE_ORDER
    moments: Vec<Point>,
    cells: Vec<(Point, f64)>,
}

/// Block decomposition of a grid density with far-field multipole expansions,
/// so that potential sums cost little more than the number of blocks.
#[derive(Debug, Clone, Default)]
pub(crate) struct GridIndex {
    cell: f64,
    blocks: Vec<Block>,
}

impl GridIndex {
    pub(crate) fn build(g: &GridDensity) -> Self {
        let mut blocks = Vec::new();
        let (nbx, nby) = (g.nx().div_ceil(BLOCK), g.ny().div_ceil(BLOCK));
        for bj in 0..nby {
            for bi in 0..nbx {
                let mut cells = Vec::new();
                for j in bj * BLOCK..((bj + 1) * BLOCK).min(g.ny()) {
                    for i in bi * BLOCK..((bi + 1) * BLOCK).min(g.nx()) {
                        let m = g.masses()[j * g.nx() + i];
                        if m != 0.0 {
                            cells.push((g.cell_center(i, j), m));
                        }
                    }
                }
                if cells.is_empty() {
                    continue;
                }
                let n = cells.len() as f64;
                let center = cells.iter().map(|c| c.0).sum::<Point>() / n;
                let radius = cells
                    .iter()
                    .map(|c| (c.0 - center).norm())
                    .fold(0.0, f64::max)
                    + g.cell() * std::f64::consts::FRAC_1_SQRT_2;
                let mass = cells.iter().map(|c| c.1).sum();
                // Moments of uniform squares: mean of (d + u)^k over the cell,
                // using E[u^4] and E[u^8] (all other powers average to zero).
                let (u4, u8) = square_moments(g.cell());
                let mut moments = vec![Point::new(0.0, 0.0); MULTIPOLE_ORDER];
                for (p, m) in &cells {
                    let d = p - center;
                    let mut pows = vec![Point::new(1.0, 0.0); MULTIPOLE_ORDER + 1];
                    for k in 1..=MULTIPOLE_ORDER {
                        pows[k] = pows[k - 1] * d;
                    }
                    for (idx, b) in moments.iter_mut().enumerate() {
                        let k = idx + 1;
                        let mut mean = pows[k];
                        if k >= 4 {
                            mean += pows[k - 4] * (binom(k, 4) * u4);
                        }
                        if k >= 8 {
                            mean += pows[k - 8] * (binom(k, 8) * u8);
                        }
                        *b -= mean * (*m / k as f64);
                    }
                }
                blocks.push(Block {
                    center,
                    radius,
                    mass,
                    moments,
                    cells,
                });
            }
        }
        Self {
            cell: g.cell(),
            blocks,
        }
    }

    /// `Σ_cells m · (mean of ln|z - ·| over the cell)`.
    fn log_sum(&self, z: Point) -> f64 {
        let s = self.cell;
        let (u4, u8) = square_moments(s);
        let half = 0.5 * s;
        let near = 2.5 * s;
        let mut total = 0.0;
        for b in &self.blocks {
            let d = z - b.center;
            let dist = d.norm();
            if dist > 3.0 * b.radius {
                let w = 1.0 / d;
                let mut pow = w;
                let mut acc = Point::new(0.0, 0.0);
                for m in &b.moments {
                    acc += m * pow;
                    pow *= w;
                }
                total += b.mass * dist.ln() + acc.re;
                continue;
            }
            for (c, m) in &b.cells {
                let e = *c - z;
                if e.re.abs() < near && e.im.abs() < near {
                    let v = rect_log_integral(e.re - half, e.re + half, e.im - half, e.im + half);
                    total += m * v / (s * s);
                } else {
                    let w = 1.0 / e;
                    let w4 = (w * w) * (w * w);
                    // ln|e| plus the square's 4th and 8th order corrections
                    total += m * (e.norm().ln() - 0.25 * u4 * w4.re - 0.125 * u8 * (w4 * w4).re);
                }
            }
        }
        total
    }
}

/// `p(z; m)`. Positive atoms at `z` give `-∞`, negative ones `+∞`; NaN marks
/// a point where both parts are infinite.
pub fn potential_eval(z: Point, m: &SignedMeasure) -> f64 {
    let mut acc = 0.0;
    let mut minus_inf = false;
    let mut plus_inf = false;
    for a in m.atoms() {
        let d = (z - a.pos).norm();
        if d == 0.0 {
            if a.weight > 0.0 {
                minus_inf = true;
            } else {
                plus_inf = true;
            }
        } else {
            acc += a.weight * d.ln();
        }
    }
    if minus_inf && plus_inf {
        return f64::NAN;
    }
    if minus_inf {
        return f64::NEG_INFINITY;
    }
    if plus_inf {
        return f64::INFINITY;
    }
    for c in m.circles() {
        let d = (z - c.center).norm();
        acc += c.mass * if d <= c.radius { c.radius.ln() } else { d.ln() };
    }
    for dd in m.discs() {
        let d = (z - dd.center).norm();
        let r = dd.radius;
        acc += dd.mass
            * if d <= r {
                r.ln() + (d * d - r * r) / (2.0 * r * r)
            } else {
                d.ln()
            };
    }
    for g in m.grids() {
        acc += g.index().log_sum(z);
    }
    acc / TWO_PI
}

/// Gradient `∂x p + i ∂y p` at a point off the atoms.
pub fn potential_gradient(z: Point, m: &SignedMeasure) -> Point {
    let mut g = Point::new(0.0, 0.0);
    for a in m.atoms() {
        let d = z - a.pos;
        g += d * (a.weight / d.norm_sqr());
    }
    for c in m.circles() {
        let d = z - c.center;
        if d.norm() > c.radius {
            g += d * (c.mass / d.norm_sqr());
        }
    }
    for dd in m.discs() {
        let d = z - dd.center;
        if d.norm() > dd.radius {
            g += d * (dd.mass / d.norm_sqr());
        } else {
            g += d * (dd.mass / (dd.radius * dd.radius));
        }
    }
    g /= TWO_PI;
    for grid in m.grids() {
        let e = 1e-5 * grid.cell();
        let idx = grid.index();
        let gx = (idx.log_sum(z + e) - idx.log_sum(z - e)) / (2.0 * e);
        let gy = (idx.log_sum(z + Point::new(0.0, e)) - idx.log_sum(z - Point::new(0.0, e))) / (2.0 * e);
        g += Point::new(gx, gy) / TWO_PI;
    }
    g
}

/// Unnormalised radial bump `exp(1/(u - 1))`, `u = |z|²`, zero for `u ≥ 1`.
pub fn bump_profile(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        (1.0 / (u - 1.0)).exp()
    }
}

fn weighted_points(m: &SignedMeasure, spacing: f64) -> Vec<(Point, f64)> {
    let mut pts: Vec<(Point, f64)> = m.atoms().iter().map(|a| (a.pos, a.weight)).collect();
    for c in m.circles() {
        let n = ((TWO_PI * c.radius / spacing).ceil() as usize).max(64);
        for k in 0..n {
            let th = TWO_PI * (k as f64 + 0.5) / n as f64;
            pts.push((c.center + Point::from_polar(c.radius, th), c.mass / n as f64));
        }
    }
    for d in m.discs() {
        let n_r = ((d.radius / spacing).ceil() as usize).max(8);
        let area = PI * d.radius * d.radius;
        for ir in 0..n_r {
            let r0 = d.radius * ir as f64 / n_r as f64;
            let r1 = d.radius * (ir + 1) as f64 / n_r as f64;
            let rm = 0.5 * (r0 + r1);
            let n_t = ((TWO_PI * rm / spacing).ceil() as usize).max(8);
            let ring = PI * (r1 * r1 - r0 * r0);
            for it in 0..n_t {
                let th = TWO_PI * (it as f64 + 0.5) / n_t as f64;
                pts.push((d.center + Point::from_polar(rm, th), d.mass * ring / (area * n_t as f64)));
            }
        }
    }
    for g in m.grids() {
        let sub = ((g.cell() / spacing).ceil() as usize).max(2);
        let s = g.cell() / sub as f64;
        for (i, j, mass) in g.cells() {
            let lo = g.cell_polygon(i, j)[0];
            for a in 0..sub {
                for b in 0..sub {
                    let p = lo + Point::new((a as f64 + 0.5) * s, (b as f64 + 0.5) * s);
                    pts.push((p, mass / (sub * sub) as f64));
                }
            }
        }
    }
    pts
}

/// Convolution of `m` with the radial bump of radius `h`, deposited on an
/// `n x n` grid covering the support enlarged by `h`.
///
/// Each component is first replaced by weighted points (atoms exactly), and
/// every point spreads its weight over the cells meeting its bump in
/// proportion to the bump's integral over each cell, normalised so the
/// deposited mass equals the weight.
pub fn mollify(m: &SignedMeasure, h: f64, grid_n: usize) -> Result<SignedMeasure> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("mollifier radius must be positive, got {h}")));
    }
    if grid_n == 0 {
        return Err(Error::InvalidInput("grid size must be positive".into()));
    }
    let Some((lo, hi)) = m.support_bounds() else {
        let g = GridDensity::new(Point::new(-h, -h), 2.0 * h / grid_n as f64, grid_n, grid_n, vec![0.0; grid_n * grid_n])?;
        let cell = g.cell();
        if cell > 0.5 * h {
            return Err(Error::GridTooCoarse { cell, h });
        }
        return SignedMeasure::new(vec![], vec![], vec![], vec![g]);
    };
    let side = (hi.re - lo.re).max(hi.im - lo.im) + 2.0 * h;
    let cell = side / grid_n as f64;
    if cell > 0.5 * h {
        return Err(Error::GridTooCoarse { cell, h });
    }
    let mid = (lo + hi) * 0.5;
    let origin = mid - Point::new(0.5 * side, 0.5 * side);
    let n = grid_n;
    let points = weighted_points(m, 0.5 * cell);
    const SUB: usize = 4;
    let sub_offsets: Vec<f64> = (0..SUB).map(|k| (k as f64 + 0.5) / SUB as f64).collect();

    let deposit = |(q, w): &(Point, f64), out: &mut Vec<f64>| {
        let rel = (*q - origin) / cell;
        let reach = h / cell;
        let i0 = ((rel.re - reach).floor().max(0.0)) as usize;
        let i1 = ((rel.re + reach).ceil() as usize).min(n - 1);
        let j0 = ((rel.im - reach).floor().max(0.0)) as usize;
        let j1 = ((rel.im + reach).ceil() as usize).min(n - 1);
        let mut local = Vec::with_capacity((i1 - i0 + 1) * (j1 - j0 + 1));
        let mut total = 0.0;
        for j in j0..=j1 {
            for i in i0..=i1 {
                let mut acc = 0.0;
                for oy in &sub_offsets {
                    for ox in &sub_offsets {
                        let p = origin + Point::new((i as f64 + ox) * cell, (j as f64 + oy) * cell);
                        acc += bump_profile((p - q).norm_sqr() / (h * h));
                    }
                }
                total += acc;
                local.push((j * n + i, acc));
            }
        }
        if total > 0.0 {
            for (k, v) in local {
                out[k] += w * v / total;
            }
        } else {
            let i = (rel.re.floor().max(0.0) as usize).min(n - 1);
            let j = (rel.im.floor().max(0.0) as usize).min(n - 1);
            out[j * n + i] += w;
        }
    };
    let masses = points
        .par_chunks(256)
        .map(|chunk| {
            let mut out = vec![0.0; n * n];
            for p in chunk {
                deposit(p, &mut out);
            }
            out
        })
        .reduce(
            || vec![0.0; n * n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let g = GridDensity::new(origin, cell, n, n, masses)?;
    SignedMeasure::new(vec![], vec![], vec![], vec![g])
}

/// Grid size giving cells of roughly `h / cells_per_h` for `mollify`.
pub fn mollify_grid_size(m: &SignedMeasure, h: f64, cells_per_h: f64) -> usize {
    let side = m
        .support_bounds()
        .map_or(0.0, |(lo, hi)| (hi.re - lo.re).max(hi.im - lo.im))
        + 2.0 * h;
    ((side * cells_per_h / h).ceil() as usize).max(1)
}

/// The test function `φ(z) = exp(1/(|z - c|²/ρ² - 1))` supported in `Q(c, ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: Point,
    pub radius: f64,
}

impl Bump {
    pub fn value(&self, z: Point) -> f64 {
        bump_profile((z - self.center).norm_sqr() / (self.radius * self.radius))
    }

    /// `Δφ = (4/ρ²)(u g''(u) + g'(u))` with `g(u) = exp(1/(u - 1))`.
    pub fn laplacian(&self, z: Point) -> f64 {
        let u = (z - self.center).norm_sqr() / (self.radius * self.radius);
        if u >= 1.0 {
            return 0.0;
        }
        let s = u - 1.0;
        let g = (1.0 / s).exp();
        let g1 = -g / (s * s);
        let g2 = g / s.powi(4) + 2.0 * g / s.powi(3);
        4.0 / (self.radius * self.radius) * (u * g2 + g1)
    }

    /// `∬ f φ`-type integrals: integrates `f` over the bump disc in polar
    /// coordinates about `origin` (inside the disc), geometrically graded
    /// towards `origin` so that logarithmic singularities there are benign.
    pub fn integrate(&self, f: impl Fn(Point) -> f64 + Sync, origin: Point, level: u32) -> f64 {
        let n_theta = 32usize << level;
        let n_outer = 2usize << level;
        let n_geo = 8 + 4 * level as usize;
        let rule = gauss_legendre(8);
        let rho = self.radius;
        let o = origin - self.center;
        (0..n_theta)
            .into_par_iter()
            .map(|k| {
                let th = TWO_PI * (k as f64 + 0.5) / n_theta as f64;
                let dir = Point::from_polar(1.0, th);
                // exit distance of the ray o + t dir from the circle of radius rho
                let b = o.re * dir.re + o.im * dir.im;
                let c = o.norm_sqr() - rho * rho;
                let rmax = -b + (b * b - c).max(0.0).sqrt();
                if rmax <= 0.0 {
                    return 0.0;
                }
                let mut cuts = vec![0.0];
                for g in (1..=n_geo).rev() {
                    cuts.push(0.5 * rmax * 0.5f64.powi(g as i32));
                }
                for q in 0..=n_outer {
                    cuts.push(0.5 * rmax + 0.5 * rmax * q as f64 / n_outer as f64);
                }
                let mut acc = 0.0;
                for w in cuts.windows(2) {
                    let (a, bb) = (w[0], w[1]);
                    let (mid, half) = (0.5 * (a + bb), 0.5 * (bb - a));
                    for (x, wt) in rule.0.iter().zip(&rule.1) {
                        let r = mid + half * x;
                        acc += wt * half * r * f(origin + dir * r);
                    }
                }
                acc
            })
            .sum::<f64>()
            * (TWO_PI / n_theta as f64)
    }
}

/// `∬ u Δφ` for the bump, with `u` singular at most at `singular` (one
/// polar patch per singular point inside the bump is not needed for smooth `u`).
pub fn weak_laplacian_lhs(u: impl Fn(Point) -> f64 + Sync, bump: &Bump, level: u32) -> f64 {
    bump.integrate(|z| u(z) * bump.laplacian(z), bump.center, level)
}

/// `∬ φ dm` for the bump.
pub fn measure_against_bump(m: &SignedMeasure, bump: &Bump, level: u32) -> f64 {
    let mut total = 0.0;
    for a in m.atoms() {
        total += a.weight * bump.value(a.pos);
    }
    let n = 256usize << level;
    for c in m.circles() {
        let s: f64 = (0..n)
            .map(|k| bump.value(c.center + Point::from_polar(c.radius, TWO_PI * (k as f64 + 0.5) / n as f64)))
            .sum();
        total += c.mass * s / n as f64;
    }
    for d in m.discs() {
        // polar quadrature over the density disc
        let rule = gauss_legendre(8);
        let n_r = 8usize << level;
        let area = PI * d.radius * d.radius;
        let mut acc = 0.0;
        for p in 0..n_r {
            let (a, b) = (d.radius * p as f64 / n_r as f64, d.radius * (p + 1) as f64 / n_r as f64);
            for (x, w) in rule.0.iter().zip(&rule.1) {
                let r = 0.5 * (a + b) + 0.5 * (b - a) * x;
                let s: f64 = (0..n)
                    .map(|k| bump.value(d.center + Point::from_polar(r, TWO_PI * (k as f64 + 0.5) / n as f64)))
                    .sum();
                acc += w * 0.5 * (b - a) * r * s * TWO_PI / n as f64;
            }
        }
        total += d.mass * acc / area;
    }
    let (gx, gw) = gauss_legendre(4);
    for g in m.grids() {
        let s = g.cell();
        for (i, j, mass) in g.cells() {
            let c = g.cell_center(i, j);
            let mut acc = 0.0;
            for (x, wx) in gx.iter().zip(&gw) {
                for (y, wy) in gx.iter().zip(&gw) {
                    acc += wx * wy * bump.value(c + Point::new(0.5 * s * x, 0.5 * s * y));
                }
            }
            total += mass * acc / 4.0;
        }
    }
    total
}

/// `|∬ (-½ ln λ) Δφ - ∬ φ dω|` for an underived scene at a fixed
/// quadrature `level`.
pub fn weak_laplacian_residual_at(scene: &MetricScene, bump: &Bump, level: u32) -> Result<f64> {
    if scene.is_derived() {
        return Err(Error::DerivedScene);
    }
    if !scene.domain.contains_disc(bump.center, bump.radius) {
        return Err(Error::Precondition("bump support must lie inside the domain".into()));
    }
    let m = &scene.measure;
    let (inside, outside): (Vec<Atom>, Vec<Atom>) = m
        .atoms()
        .iter()
        .partition(|a| (a.pos - bump.center).norm() < bump.radius);
    let rest = SignedMeasure::new(outside, m.discs().to_vec(), m.circles().to_vec(), m.grids().to_vec())?;
    let h = &scene.harmonic;
    let mut lhs = bump.integrate(
        |z| (potential_eval(z, &rest) + h.h(z)) * bump.laplacian(z),
        bump.center,
        level,
    );
    for a in &inside {
        let w = a.weight / TWO_PI;
        let zeta = a.pos;
        lhs += bump.integrate(
            |z| {
                let d = (z - zeta).norm();
                if d == 0.0 {
                    0.0
                } else {
                    w * d.ln() * bump.laplacian(z)
                }
            },
            zeta,
            level,
        );
    }
    let rhs = measure_against_bump(m, bump, level);
    Ok((lhs - rhs).abs())
}

/// Weak-Laplacian residual at the default refinement, with a convergence
/// check against the next level.
pub fn weak_laplacian_residual(scene: &MetricScene, bump: &Bump) -> Result<f64> {
    let coarse = weak_laplacian_residual_at(scene, bump, 2)?;
    let fine = weak_laplacian_residual_at(scene, bump, 3)?;
    let scale = 1.0 + scene.measure.total_variation();
    if (coarse - fine).abs() > 1e-4 * scale {
        return Err(Error::QuadratureNotConverged {
            estimate: fine,
            error: (coarse - fine).abs(),
        });
    }
    Ok(fine)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Localization {
    /// Restriction of the measure to `Q_{r(1+η)}(z0)`.
    pub restricted: SignedMeasure,
    /// Atoms on `C_{r(1+η/2)}(z0)` carrying the harmonic remainder.
    pub psi: Vec<Atom>,
    /// `restricted + psi`.
    pub measure: SignedMeasure,
    pub k: f64,
    pub residual: f64,
}

/// Fixed `η` of the localization.
pub const LOCALIZE_ETA: f64 = 0.5;

/// Replaces the scene near `z0` by a measure `ω̃` supported in a slightly larger
/// disc, with `p(ω̃) + k = p(ω) + h` on `Q_r(z0)` up to the reported residual.
///
/// The harmonic remainder `h_eff = h + p(ω outside)` is represented on the
/// circle of radius `R = r(1 + η/2)` through its normal derivative: atom `j`
/// at angle `θ_j` carries `-2 R Δθ ∂h_eff/∂ν(θ_j)`.
pub fn localize(scene: &MetricScene, z0: Point, r: f64, n_segments: usize) -> Result<Localization> {
    if scene.is_derived() {
        return Err(Error::DerivedScene);
    }
    if !(r > 0.0 && r.is_finite()) || n_segments == 0 {
        return Err(Error::InvalidInput("radius and segment count must be positive".into()));
    }
    let outer = r * (1.0 + LOCALIZE_ETA);
    if !scene.domain.contains_disc(z0, outer) {
        return Err(Error::Precondition("closed localization disc must lie in the domain".into()));
    }
    let m = &scene.measure;
    if let Some(a) = m.atoms().iter().find(|a| ((a.pos - z0).norm() - outer).abs() <= 1e-12 * outer) {
        return Err(Error::AtomOnCurve(a.pos, "the localization circle"));
    }
    let n_split = 4 * n_segments;
    let (restricted, outside) = m.split_by_disc(z0, outer, n_split);
    let h = &scene.harmonic;
    let rr = r * (1.0 + 0.5 * LOCALIZE_ETA);
    let dtheta = TWO_PI / n_segments as f64;
    let mut psi = Vec::with_capacity(n_segments);
    for j in 0..n_segments {
        let th = dtheta * (j as f64 + 0.5);
        let nu = Point::from_polar(1.0, th);
        let z = z0 + nu * rr;
        let grad = h.gradient(z) + potential_gradient(z, &outside);
        let dn = grad.re * nu.re + grad.im * nu.im;
        let w = -2.0 * rr * dtheta * dn;
        if w != 0.0 {
            psi.push(Atom { pos: z, weight: w });
        }
    }
    let psi_measure = SignedMeasure::new(psi.clone(), vec![], vec![], vec![])?;
    let measure = restricted.plus(&psi_measure);
    let k = h.h(z0) + potential_eval(z0, &outside);

    let mut residual: f64 = 0.0;
    let n_rad = 8;
    let n_ang = 24;
    let mut samples = vec![z0];
    for i in 1..=n_rad {
        let rad = r * i as f64 / n_rad as f64;
        for j in 0..n_ang {
            samples.push(z0 + Point::from_polar(rad, TWO_PI * (j as f64 + 0.25 * (i % 4) as f64) / n_ang as f64));
        }
    }
    for z in samples {
        let full = potential_eval(z, m) + h.h(z);
        let local = potential_eval(z, &measure);
        if !full.is_finite() || !local.is_finite() {
            continue;
        }
        residual = residual.max((full - local - k).abs());
    }
    Ok(Localization {
        restricted,
        psi,
        measure,
        k,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::HarmonicPoly;
    use crate::measure::{CircleDensity, DiscDensity, Domain};
    use crate::quadrature::{integrate, QuadOpts};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn disc(center: Point, radius: f64, mass: f64) -> SignedMeasure {
        SignedMeasure::new(vec![], vec![DiscDensity { center, radius, mass }], vec![], vec![]).unwrap()
    }

    fn circle(center: Point, radius: f64, mass: f64) -> SignedMeasure {
        SignedMeasure::new(vec![], vec![], vec![CircleDensity { center, radius, mass }], vec![]).unwrap()
    }

    // Brute-force (1/2π)∬ ln|z-ζ| over a uniform disc, by nested adaptive
    // quadrature in polar coordinates about the disc centre.
    fn brute_disc(z: Point, center: Point, radius: f64, mass: f64) -> f64 {
        let d = (z - center).norm();
        let opts = QuadOpts::tight();
        let outer = integrate(
            |rho| {
                let inner = integrate(
                    |th| (z - center - Point::from_polar(rho, th)).norm().ln(),
                    0.0,
                    TWO_PI,
                    &[(z - center).arg().rem_euclid(TWO_PI)],
                    opts,
                );
                rho * inner.value
            },
            0.0,
            radius,
            &[d],
            opts,
        );
        mass / (PI * radius * radius) * outer.value / TWO_PI
    }

    fn brute_circle(z: Point, center: Point, radius: f64, mass: f64) -> f64 {
        let r = integrate(
            |th| (z - center - Point::from_polar(radius, th)).norm().ln(),
            0.0,
            TWO_PI,
            &[(z - center).arg().rem_euclid(TWO_PI)],
            QuadOpts::tight(),
        );
        mass / TWO_PI * r.value / TWO_PI
    }

    #[test]
    fn potential_examples() {
        let atom = SignedMeasure::atom(c(0.0, 0.0), TWO_PI).unwrap();
        assert!((potential_eval(c(std::f64::consts::E, 0.0), &atom) - 1.0).abs() < 1e-15);
        assert_eq!(potential_eval(c(0.0, 0.0), &atom), f64::NEG_INFINITY);
        let neg = SignedMeasure::atom(c(0.0, 0.0), -1.0).unwrap();
        assert_eq!(potential_eval(c(0.0, 0.0), &neg), f64::INFINITY);

        let circ = circle(c(0.0, 0.0), 1.0, TWO_PI);
        assert!(potential_eval(c(0.0, 0.0), &circ).abs() < 1e-15);
        assert!((potential_eval(c(2.0, 0.0), &circ) - 2f64.ln()).abs() < 1e-15);

        let d = disc(c(0.0, 0.0), 1.0, TWO_PI);
        assert!((potential_eval(c(0.0, 0.0), &d) + 0.5).abs() < 1e-15);
        assert!((brute_disc(c(0.0, 0.0), c(0.0, 0.0), 1.0, TWO_PI) + 0.5).abs() < 1e-6);
    }

    #[test]
    fn analytic_components_match_brute_force_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (cc, r) = (c(0.3, -0.2), 0.8);
        let dm = disc(cc, r, 1.7);
        let cm = circle(cc, r, -0.9);
        for _ in 0..100 {
            let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            if ((z - cc).norm() - r).abs() < 1e-3 {
                continue;
            }
            assert!((potential_eval(z, &dm) - brute_disc(z, cc, r, 1.7)).abs() < 1e-6, "disc at {z}");
            assert!((potential_eval(z, &cm) - brute_circle(z, cc, r, -0.9)).abs() < 1e-6, "circle at {z}");
        }
    }

    #[test]
    fn rect_log_integral_matches_quadrature() {
        for (x0, x1, y0, y1) in [(-0.3, 0.2, -0.1, 0.4), (0.5, 1.0, 0.2, 0.3), (-1.0, 1.0, -1.0, 1.0), (0.0, 0.5, 0.0, 0.5)] {
            let opts = QuadOpts::tight();
            let v = integrate(
                |x| {
                    integrate(|y| (x * x + y * y).sqrt().ln(), y0, y1, &[0.0], opts).value
                },
                x0,
                x1,
                &[0.0],
                opts,
            )
            .value;
            assert!((rect_log_integral(x0, x1, y0, y1) - v).abs() < 1e-8, "{x0} {x1} {y0} {y1}");
        }
    }

    #[test]
    fn grid_potential_matches_cellwise_exact_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (nx, ny, s) = (21, 13, 0.05);
        let masses: Vec<f64> = (0..nx * ny).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = GridDensity::new(c(-0.4, -0.3), s, nx, ny, masses.clone()).unwrap();
        let m = SignedMeasure::new(vec![], vec![], vec![], vec![g.clone()]).unwrap();
        for z in [c(0.0, 0.0), c(0.51, 0.1), c(2.0, -1.0), c(-0.41, 0.33)] {
            let mut exact = 0.0;
            for (i, j, mass) in g.cells() {
                let e = g.cell_center(i, j) - z;
                exact += mass * rect_log_integral(e.re - s / 2.0, e.re + s / 2.0, e.im - s / 2.0, e.im + s / 2.0) / (s * s);
            }
            exact /= TWO_PI;
            assert!((potential_eval(z, &m) - exact).abs() < 1e-6, "{z}: {} vs {exact}", potential_eval(z, &m));
        }
    }

    #[test]
    fn potential_is_harmonic_off_the_support() {
        let m = SignedMeasure::new(
            vec![Atom { pos: c(0.0, 0.0), weight: 2.0 }, Atom { pos: c(1.0, 1.0), weight: -1.0 }],
            vec![DiscDensity { center: c(-1.0, 0.5), radius: 0.3, mass: 1.5 }],
            vec![CircleDensity { center: c(0.5, -1.0), radius: 0.4, mass: 0.7 }],
            vec![],
        )
        .unwrap();
        let e = 1e-3;
        for z in [c(0.5, 0.5), c(-0.5, -0.5), c(2.0, 0.0), c(0.5, -1.0)] {
            let lap = (potential_eval(z + e, &m) + potential_eval(z - e, &m) + potential_eval(z + c(0.0, e), &m)
                + potential_eval(z - c(0.0, e), &m)
                - 4.0 * potential_eval(z, &m))
                / (e * e);
            assert!(lap.abs() < 1e-4, "laplacian {lap} at {z}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = SignedMeasure::new(
            vec![Atom { pos: c(0.0, 0.0), weight: 2.0 }],
            vec![DiscDensity { center: c(-1.0, 0.5), radius: 0.3, mass: 1.5 }],
            vec![CircleDensity { center: c(0.5, -1.0), radius: 0.4, mass: 0.7 }],
            vec![],
        )
        .unwrap();
        let e = 1e-6;
        for z in [c(0.7, 0.2), c(-1.1, 0.55), c(0.5, -1.1)] {
            let g = potential_gradient(z, &m);
            let gx = (potential_eval(z + e, &m) - potential_eval(z - e, &m)) / (2.0 * e);
            let gy = (potential_eval(z + c(0.0, e), &m) - potential_eval(z - c(0.0, e), &m)) / (2.0 * e);
            assert!((g - c(gx, gy)).norm() < 1e-7);
        }
    }

    #[test]
    fn mollify_preserves_mass_and_rejects_coarse_grids() {
        let atom = SignedMeasure::atom(c(0.0, 0.0), TWO_PI).unwrap();
        let m = mollify(&atom, 0.2, 16).unwrap();
        assert!((m.total_mass() - TWO_PI).abs() < 1e-6 * TWO_PI);
        assert!(matches!(mollify(&atom, 0.2, 3), Err(Error::GridTooCoarse { .. })));
        let empty = mollify(&SignedMeasure::empty(), 0.2, 8).unwrap();
        assert!(empty.is_empty());
        let mixed = SignedMeasure::new(
            vec![Atom { pos: c(0.3, 0.0), weight: -1.0 }],
            vec![DiscDensity { center: c(-0.5, 0.2), radius: 0.3, mass: 2.0 }],
            vec![CircleDensity { center: c(0.5, 0.5), radius: 0.2, mass: 0.5 }],
            vec![],
        )
        .unwrap();
        let n = mollify_grid_size(&mixed, 0.1, 4.0);
        let mm = mollify(&mixed, 0.1, n).unwrap();
        assert!((mm.total_mass() - 1.5).abs() < 1e-6 * 1.5);
    }

    #[test]
    fn mollified_potential_dominates_and_decreases_towards_atom_potential() {
        // Sub-mean-value property: for a positive measure the mollified
        // potential lies above p(ω) and decreases to it as h shrinks.
        let atom = SignedMeasure::atom(c(0.0, 0.0), TWO_PI).unwrap();
        let z = c(0.05, 0.02);
        let exact = potential_eval(z, &atom);
        let mut prev = f64::INFINITY;
        for h in [0.4, 0.2, 0.1] {
            let n = mollify_grid_size(&atom, h, 4.0);
            let v = potential_eval(z, &mollify(&atom, h, n).unwrap());
            assert!(v >= exact);
            assert!(v < prev);
            prev = v;
        }
        // Outside the bump the mollified potential agrees with the atom's.
        let far = c(0.9, 0.0);
        let v = potential_eval(far, &mollify(&atom, 0.2, 8).unwrap());
        assert!((v - potential_eval(far, &atom)).abs() < 1e-4);
    }

    fn scene(m: SignedMeasure, h: HarmonicPoly) -> MetricScene {
        MetricScene::new(Domain::new(c(0.0, 0.0), 10.0).unwrap(), m, h).unwrap()
    }

    #[test]
    fn weak_laplacian_examples() {
        let bump = Bump { center: c(0.3, 0.0), radius: 0.5 };
        let s = scene(SignedMeasure::atom(c(0.3, 0.0), TWO_PI).unwrap(), HarmonicPoly::zero());
        assert!(weak_laplacian_residual(&s, &bump).unwrap() < 1e-3 * TWO_PI);
        let s = scene(SignedMeasure::empty(), HarmonicPoly::zero());
        assert!(weak_laplacian_residual(&s, &bump).unwrap() < 1e-12);
        let s = scene(disc(c(0.2, 0.1), 0.3, 1.0), HarmonicPoly::new(vec![c(0.0, 0.0), c(1.0, 1.0)]));
        assert!(weak_laplacian_residual(&s, &bump).unwrap() < 1e-3);
    }

    #[test]
    fn weak_laplacian_residual_shrinks_under_refinement() {
        let bump = Bump { center: c(0.0, 0.0), radius: 0.6 };
        let s = scene(
            SignedMeasure::from_atoms([(c(0.13, -0.21), 3.0), (c(-0.2, 0.25), -1.0)]).unwrap(),
            HarmonicPoly::zero(),
        );
        let r0 = weak_laplacian_residual_at(&s, &bump, 0).unwrap();
        let r1 = weak_laplacian_residual_at(&s, &bump, 1).unwrap();
        assert!(r1 < 0.5 * r0, "{r0} -> {r1}");
    }

    #[test]
    fn localize_examples() {
        let s = scene(SignedMeasure::atom(c(5.0, 0.0), 1.0).unwrap(), HarmonicPoly::zero());
        let l = localize(&s, c(0.0, 0.0), 0.5, 256).unwrap();
        assert!(l.restricted.is_empty());
        assert!(l.psi.iter().map(|a| a.weight).sum::<f64>().abs() < 1e-8);
        assert!(l.residual < 1e-5, "{}", l.residual);

        let s = scene(SignedMeasure::empty(), HarmonicPoly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]));
        let l = localize(&s, c(0.0, 0.0), 0.5, 256).unwrap();
        assert!(l.residual < 1e-5);
        assert!(l.psi.iter().map(|a| a.weight).sum::<f64>().abs() < 1e-12);

        let s = scene(SignedMeasure::empty(), HarmonicPoly::constant(2.5));
        let l = localize(&s, c(0.0, 0.0), 0.5, 64).unwrap();
        assert!(l.psi.is_empty());
        assert_eq!(l.k, 2.5);
        assert_eq!(l.residual, 0.0);
    }

    #[test]
    fn localize_rejects_atom_on_circle() {
        let s = scene(SignedMeasure::atom(c(0.75, 0.0), 1.0).unwrap(), HarmonicPoly::zero());
        assert!(matches!(localize(&s, c(0.0, 0.0), 0.5, 64), Err(Error::AtomOnCurve(..))));
    }
}
