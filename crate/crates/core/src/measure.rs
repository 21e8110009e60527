//! Signed curvature measures with compact support: atoms plus analytic
//! density families (uniform disc, uniform circle, piecewise-constant grid).

use crate::error::{Error, Result};
use crate::geometry::{arc_fraction_in_disc, lens_area, polygon_disc_area};
use crate::potential::GridIndex;
use crate::Point;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub pos: Point,
    pub weight: f64,
}

/// Uniform density on the closed disc `Q(center, radius)` with the given total mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscDensity {
    pub center: Point,
    pub radius: f64,
    pub mass: f64,
}

/// Uniform arc-length density on the circle `C(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleDensity {
    pub center: Point,
    pub radius: f64,
    pub mass: f64,
}

/// Piecewise-constant density: cell `(i, j)` covers
/// `[x0 + i*cell, x0 + (i+1)*cell] x [y0 + j*cell, y0 + (j+1)*cell]`
/// and carries `masses[j * nx + i]` spread uniformly.
#[derive(Debug, Clone)]
pub struct GridDensity {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    masses: Vec<f64>,
    index: GridIndex,
}

impl PartialEq for GridDensity {
    fn eq(&self, other: &Self) -> bool {
        self.origin == other.origin
            && self.cell == other.cell
            && self.nx == other.nx
            && self.ny == other.ny
            && self.masses == other.masses
    }
}

impl GridDensity {
    pub fn new(origin: Point, cell: f64, nx: usize, ny: usize, masses: Vec<f64>) -> Result<Self> {
        if !(cell > 0.0 && cell.is_finite()) || masses.len() != nx * ny {
            return Err(Error::InvalidInput("malformed grid density".into()));
        }
        finite_point(origin, "grid origin")?;
        for m in &masses {
            finite(*m, "grid cell mass")?;
        }
        Ok(Self::build(origin, cell, nx, ny, masses))
    }

    fn build(origin: Point, cell: f64, nx: usize, ny: usize, masses: Vec<f64>) -> Self {
        let mut g = Self {
            origin,
            cell,
            nx,
            ny,
            masses,
            index: GridIndex::default(),
        };
        g.index = GridIndex::build(&g);
        g
    }

    pub fn origin(&self) -> Point {
        self.origin
    }
    pub fn cell(&self) -> f64 {
        self.cell
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }
    pub(crate) fn index(&self) -> &GridIndex {
        &self.index
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        self.origin + Point::new((i as f64 + 0.5) * self.cell, (j as f64 + 0.5) * self.cell)
    }

    pub fn cell_polygon(&self, i: usize, j: usize) -> [Point; 4] {
        let lo = self.origin + Point::new(i as f64 * self.cell, j as f64 * self.cell);
        let s = self.cell;
        [lo, lo + s, lo + Point::new(s, s), lo + Point::new(0.0, s)]
    }

    /// Non-zero cells as `(i, j, mass)`.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .filter(|(_, m)| **m != 0.0)
            .map(move |(k, m)| (k % self.nx, k / self.nx, *m))
    }

    fn map_masses(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::build(self.origin, self.cell, self.nx, self.ny, self.masses.iter().map(|m| f(*m)).collect())
    }

    fn moved(&self, origin: Point, cell: f64) -> Self {
        Self::build(origin, cell, self.nx, self.ny, self.masses.clone())
    }

    fn is_empty(&self) -> bool {
        self.masses.iter().all(|m| *m == 0.0)
    }
}

/// A signed Borel measure with compact support.
///
/// Atoms at bit-identical coordinates are merged on construction and atoms
/// whose merged weight is zero are dropped. Near-coincident atoms are kept
/// apart.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignedMeasure {
    atoms: Vec<Atom>,
    discs: Vec<DiscDensity>,
    circles: Vec<CircleDensity>,
    grids: Vec<GridDensity>,
}

fn finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} must be finite, got {x}")))
    }
}

fn finite_point(p: Point, what: &str) -> Result<()> {
    finite(p.re, what)?;
    finite(p.im, what)
}

fn merge_atoms(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.sort_by(|a, b| {
        a.pos
            .re
            .total_cmp(&b.pos.re)
            .then(a.pos.im.total_cmp(&b.pos.im))
    });
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out.last_mut() {
            Some(last) if last.pos == a.pos => last.weight += a.weight,
            _ => out.push(a),
        }
    }
    out.retain(|a| a.weight != 0.0);
    out
}

impl SignedMeasure {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(
        atoms: Vec<Atom>,
        discs: Vec<DiscDensity>,
        circles: Vec<CircleDensity>,
        grids: Vec<GridDensity>,
    ) -> Result<Self> {
        for a in &atoms {
            finite_point(a.pos, "atom position")?;
            finite(a.weight, "atom weight")?;
        }
        for d in &discs {
            finite_point(d.center, "disc centre")?;
            finite(d.mass, "disc mass")?;
            if !(d.radius > 0.0 && d.radius.is_finite()) {
                return Err(Error::InvalidInput(format!("disc radius must be positive, got {}", d.radius)));
            }
        }
        for c in &circles {
            finite_point(c.center, "circle centre")?;
            finite(c.mass, "circle mass")?;
            if !(c.radius > 0.0 && c.radius.is_finite()) {
                return Err(Error::InvalidInput(format!("circle radius must be positive, got {}", c.radius)));
            }
        }
        Ok(Self {
            atoms: merge_atoms(atoms),
            discs: discs.into_iter().filter(|d| d.mass != 0.0).collect(),
            circles: circles.into_iter().filter(|c| c.mass != 0.0).collect(),
            grids: grids.into_iter().filter(|g| !g.is_empty()).collect(),
        })
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = (Point, f64)>) -> Result<Self> {
        Self::new(
            atoms.into_iter().map(|(pos, weight)| Atom { pos, weight }).collect(),
            Vec::new(),
            Vec::new(),
            Vec::new(),
        )
    }

    pub fn atom(pos: Point, weight: f64) -> Result<Self> {
        Self::from_atoms([(pos, weight)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }
    pub fn discs(&self) -> &[DiscDensity] {
        &self.discs
    }
    pub fn circles(&self) -> &[CircleDensity] {
        &self.circles
    }
    pub fn grids(&self) -> &[GridDensity] {
        &self.grids
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.discs.is_empty() && self.circles.is_empty() && self.grids.is_empty()
    }

    pub fn has_densities(&self) -> bool {
        !(self.discs.is_empty() && self.circles.is_empty() && self.grids.is_empty())
    }

    /// Sum of two measures (components concatenated, atoms re-merged).
    pub fn plus(&self, other: &SignedMeasure) -> SignedMeasure {
        Self {
            atoms: merge_atoms([&self.atoms[..], &other.atoms[..]].concat()),
            discs: [&self.discs[..], &other.discs[..]].concat(),
            circles: [&self.circles[..], &other.circles[..]].concat(),
            grids: [&self.grids[..], &other.grids[..]].concat(),
        }
    }

    pub fn scaled(&self, s: f64) -> SignedMeasure {
        if s == 0.0 {
            return Self::empty();
        }
        Self {
            atoms: self.atoms.iter().map(|a| Atom { weight: a.weight * s, ..*a }).collect(),
            discs: self.discs.iter().map(|d| DiscDensity { mass: d.mass * s, ..*d }).collect(),
            circles: self.circles.iter().map(|c| CircleDensity { mass: c.mass * s, ..*c }).collect(),
            grids: self.grids.iter().map(|g| g.map_masses(|m| m * s)).collect(),
        }
    }

    /// Jordan decomposition `m = positive - negative`, component-wise.
    pub fn jordan_parts(&self) -> (SignedMeasure, SignedMeasure) {
        let mut pos = Self::empty();
        let mut neg = Self::empty();
        for a in &self.atoms {
            if a.weight > 0.0 {
                pos.atoms.push(*a);
            } else {
                neg.atoms.push(Atom { weight: -a.weight, ..*a });
            }
        }
        for d in &self.discs {
            if d.mass > 0.0 {
                pos.discs.push(*d);
            } else {
                neg.discs.push(DiscDensity { mass: -d.mass, ..*d });
            }
        }
        for c in &self.circles {
            if c.mass > 0.0 {
                pos.circles.push(*c);
            } else {
                neg.circles.push(CircleDensity { mass: -c.mass, ..*c });
            }
        }
        for g in &self.grids {
            let p = g.map_masses(|m| m.max(0.0));
            let n = g.map_masses(|m| (-m).max(0.0));
            if !p.is_empty() {
                pos.grids.push(p);
            }
            if !n.is_empty() {
                neg.grids.push(n);
            }
        }
        (pos, neg)
    }

    pub fn is_positive(&self) -> bool {
        self.atoms.iter().all(|a| a.weight > 0.0)
            && self.discs.iter().all(|d| d.mass > 0.0)
            && self.circles.iter().all(|c| c.mass > 0.0)
            && self.grids.iter().all(|g| g.masses.iter().all(|m| *m >= 0.0))
    }

    /// `|m|(C)`.
    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight.abs()).sum::<f64>()
            + self.discs.iter().map(|d| d.mass.abs()).sum::<f64>()
            + self.circles.iter().map(|c| c.mass.abs()).sum::<f64>()
            + self
                .grids
                .iter()
                .flat_map(|g| g.masses.iter())
                .map(|m| m.abs())
                .sum::<f64>()
    }

    /// `m(C)`.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum::<f64>()
            + self.discs.iter().map(|d| d.mass).sum::<f64>()
            + self.circles.iter().map(|c| c.mass).sum::<f64>()
            + self.grids.iter().flat_map(|g| g.masses.iter()).sum::<f64>()
    }

    /// Weight of the atom sitting exactly at `z` (0 if none).
    pub fn atom_weight_at(&self, z: Point) -> f64 {
        self.atoms
            .iter()
            .find(|a| a.pos == z)
            .map_or(0.0, |a| a.weight)
    }

    /// Smallest disc about `center` containing the support.
    pub fn support_radius_about(&self, center: Point) -> f64 {
        let mut r: f64 = 0.0;
        for a in &self.atoms {
            r = r.max((a.pos - center).norm());
        }
        for d in &self.discs {
            r = r.max((d.center - center).norm() + d.radius);
        }
        for c in &self.circles {
            r = r.max((c.center - center).norm() + c.radius);
        }
        for g in &self.grids {
            for (i, j, _) in g.cells() {
                for p in g.cell_polygon(i, j) {
                    r = r.max((p - center).norm());
                }
            }
        }
        r
    }

    /// Axis-aligned bounding box `(min, max)` of the support.
    pub fn support_bounds(&self) -> Option<(Point, Point)> {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut grow = |p: Point, r: f64| {
            lo.re = lo.re.min(p.re - r);
            lo.im = lo.im.min(p.im - r);
            hi.re = hi.re.max(p.re + r);
            hi.im = hi.im.max(p.im + r);
        };
        for a in &self.atoms {
            grow(a.pos, 0.0);
        }
        for d in &self.discs {
            grow(d.center, d.radius);
        }
        for c in &self.circles {
            grow(c.center, c.radius);
        }
        for g in &self.grids {
            for (i, j, _) in g.cells() {
                for p in g.cell_polygon(i, j) {
                    grow(p, 0.0);
                }
            }
        }
        (lo.re <= hi.re).then_some((lo, hi))
    }

    /// Exact signed mass of the open disc `Q(center, radius)`.
    pub fn mass_in_disc(&self, center: Point, radius: f64) -> f64 {
        let mut m = 0.0;
        for a in &self.atoms {
            if (a.pos - center).norm() < radius {
                m += a.weight;
            }
        }
        for c in &self.circles {
            m += c.mass * arc_fraction_in_disc(c.center, c.radius, center, radius);
        }
        for d in &self.discs {
            m += d.mass * lens_area(d.center, d.radius, center, radius) / (PI * d.radius * d.radius);
        }
        for g in &self.grids {
            let area = g.cell * g.cell;
            for (i, j, cm) in g.cells() {
                m += cm * polygon_disc_area(&g.cell_polygon(i, j), center, radius) / area;
            }
        }
        m
    }

    /// Restriction to the open disc `Q(center, radius)`.
    ///
    /// Components straddling the circle are replaced by at most `n_split`
    /// atoms spread over the overlap and carrying its exact mass.
    pub fn restrict_to_disc(&self, center: Point, radius: f64, n_split: usize) -> SignedMeasure {
        self.split_by_disc(center, radius, n_split).0
    }

    /// `(inside, outside)` parts with respect to the open disc; their sum
    /// carries exactly the mass of `self` in every disc component.
    pub fn split_by_disc(&self, center: Point, radius: f64, n_split: usize) -> (SignedMeasure, SignedMeasure) {
        let n_split = n_split.max(1);
        let mut inside = Self::empty();
        let mut outside = Self::empty();
        let mut in_atoms = Vec::new();
        let mut out_atoms = Vec::new();

        for a in &self.atoms {
            if (a.pos - center).norm() < radius {
                in_atoms.push(*a);
            } else {
                out_atoms.push(*a);
            }
        }

        for c in &self.circles {
            let frac = arc_fraction_in_disc(c.center, c.radius, center, radius);
            if frac >= 1.0 {
                inside.circles.push(*c);
            } else if frac <= 0.0 {
                outside.circles.push(*c);
            } else {
                // Inside arc is symmetric about the direction towards the disc centre.
                let dir = (center - c.center).arg();
                let half = PI * frac;
                let spread = |from: f64, width: f64, mass: f64, into: &mut Vec<Atom>| {
                    let n = n_split;
                    for k in 0..n {
                        let th = from + width * (k as f64 + 0.5) / n as f64;
                        into.push(Atom {
                            pos: c.center + Point::from_polar(c.radius, th),
                            weight: mass / n as f64,
                        });
                    }
                };
                spread(dir - half, 2.0 * half, c.mass * frac, &mut in_atoms);
                spread(dir + half, 2.0 * PI - 2.0 * half, c.mass * (1.0 - frac), &mut out_atoms);
            }
        }

        for d in &self.discs {
            let full = PI * d.radius * d.radius;
            let lens = lens_area(d.center, d.radius, center, radius);
            if lens >= full * (1.0 - 1e-15) {
                inside.discs.push(*d);
            } else if lens <= 0.0 {
                outside.discs.push(*d);
            } else {
                let n_r = ((n_split as f64 / 4.0).sqrt().floor() as usize).max(1);
                let n_t = 4 * n_r;
                let mut pin = Vec::new();
                let mut pout = Vec::new();
                for ir in 0..n_r {
                    let r0 = d.radius * ir as f64 / n_r as f64;
                    let r1 = d.radius * (ir + 1) as f64 / n_r as f64;
                    let rm = (2.0 / 3.0) * (r1.powi(3) - r0.powi(3)) / (r1 * r1 - r0 * r0);
                    let w = (r1 * r1 - r0 * r0) / (n_t as f64);
                    for it in 0..n_t {
                        let th = 2.0 * PI * (it as f64 + 0.5) / n_t as f64;
                        let p = d.center + Point::from_polar(rm, th);
                        if (p - center).norm() < radius {
                            pin.push((p, w));
                        } else {
                            pout.push((p, w));
                        }
                    }
                }
                let mass_in = d.mass * lens / full;
                let mass_out = d.mass - mass_in;
                distribute(&pin, mass_in, &mut in_atoms, d.center);
                distribute(&pout, mass_out, &mut out_atoms, d.center);
            }
        }

        for g in &self.grids {
            let mut min = vec![0.0; g.masses.len()];
            let mut mout = vec![0.0; g.masses.len()];
            let area = g.cell * g.cell;
            for (i, j, m) in g.cells() {
                let poly = g.cell_polygon(i, j);
                let a_in = polygon_disc_area(&poly, center, radius).clamp(0.0, area);
                let k = j * g.nx + i;
                if a_in >= area * (1.0 - 1e-14) {
                    min[k] = m;
                } else if a_in <= 0.0 {
                    mout[k] = m;
                } else {
                    let (cin, cout) = split_centroids(&poly, center, radius);
                    in_atoms.push(Atom { pos: cin, weight: m * a_in / area });
                    out_atoms.push(Atom { pos: cout, weight: m * (1.0 - a_in / area) });
                }
            }
            let gin = GridDensity::build(g.origin, g.cell, g.nx, g.ny, min);
            let gout = GridDensity::build(g.origin, g.cell, g.nx, g.ny, mout);
            if !gin.is_empty() {
                inside.grids.push(gin);
            }
            if !gout.is_empty() {
                outside.grids.push(gout);
            }
        }

        inside.atoms = merge_atoms(in_atoms);
        outside.atoms = merge_atoms(out_atoms);
        (inside, outside)
    }

    /// Translate and scale positions: `z -> (z - shift) / scale`, weights kept.
    pub fn pushed_forward_affine(&self, shift: Point, scale: f64) -> SignedMeasure {
        let t = |p: Point| (p - shift) / scale;
        Self {
            atoms: merge_atoms(self.atoms.iter().map(|a| Atom { pos: t(a.pos), ..*a }).collect()),
            discs: self
                .discs
                .iter()
                .map(|d| DiscDensity { center: t(d.center), radius: d.radius / scale, ..*d })
                .collect(),
            circles: self
                .circles
                .iter()
                .map(|c| CircleDensity { center: t(c.center), radius: c.radius / scale, ..*c })
                .collect(),
            grids: self
                .grids
                .iter()
                .map(|g| g.moved(t(g.origin), g.cell / scale))
                .collect(),
        }
    }
}

fn distribute(points: &[(Point, f64)], mass: f64, into: &mut Vec<Atom>, fallback: Point) {
    let total: f64 = points.iter().map(|p| p.1).sum();
    if mass == 0.0 {
        return;
    }
    if points.is_empty() || total <= 0.0 {
        into.push(Atom { pos: fallback, weight: mass });
        return;
    }
    for (p, w) in points {
        into.push(Atom { pos: *p, weight: mass * w / total });
    }
}

// Centroids (by 8x8 sub-sampling) of the parts of a cell inside / outside a disc.
fn split_centroids(cell: &[Point; 4], center: Point, radius: f64) -> (Point, Point) {
    let lo = cell[0];
    let s = cell[1].re - cell[0].re;
    let (mut sin, mut nin, mut sout, mut nout) = (Point::new(0.0, 0.0), 0usize, Point::new(0.0, 0.0), 0usize);
    for a in 0..8 {
        for b in 0..8 {
            let p = lo + Point::new((a as f64 + 0.5) * s / 8.0, (b as f64 + 0.5) * s / 8.0);
            if (p - center).norm() < radius {
                sin += p;
                nin += 1;
            } else {
                sout += p;
                nout += 1;
            }
        }
    }
    let mid = lo + Point::new(0.5 * s, 0.5 * s);
    let cin = if nin > 0 { sin / nin as f64 } else { mid };
    let cout = if nout > 0 { sout / nout as f64 } else { mid };
    (cin, cout)
}

/// An open disc standing for the domain `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub center: Point,
    pub radius: f64,
}

impl Domain {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("domain radius must be positive, got {radius}")));
        }
        finite_point(center, "domain centre")?;
        Ok(Self { center, radius })
    }

    pub fn contains(&self, z: Point) -> bool {
        (z - self.center).norm() < self.radius
    }

    /// Whether the closed disc `Q(c, r)` lies inside the domain.
    pub fn contains_disc(&self, c: Point, r: f64) -> bool {
        (c - self.center).norm() + r < self.radius
    }
}
