//! Canonical stretching and the convergence experiments built on it and on
//! mollification.

use crate::cone::{cone_distance, ConeSpec};
use crate::distance::{distance, DistanceOpts};
use crate::error::{Error, Result};
use crate::measure::Domain;
use crate::quadrature::{integrate, QuadOpts};
use crate::potential::{mollify, mollify_grid_size};
use crate::scene::{Derivation, MetricScene};
use crate::Point;
use rayon::prelude::*;
use std::f64::consts::PI;

/// λ-length of the round circle `C_r(z0)`, by adaptive quadrature in the
/// angle split at the directions of the singular points.
pub fn circle_length(scene: &MetricScene, z0: Point, r: f64) -> f64 {
    let breaks: Vec<f64> = scene
        .singularities()
        .iter()
        .filter(|(p, _)| *p != z0)
        .map(|(p, _)| (p - z0).arg().rem_euclid(2.0 * PI))
        .collect();
    integrate(
        |t| scene.sqrt_lambda(z0 + Point::from_polar(r, t)) * r,
        0.0,
        2.0 * PI,
        &breaks,
        QuadOpts::tight(),
    )
    .value
}

/// `λ_{r,z0}(z) = c r² λ(z0 + r z)` with `c = (2π / s_λ(C_r(z0)))²`, so the
/// unit circle of the stretched metric has length `2π`.
pub fn stretch(scene: &MetricScene, z0: Point, r: f64) -> Result<MetricScene> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("stretch radius must be positive, got {r}")));
    }
    if !scene.domain.contains_disc(z0, r) {
        return Err(Error::Precondition("Q_r(z0) must lie in the domain".into()));
    }
    let s = circle_length(scene, z0, r);
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::Precondition(format!("circle C_r(z0) has length {s}")));
    }
    let c = (2.0 * PI / s).powi(2);
    let domain = Domain::new((scene.domain.center - z0) / r, scene.domain.radius / r)?;
    scene.derive(
        Derivation::Affine {
            a: Point::new(r, 0.0),
            b: z0,
            factor: c,
        },
        domain,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    /// Stretch radius or mollifier scale.
    pub scale: f64,
    /// Sup over the sample pairs of the distance discrepancy.
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
    /// Every row below the previous one.
    pub strictly_decreasing: bool,
    /// The second half of the schedule never rises by more than `slack`.
    pub tail_decreasing: bool,
}

fn table(rows: Vec<ExperimentRow>, slack: f64) -> ExperimentTable {
    let d: Vec<f64> = rows.iter().map(|r| r.discrepancy).collect();
    let strictly_decreasing = d.windows(2).all(|w| w[1] < w[0]);
    let start = d.len() / 2;
    let tail_decreasing = d[start.saturating_sub(1)..].windows(2).all(|w| w[1] <= w[0] + slack);
    ExperimentTable {
        rows,
        strictly_decreasing,
        tail_decreasing,
    }
}

fn sup_discrepancy(
    scene: &MetricScene,
    pairs: &[(Point, Point)],
    reference: &[f64],
    opts: &DistanceOpts,
) -> Result<f64> {
    let d: Vec<f64> = pairs
        .par_iter()
        .map(|(a, b)| distance(scene, *a, *b, opts).map(|r| r.value))
        .collect::<Result<_>>()?;
    Ok(d.iter().zip(reference).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Sup over `pairs` (points of the annulus `ε ≤ |z| ≤ 1`) of the gap between
/// the stretched distance and the tangent cone of weight `ω({z0})`, for each
/// radius in decreasing order.
pub fn stretch_experiment(
    scene: &MetricScene,
    z0: Point,
    radii: &[f64],
    eps: f64,
    pairs: &[(Point, Point)],
    opts: &DistanceOpts,
) -> Result<ExperimentTable> {
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("radii must be decreasing".into()));
    }
    for (a, b) in pairs {
        for z in [a, b] {
            if z.norm() < eps || z.norm() > 1.0 {
                return Err(Error::InvalidInput("sample points must lie in the annulus".into()));
            }
        }
    }
    let cone = ConeSpec::new(Point::new(0.0, 0.0), scene.atom_weight_at(z0))?;
    let reference: Vec<f64> = pairs.iter().map(|(a, b)| cone_distance(&cone, *a, *b)).collect();
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let s = stretch(scene, z0, r)?;
        rows.push(ExperimentRow {
            scale: r,
            discrepancy: sup_discrepancy(&s, pairs, &reference, opts)?,
        });
    }
    Ok(table(rows, 2.0 * opts.tol))
}

/// Sup over `pairs` of `|ρ_{λ_h} - ρ_λ|` where `λ_h` comes from the measure
/// mollified at scale `h` (harmonic part unchanged).
pub fn converge_experiment(
    scene: &MetricScene,
    h_scales: &[f64],
    pairs: &[(Point, Point)],
    cells_per_h: f64,
    opts: &DistanceOpts,
) -> Result<ExperimentTable> {
    if scene.is_derived() {
        return Err(Error::DerivedScene);
    }
    if h_scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("scales must be decreasing".into()));
    }
    let reference: Vec<f64> = pairs
        .par_iter()
        .map(|(a, b)| distance(scene, *a, *b, opts).map(|r| r.value))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(h_scales.len());
    for &h in h_scales {
        let n = mollify_grid_size(&scene.measure, h, cells_per_h);
        let m = mollify(&scene.measure, h, n)?;
        let smooth = MetricScene::new(scene.domain, m, scene.harmonic.clone())?;
        rows.push(ExperimentRow {
            scale: h,
            discrepancy: sup_discrepancy(&smooth, pairs, &reference, opts)?,
        });
    }
    Ok(table(rows, 2.0 * opts.tol))
}
