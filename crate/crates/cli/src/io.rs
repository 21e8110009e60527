//! Scene JSON, polyline CSV and pair CSV ingestion.

use crate::CliError;
use num_complex::Complex64 as Point;
use serde::{Deserialize, Serialize};
use std::path::Path;
use submetric::{
    Atom, CircleDensity, DiscDensity, Domain, GridDensity, HarmonicPoly, MetricScene, SignedMeasure,
};
use submetric::curves::Polyline;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub domain: DomainJson,
    #[serde(default)]
    pub measure: MeasureJson,
    #[serde(default)]
    pub harmonic: HarmonicJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainJson {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureJson {
    #[serde(default)]
    pub atoms: Vec<AtomJson>,
    #[serde(default)]
    pub disc_densities: Vec<DensityJson>,
    #[serde(default)]
    pub circle_densities: Vec<DensityJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grid_densities: Vec<GridJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomJson {
    pub pos: [f64; 2],
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityJson {
    pub center: [f64; 2],
    pub radius: f64,
    pub mass: f64,
}

/// Piecewise-constant density: `masses[j * nx + i]` is the mass of cell `(i, j)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridJson {
    pub origin: [f64; 2],
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    pub masses: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicJson {
    #[serde(default)]
    pub coeffs: Vec<[f64; 2]>,
}

fn pt(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

fn arr(p: Point) -> [f64; 2] {
    [p.re, p.im]
}

fn check_finite(values: &[f64], what: &str) -> Result<(), String> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(format!("{what}: non-finite number"))
    }
}

impl SceneFile {
    pub fn from_scene(scene: &MetricScene) -> Self {
        let m = &scene.measure;
        SceneFile {
            domain: DomainJson {
                center: arr(scene.domain.center),
                radius: scene.domain.radius,
            },
            measure: MeasureJson {
                atoms: m.atoms().iter().map(|a| AtomJson { pos: arr(a.pos), weight: a.weight }).collect(),
                disc_densities: m
                    .discs()
                    .iter()
                    .map(|d| DensityJson { center: arr(d.center), radius: d.radius, mass: d.mass })
                    .collect(),
                circle_densities: m
                    .circles()
                    .iter()
                    .map(|d| DensityJson { center: arr(d.center), radius: d.radius, mass: d.mass })
                    .collect(),
                grid_densities: m
                    .grids()
                    .iter()
                    .map(|g| GridJson {
                        origin: arr(g.origin()),
                        cell: g.cell(),
                        nx: g.nx(),
                        ny: g.ny(),
                        masses: g.masses().to_vec(),
                    })
                    .collect(),
            },
            harmonic: HarmonicJson {
                coeffs: scene.harmonic.poly.coeffs.iter().map(|c| arr(*c)).collect(),
            },
        }
    }

    /// Validates numbers and support and builds the scene. Errors name the
    /// offending JSON path.
    pub fn into_scene(self) -> Result<MetricScene, String> {
        let d = &self.domain;
        check_finite(&[d.center[0], d.center[1], d.radius], "domain")?;
        let domain = Domain::new(pt(d.center), d.radius).map_err(|e| format!("domain: {e}"))?;
        let m = &self.measure;
        let mut atoms = Vec::new();
        for (k, a) in m.atoms.iter().enumerate() {
            let at = format!("measure.atoms[{k}]");
            check_finite(&[a.pos[0], a.pos[1], a.weight], &at)?;
            if !domain.contains(pt(a.pos)) {
                return Err(format!("{at}: support outside the domain"));
            }
            atoms.push(Atom { pos: pt(a.pos), weight: a.weight });
        }
        let density = |list: &[DensityJson], name: &str| -> Result<Vec<(Point, f64, f64)>, String> {
            let mut out = Vec::new();
            for (k, d) in list.iter().enumerate() {
                let at = format!("measure.{name}[{k}]");
                check_finite(&[d.center[0], d.center[1], d.radius, d.mass], &at)?;
                if d.radius <= 0.0 {
                    return Err(format!("{at}: radius must be positive"));
                }
                if !domain.contains_disc(pt(d.center), d.radius) {
                    return Err(format!("{at}: support outside the domain"));
                }
                out.push((pt(d.center), d.radius, d.mass));
            }
            Ok(out)
        };
        let discs = density(&m.disc_densities, "disc_densities")?
            .into_iter()
            .map(|(center, radius, mass)| DiscDensity { center, radius, mass })
            .collect();
        let circles = density(&m.circle_densities, "circle_densities")?
            .into_iter()
            .map(|(center, radius, mass)| CircleDensity { center, radius, mass })
            .collect();
        let mut grids = Vec::new();
        for (k, g) in m.grid_densities.iter().enumerate() {
            let at = format!("measure.grid_densities[{k}]");
            check_finite(&[g.origin[0], g.origin[1], g.cell], &at)?;
            check_finite(&g.masses, &at)?;
            let grid = GridDensity::new(pt(g.origin), g.cell, g.nx, g.ny, g.masses.clone()).map_err(|e| format!("{at}: {e}"))?;
            let o = pt(g.origin);
            let far = o + Point::new(g.nx as f64 * g.cell, g.ny as f64 * g.cell);
            for corner in [o, far, Point::new(o.re, far.im), Point::new(far.re, o.im)] {
                if !domain.contains(corner) {
                    return Err(format!("{at}: support outside the domain"));
                }
            }
            grids.push(grid);
        }
        let measure = SignedMeasure::new(atoms, discs, circles, grids).map_err(|e| format!("measure: {e}"))?;
        let mut coeffs = Vec::new();
        for (k, c) in self.harmonic.coeffs.iter().enumerate() {
            check_finite(c, &format!("harmonic.coeffs[{k}]"))?;
            coeffs.push(pt(*c));
        }
        MetricScene::new(domain, measure, HarmonicPoly::new(coeffs)).map_err(|e| e.to_string())
    }
}

/// Reads and validates a scene file. Syntax and schema errors carry
/// `path:line:column`.
pub fn parse_scene(path: &Path) -> Result<MetricScene, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    parse_scene_str(&text, &path.display().to_string())
}

pub fn parse_scene_str(text: &str, name: &str) -> Result<MetricScene, CliError> {
    let file: SceneFile = serde_json::from_str(text).map_err(|e| {
        CliError::Input(format!("{name}:{}:{}: {}", e.line(), e.column(), strip_position(&e.to_string())))
    })?;
    file.into_scene().map_err(|e| CliError::Input(format!("{name}: {e}")))
}

fn strip_position(msg: &str) -> &str {
    msg.find(" at line ").map_or(msg, |k| &msg[..k])
}

/// Polyline CSV: optional first comment line `# closed=true|false`, then one
/// `x,y` pair per line. Blank lines and further `#` lines are ignored.
pub fn parse_polyline_str(text: &str, name: &str) -> Result<Polyline, CliError> {
    let mut closed = false;
    let mut vertices = Vec::new();
    let mut seen_data = false;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let c = comment.trim();
            if let Some(v) = c.strip_prefix("closed=") {
                if seen_data {
                    return Err(CliError::Input(format!("{name}:{}: closed= header must precede the data", k + 1)));
                }
                closed = match v.trim() {
                    "true" => true,
                    "false" => false,
                    other => return Err(CliError::Input(format!("{name}:{}: expected closed=true|false, got {other:?}", k + 1))),
                };
            }
            continue;
        }
        seen_data = true;
        let z = parse_numbers(line, 2, &format!("{name}:{}", k + 1))?;
        vertices.push(Point::new(z[0], z[1]));
    }
    Polyline::new(vertices, closed).map_err(|e| CliError::Input(format!("{name}: {e}")))
}

pub fn parse_polyline(path: &Path) -> Result<Polyline, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    parse_polyline_str(&text, &path.display().to_string())
}

/// Pair CSV: `x1,y1,x2,y2` per line; a non-numeric first line is a header.
pub fn parse_pairs(path: &Path) -> Result<Vec<(Point, Point)>, CliError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(name.clone(), e))?;
    let mut pairs = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if pairs.is_empty() && k == 0 && line.split(',').any(|f| f.trim().parse::<f64>().is_err()) {
            continue;
        }
        let v = parse_numbers(line, 4, &format!("{name}:{}", k + 1))?;
        pairs.push((Point::new(v[0], v[1]), Point::new(v[2], v[3])));
    }
    if pairs.is_empty() {
        return Err(CliError::Input(format!("{name}: no pairs")));
    }
    Ok(pairs)
}

/// `n` comma-separated finite numbers.
pub fn parse_numbers(s: &str, n: usize, at: &str) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|f| f.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Input(format!("{at}: {e} in {s:?}")))?;
    if v.len() != n {
        return Err(CliError::Input(format!("{at}: expected {n} numbers, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Input(format!("{at}: non-finite number in {s:?}")));
    }
    Ok(v)
}
