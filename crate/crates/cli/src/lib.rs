//! Command-line front end: scene and polyline ingestion, dispatch, and
//! JSON / CSV / SVG emission.

pub mod io;
pub mod svg;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as Point;
use serde_json::{json, Map, Value};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use submetric::cone::{cone_circle_length, cone_distance, sector_angle, ConeSpec};
use submetric::convergence::{circle_length, converge_experiment, stretch};
use submetric::curves::{abs_rotation, angular_function, euclid_length, rotation, Polyline};
use submetric::distance::{distance, DistanceOpts};
use submetric::metric::{area, polyline_length};
use submetric::potential::{localize, potential_eval};
use submetric::turn::{comparison_excess, gauss_bonnet_defect, left_turn, right_turn, GeodesicOracle, SolverOracle};
use submetric::MetricScene;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error(transparent)]
    Domain(#[from] submetric::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "submetric", version, about = "Subharmonic conformal metrics on plane domains")]
pub struct Cli {
    /// Worker threads for internal parallelism (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SceneArg {
    /// Scene JSON file.
    #[arg(long)]
    pub scene: PathBuf,
}

#[derive(Debug, Args)]
pub struct Format {
    /// Emit CSV (header row plus data rows) instead of JSON.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum What {
    Lambda,
    Potential,
    H,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CurveOp {
    Length,
    Rotation,
    Absrot,
    Phi,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SideArg {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ConeOp {
    Dist,
    Circle,
    Sector,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OracleArg {
    /// Two-stage shortest-path solver on the scene.
    Solver,
    /// Closed-form cone geometry; the scene must be a single atom.
    Cone,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Conformal factor, potential or harmonic term at a point.
    Eval {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, allow_hyphen_values = true, value_name = "X,Y")]
        point: String,
        #[arg(long, value_enum, default_value = "lambda")]
        what: What,
        #[command(flatten)]
        format: Format,
    },
    /// λ-length of a polyline.
    Length {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long)]
        polyline: PathBuf,
        #[command(flatten)]
        format: Format,
    },
    /// Intrinsic distance between two points, with a witness polyline.
    Dist {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, allow_hyphen_values = true, value_name = "X,Y")]
        from: String,
        #[arg(long, allow_hyphen_values = true, value_name = "X,Y")]
        to: String,
        /// Stage-1 grid nodes per side.
        #[arg(long)]
        grid: Option<usize>,
        /// Relative tolerance of the refinement stage.
        #[arg(long)]
        tol: Option<f64>,
        /// Return +∞ for points at infinity instead of failing.
        #[arg(long)]
        allow_infinite: bool,
        /// Write the witness over a λ heatmap.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        format: Format,
    },
    /// λ-area of an axis-aligned rectangle.
    Area {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, allow_hyphen_values = true, value_name = "X0,Y0,X1,Y1")]
        rect: String,
        #[command(flatten)]
        format: Format,
    },
    /// Euclidean curve quantities of a polyline.
    Curve {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, value_enum)]
        op: CurveOp,
        /// Viewpoint for the angular function.
        #[arg(long, allow_hyphen_values = true, value_name = "X,Y")]
        zeta: Option<String>,
        #[command(flatten)]
        format: Format,
    },
    /// Left and/or right turn of a polyline.
    Turn {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long)]
        polyline: PathBuf,
        #[arg(long, value_enum)]
        side: Option<SideArg>,
        #[command(flatten)]
        format: Format,
    },
    /// Gauss-Bonnet defect of a closed, positively oriented simple polygon.
    Gaussbonnet {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long)]
        polyline: PathBuf,
        #[command(flatten)]
        format: Format,
    },
    /// Comparison-angle excess at the vertex x of the triangle x y1 y2.
    Excess {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, allow_hyphen_values = true, value_name = "X,Y")]
        x: String,
        #[arg(long, allow_hyphen_values = true, value_name = "X,Y")]
        y1: String,
        #[arg(long, allow_hyphen_values = true, value_name = "X,Y")]
        y2: String,
        /// Decreasing fractions t for the shrinking triangles.
        #[arg(long, allow_hyphen_values = true, value_name = "T1,T2,...", default_value = "0.2,0.1,0.05")]
        ts: String,
        #[arg(long, default_value_t = 0.02)]
        slack: f64,
        #[arg(long, value_enum, default_value = "solver")]
        oracle: OracleArg,
        #[command(flatten)]
        format: Format,
    },
    /// Closed-form geometry of the cone of vertex weight ω₀.
    Cone {
        #[arg(long, allow_hyphen_values = true)]
        omega0: f64,
        #[arg(long, value_enum)]
        op: ConeOp,
        #[arg(long, allow_hyphen_values = true, value_name = "X,Y", default_value = "0,0")]
        vertex: String,
        #[arg(long, allow_hyphen_values = true, value_name = "X,Y")]
        from: Option<String>,
        #[arg(long, allow_hyphen_values = true, value_name = "X,Y")]
        to: Option<String>,
        /// Plane radius for `circle`.
        #[arg(long)]
        radius: Option<f64>,
        /// Plane angle for `sector`.
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[command(flatten)]
        format: Format,
    },
    /// Localize the scene to a disc: restricted measure plus boundary atoms.
    Localize {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, allow_hyphen_values = true, value_name = "X,Y")]
        center: String,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 256)]
        segments: usize,
        #[command(flatten)]
        format: Format,
    },
    /// Canonical stretching about a point.
    Stretch {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, allow_hyphen_values = true, value_name = "X,Y")]
        center: String,
        #[arg(long)]
        radius: f64,
        /// Write the stretched scene as a scene file.
        #[arg(long)]
        emit: Option<PathBuf>,
        #[command(flatten)]
        format: Format,
    },
    /// Distances under mollification at decreasing scales.
    Converge {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, allow_hyphen_values = true, value_name = "H1,H2,...")]
        scales: String,
        /// CSV of `x1,y1,x2,y2` rows.
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, default_value_t = 4.0)]
        cells_per_h: f64,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Write the table as CSV to this file.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the discrepancy curve.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

/// A command result: a JSON object, and the rows used for CSV output.
pub struct Output {
    pub json: Value,
    pub table: Option<(Vec<String>, Vec<Vec<f64>>)>,
}

impl Output {
    fn scalar(json: Value) -> Self {
        Output { json, table: None }
    }

    fn with_table(json: Value, header: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Output {
            json,
            table: Some((header.iter().map(|s| s.to_string()).collect(), rows)),
        }
    }

    /// CSV text: the table if there is one, else the scalar fields as one row.
    pub fn to_csv(&self) -> String {
        let (header, rows) = match &self.table {
            Some((h, r)) => (h.clone(), r.iter().map(|row| row.iter().map(|v| fmt_num(*v)).collect()).collect()),
            None => {
                let obj = self.json.as_object().cloned().unwrap_or_default();
                let fields: Vec<(String, String)> = obj
                    .into_iter()
                    .filter_map(|(k, v)| match v {
                        Value::Number(n) => Some((k, n.to_string())),
                        Value::String(s) => Some((k, s)),
                        Value::Bool(b) => Some((k, b.to_string())),
                        _ => None,
                    })
                    .collect();
                let (h, r): (Vec<String>, Vec<String>) = fields.into_iter().unzip();
                (h, vec![r])
            }
        };
        let mut s = header.join(",");
        s.push('\n');
        for r in rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// JSON number, or the strings `"inf"`, `"-inf"`, `"nan"`.
fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or_else(|| Value::String(fmt_num(v)), Value::Number)
}

fn point_json(z: Point) -> Value {
    json!([num(z.re), num(z.im)])
}

fn parse_point(s: &str, flag: &str) -> Result<Point> {
    let v = io::parse_numbers(s, 2, flag).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Point::new(v[0], v[1]))
}

fn parse_list(s: &str, flag: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|f| f.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("{flag}: {e} in {s:?}")))?;
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Usage(format!("{flag}: expected finite numbers, got {s:?}")));
    }
    Ok(v)
}

fn dist_opts(grid: Option<usize>, tol: Option<f64>) -> Result<DistanceOpts> {
    let mut opts = DistanceOpts::default();
    if let Some(n) = grid {
        if n < 4 {
            return Err(CliError::Usage("--grid must be at least 4".into()));
        }
        opts.grid_n = n;
    }
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage("--tol must be positive".into()));
        }
        opts.tol = t;
    }
    Ok(opts)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io(path.display().to_string(), e))
}

fn polyline_json(p: &Polyline) -> Value {
    Value::Array(p.vertices().iter().map(|z| point_json(*z)).collect())
}

/// Square frame around `points`, padded, clipped to the domain's bounding box.
fn frame_around(scene: &MetricScene, points: &[Point]) -> (Point, Point) {
    let (mut lo, mut hi) = (points[0], points[0]);
    for z in points {
        lo = Point::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Point::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    let side = (hi.re - lo.re).max(hi.im - lo.im).max(1e-3) * 1.3;
    let mid = (lo + hi) / 2.0;
    let half = (0.5 * side).min(scene.domain.radius);
    (mid - Point::new(half, half), mid + Point::new(half, half))
}

pub fn execute(cmd: Command) -> Result<(Output, bool)> {
    Ok(match cmd {
        Command::Eval { scene, point, what, format } => {
            let s = io::parse_scene(&scene.scene)?;
            let z = parse_point(&point, "--point")?;
            if !s.domain.contains(z) {
                return Err(submetric::Error::Precondition("point outside the domain".into()).into());
            }
            let value = match what {
                What::Lambda => s.lambda(z),
                What::Potential => potential_eval(z, &s.measure),
                What::H => s.harmonic.h(z),
            };
            (Output::scalar(json!({ "value": num(value) })), format.csv)
        }
        Command::Length { scene, polyline, format } => {
            let s = io::parse_scene(&scene.scene)?;
            let p = io::parse_polyline(&polyline)?;
            let e = polyline_length(&s, &p)?;
            (
                Output::scalar(json!({ "length": num(e.value), "error": num(e.error), "converged": e.converged })),
                format.csv,
            )
        }
        Command::Dist { scene, from, to, grid, tol, allow_infinite, svg, format } => {
            let s = io::parse_scene(&scene.scene)?;
            let (a, b) = (parse_point(&from, "--from")?, parse_point(&to, "--to")?);
            let mut opts = dist_opts(grid, tol)?;
            opts.allow_infinite = allow_infinite;
            let r = distance(&s, a, b, &opts)?;
            if let Some(path) = svg {
                let mut pts = r.witness.vertices().to_vec();
                pts.extend(s.measure.atoms().iter().map(|a| a.pos).filter(|p| {
                    let d = (p - (a + b) / 2.0).norm();
                    d < (b - a).norm()
                }));
                let (lo, hi) = frame_around(&s, &pts);
                write_file(&path, &svg::heatmap(&s, lo, hi, 96, &[&r.witness]))?;
            }
            let rows = r.witness.vertices().iter().map(|z| vec![z.re, z.im]).collect();
            (
                Output::with_table(
                    json!({
                        "distance": num(r.value),
                        "grid_distance": num(r.grid_value),
                        "witness": polyline_json(&r.witness),
                    }),
                    &["x", "y"],
                    rows,
                ),
                format.csv,
            )
        }
        Command::Area { scene, rect, format } => {
            let s = io::parse_scene(&scene.scene)?;
            let v = io::parse_numbers(&rect, 4, "--rect").map_err(|e| CliError::Usage(e.to_string()))?;
            let e = area(&s, v[0], v[1], v[2], v[3])?;
            (
                Output::scalar(json!({ "area": num(e.value), "error": num(e.error), "converged": e.converged })),
                format.csv,
            )
        }
        Command::Curve { file, op, zeta, format } => {
            let p = io::parse_polyline(&file)?;
            let value = match op {
                CurveOp::Length => euclid_length(&p),
                CurveOp::Rotation => rotation(&p)?,
                CurveOp::Absrot => abs_rotation(&p)?,
                CurveOp::Phi => {
                    let z = zeta.ok_or_else(|| CliError::Usage("--op phi needs --zeta".into()))?;
                    angular_function(&p, parse_point(&z, "--zeta")?)?
                }
            };
            (Output::scalar(json!({ "value": num(value) })), format.csv)
        }
        Command::Turn { scene, polyline, side, format } => {
            let s = io::parse_scene(&scene.scene)?;
            let p = io::parse_polyline(&polyline)?;
            let json = match side {
                Some(SideArg::Left) => json!({ "left": num(left_turn(&s, &p)?) }),
                Some(SideArg::Right) => json!({ "right": num(right_turn(&s, &p)?) }),
                None => json!({ "left": num(left_turn(&s, &p)?), "right": num(right_turn(&s, &p)?) }),
            };
            (Output::scalar(json), format.csv)
        }
        Command::Gaussbonnet { scene, polyline, format } => {
            let s = io::parse_scene(&scene.scene)?;
            let p = io::parse_polyline(&polyline)?;
            (Output::scalar(json!({ "defect": num(gauss_bonnet_defect(&s, &p)?) })), format.csv)
        }
        Command::Excess { scene, x, y1, y2, ts, slack, oracle, format } => {
            let s = io::parse_scene(&scene.scene)?;
            let (x, y1, y2) = (parse_point(&x, "--x")?, parse_point(&y1, "--y1")?, parse_point(&y2, "--y2")?);
            let ts = parse_list(&ts, "--ts")?;
            let solver;
            let cone;
            let o: &dyn GeodesicOracle = match oracle {
                OracleArg::Solver => {
                    solver = SolverOracle::new(&s, DistanceOpts::default());
                    &solver
                }
                OracleArg::Cone => {
                    let m = &s.measure;
                    if m.atoms().len() != 1 || m.has_densities() || !s.harmonic.is_zero() {
                        return Err(CliError::Usage("--oracle cone needs a scene with exactly one atom and h = 0".into()));
                    }
                    cone = ConeSpec::new(m.atoms()[0].pos, m.atoms()[0].weight)?;
                    &cone
                }
            };
            let r = comparison_excess(&s, o, x, y1, y2, &ts, slack)?;
            let rows = r.sequence.iter().map(|(t, a)| vec![*t, *a]).collect();
            (
                Output::with_table(
                    json!({
                        "alpha0": num(r.alpha0),
                        "sequence": r.sequence.iter().map(|(t, a)| json!({ "t": num(*t), "alpha": num(*a) })).collect::<Vec<_>>(),
                        "alpha_bar": num(r.alpha_bar),
                        "omega_plus": num(r.omega_plus),
                        "excess": num(r.excess),
                        "excess_bound_holds": r.excess_bound_holds,
                    }),
                    &["t", "alpha"],
                    rows,
                ),
                format.csv,
            )
        }
        Command::Cone { omega0, op, vertex, from, to, radius, theta, format } => {
            let c = ConeSpec::new(parse_point(&vertex, "--vertex")?, omega0)?;
            let value = match op {
                ConeOp::Dist => {
                    let (Some(a), Some(b)) = (from, to) else {
                        return Err(CliError::Usage("--op dist needs --from and --to".into()));
                    };
                    cone_distance(&c, parse_point(&a, "--from")?, parse_point(&b, "--to")?)
                }
                ConeOp::Circle => {
                    let r = radius.ok_or_else(|| CliError::Usage("--op circle needs --radius".into()))?;
                    if !(r >= 0.0 && r.is_finite()) {
                        return Err(CliError::Usage("--radius must be non-negative".into()));
                    }
                    cone_circle_length(&c, r)
                }
                ConeOp::Sector => {
                    let t = theta.ok_or_else(|| CliError::Usage("--op sector needs --theta".into()))?;
                    sector_angle(&c, t)
                }
            };
            (
                Output::scalar(json!({ "value": num(value), "beta": num(c.beta()), "alpha": num(c.alpha()) })),
                format.csv,
            )
        }
        Command::Localize { scene, center, radius, segments, format } => {
            let s = io::parse_scene(&scene.scene)?;
            let z0 = parse_point(&center, "--center")?;
            let l = localize(&s, z0, radius, segments)?;
            let rows = l.psi.iter().map(|a| vec![a.pos.re, a.pos.im, a.weight]).collect();
            (
                Output::with_table(
                    json!({
                        "k": num(l.k),
                        "residual": num(l.residual),
                        "psi_atoms": l.psi.iter().map(|a| json!({ "pos": point_json(a.pos), "weight": num(a.weight) })).collect::<Vec<_>>(),
                    }),
                    &["x", "y", "weight"],
                    rows,
                ),
                format.csv,
            )
        }
        Command::Stretch { scene, center, radius, emit, format } => {
            let s = io::parse_scene(&scene.scene)?;
            let z0 = parse_point(&center, "--center")?;
            let st = stretch(&s, z0, radius)?;
            let len = circle_length(&s, z0, radius);
            let mut obj = Map::new();
            obj.insert("circle_length".into(), num(len));
            obj.insert("factor".into(), num((2.0 * std::f64::consts::PI / len).powi(2)));
            obj.insert("atom_weight".into(), num(s.measure.atom_weight_at(z0)));
            if let Some(path) = emit {
                let flat = st.flatten()?;
                let text = serde_json::to_string_pretty(&io::SceneFile::from_scene(&flat))
                    .map_err(|e| CliError::Input(e.to_string()))?;
                write_file(&path, &text)?;
                obj.insert("emitted".into(), Value::String(path.display().to_string()));
            }
            (Output::scalar(Value::Object(obj)), format.csv)
        }
        Command::Converge { scene, scales, pairs, cells_per_h, grid, tol, csv, svg } => {
            let s = io::parse_scene(&scene.scene)?;
            let scales = parse_list(&scales, "--scales")?;
            let pairs = io::parse_pairs(&pairs)?;
            let opts = dist_opts(grid, tol)?;
            let t = converge_experiment(&s, &scales, &pairs, cells_per_h, &opts)?;
            let out = Output::with_table(
                json!({
                    "rows": t.rows.iter().map(|r| json!({ "scale": num(r.scale), "discrepancy": num(r.discrepancy) })).collect::<Vec<_>>(),
                    "strictly_decreasing": t.strictly_decreasing,
                    "tail_decreasing": t.tail_decreasing,
                }),
                &["scale", "discrepancy"],
                t.rows.iter().map(|r| vec![r.scale, r.discrepancy]).collect(),
            );
            if let Some(path) = csv {
                write_file(&path, &out.to_csv())?;
            }
            if let Some(path) = svg {
                write_file(&path, &svg::convergence_curve(&t, "converge"))?;
            }
            (out, false)
        }
    })
}

/// Parses `args` (program name first), runs the command, writes the result
/// to `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))
            .and_then(|pool| pool.install(|| execute(cli.command))),
        None => execute(cli.command),
    };
    match result {
        Ok((o, csv)) => {
            let text = if csv {
                o.to_csv()
            } else {
                let mut t = serde_json::to_string_pretty(&o.json).expect("JSON values serialize");
                t.push('\n');
                t
            };
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
