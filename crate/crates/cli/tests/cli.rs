use serde_json::Value;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_submetric")).args(args).output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn cone_distance_through_solver() {
    let v = json(&["dist", "--scene", &fixture("cone_pi.json"), "--from", "0,0", "--to", "1,0"]);
    assert!((f(&v["distance"]) / 2.0 - 1.0).abs() < 5e-3, "{v}");
    assert!(v["witness"].as_array().unwrap().len() >= 2);
}

#[test]
fn square_gauss_bonnet() {
    let v = json(&["gaussbonnet", "--scene", &fixture("square_atom.json"), "--polyline", &fixture("square.csv")]);
    assert!(f(&v["defect"]).abs() < 1e-10, "{v}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = run(&["dist", "--scene", &fixture("cone_pi.json"), "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--scene", &fixture("cone_pi.json"), "--point", "1"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one() {
    let o = run(&["eval", "--scene", &fixture("cone_pi.json"), "--point", "5,0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["eval", "--scene", &fixture("bad_key.json"), "--point", "0,0"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad_key.json:3:") && err.contains("extra"), "{err}");
    let o = run(&["eval", "--scene", &fixture("missing.json"), "--point", "0,0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn eval_and_cone_closed_forms() {
    let v = json(&["eval", "--scene", &fixture("cone_pi.json"), "--point", "0.5,0"]);
    assert!((f(&v["value"]) - 2.0).abs() < 1e-12);
    let v = json(&["eval", "--scene", &fixture("cone_pi.json"), "--point", "0,0"]);
    assert_eq!(v["value"], "inf");
    let v = json(&["cone", "--omega0", "3.141592653589793", "--op", "circle", "--radius", "4"]);
    assert!((f(&v["value"]) - 2.0 * PI * 2.0).abs() < 1e-12);
    let v = json(&["cone", "--omega0", "-1.5", "--op", "dist", "--from", "1,0", "--to", "-1,0"]);
    assert!(f(&v["value"]) > 0.0);
    let o = run(&["cone", "--omega0", "7", "--op", "sector", "--theta", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn curve_ops_and_csv() {
    let sq = fixture("square.csv");
    assert!((f(&json(&["curve", "--file", &sq, "--op", "length"])["value"]) - 8.0).abs() < 1e-12);
    assert!((f(&json(&["curve", "--file", &sq, "--op", "rotation"])["value"]) - 2.0 * PI).abs() < 1e-12);
    let o = run(&["curve", "--file", &sq, "--op", "phi"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["curve", "--file", &sq, "--op", "absrot", "--csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("value"));
    assert!((lines.next().unwrap().parse::<f64>().unwrap() - 2.0 * PI).abs() < 1e-12);
}

#[test]
fn turns_of_a_square_around_an_atom() {
    let s = fixture("square_atom.json");
    let p = fixture("square.csv");
    let v = json(&["turn", "--scene", &s, "--polyline", &p]);
    let l = json(&["turn", "--scene", &s, "--polyline", &p, "--side", "left"]);
    assert_eq!(v["left"], l["left"]);
    // the interior holds the atom of weight 1.5 only; no mass sits on the curve
    assert!((f(&v["left"]) - (2.0 * PI - 1.5)).abs() < 1e-10, "{v}");
    assert!((f(&v["left"]) + f(&v["right"])).abs() < 1e-10, "{v}");
}

#[test]
fn length_area_localize() {
    let s = fixture("square_atom.json");
    let v = json(&["length", "--scene", &fixture("cone_pi.json"), "--polyline", &fixture("square.csv")]);
    assert!(f(&v["length"]) > 0.0);
    let v = json(&["area", "--scene", &s, "--rect", "-0.5,-0.5,0.5,0.5"]);
    assert!(f(&v["area"]) > 0.0 && v["converged"] == true);
    let v = json(&["localize", "--scene", &s, "--center", "0,0", "--radius", "0.8", "--segments", "128"]);
    assert!(f(&v["residual"]) < 1e-4, "{v}");
    assert_eq!(v["psi_atoms"].as_array().unwrap().len(), 128);
}

#[test]
fn excess_with_cone_oracle() {
    let v = json(&[
        "excess", "--scene", &fixture("cone_pi.json"), "--x", "0.8,0.1", "--y1", "-0.5,0.7", "--y2", "-0.4,-0.8",
        "--oracle", "cone",
    ]);
    assert!(f(&v["omega_plus"]) > 3.0, "{v}");
    assert_eq!(v["excess_bound_holds"], true);
    let o = run(&[
        "excess", "--scene", &fixture("square_atom.json"), "--x", "0,0", "--y1", "1,0", "--y2", "0,1", "--oracle", "cone",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stretch_emits_a_parsable_scene() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s2.json");
    let out_s = out.display().to_string();
    let v = json(&["stretch", "--scene", &fixture("square_atom.json"), "--center", "0.2,-0.1", "--radius", "0.5", "--emit", &out_s]);
    assert_eq!(f(&v["atom_weight"]), 1.5);
    // the stretched unit circle has length 2π
    let unit = dir.path().join("unit.csv");
    let pts: String = (0..2048)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / 2048.0;
            format!("{},{}\n", t.cos(), t.sin())
        })
        .collect();
    std::fs::write(&unit, format!("# closed=true\n{pts}")).unwrap();
    let l = json(&["length", "--scene", &out_s, "--polyline", &unit.display().to_string()]);
    assert!((f(&l["length"]) - 2.0 * PI).abs() < 1e-3, "{l}");
}

#[test]
fn dist_svg_and_converge_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("w.svg");
    let v = json(&[
        "dist", "--scene", &fixture("negative_cone.json"), "--from", "-1,0.3", "--to", "1,0.3", "--svg",
        &svg.display().to_string(),
    ]);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.contains("<svg") && text.contains("<polyline"));
    // the negative cone bends the geodesic towards the vertex
    let ys: Vec<f64> = v["witness"].as_array().unwrap().iter().map(|p| f(&p[1])).collect();
    assert!(ys.iter().cloned().fold(f64::INFINITY, f64::min) < 0.2, "{v}");

    let csv = dir.path().join("t.csv");
    let curve = dir.path().join("c.svg");
    let v = json(&[
        "--threads", "1", "converge", "--scene", &fixture("cone_pi.json"), "--scales", "0.4,0.2", "--pairs",
        &fixture("pairs.csv"), "--csv", &csv.display().to_string(), "--svg", &curve.display().to_string(),
    ]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("scale,discrepancy\n"));
    assert_eq!(table.lines().count(), 3);
    assert!(std::fs::read_to_string(&curve).unwrap().contains("<circle"));
}

#[test]
fn output_is_reproducible() {
    let args = ["dist", "--scene", &fixture("square_atom.json"), "--from", "-1,0.5", "--to", "1.2,-0.4"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}
