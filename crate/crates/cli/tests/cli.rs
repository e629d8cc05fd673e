use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_spheredyn");

fn data(name: &str) -> String {
    format!("{}/../../data/systems/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn write_system(name: &str, matrix: Value, offset: Value) -> String {
    let dim = offset.as_array().unwrap().len();
    let path = tmp(name);
    fs::write(&path, json!({ "dim": dim, "matrix": matrix, "offset": offset }).to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert!(stdout(&run(&["--help"])).contains("Exit codes"));
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["classify"])), 1);
    assert_eq!(code(&run(&["certify", "--mode", "sideways", "-i", &data("identity.json")])), 1);
}

#[test]
fn input_errors_exit_one() {
    let bad = tmp("malformed.json");
    fs::write(&bad, "{\"dim\": 2, \"matrix\":").unwrap();
    assert_eq!(code(&run(&["classify", "-i", bad.to_str().unwrap()])), 1);
    assert_eq!(code(&run(&["classify", "-i", "/nonexistent/system.json"])), 1);
    let singular = write_system("singular.json", json!([[1.0, 2.0], [2.0, 4.0]]), json!([0.0, 0.1]));
    assert_eq!(code(&run(&["classify", "-i", &singular])), 1);
    let out = run(&["orbit", "-i", &data("identity.json"), "--point", "0,0", "-n", "3"]);
    assert_eq!(code(&out), 1);
    let out = run(&["orbit", "-i", &data("identity.json"), "--point", "1,0,0", "-n", "3"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn homeomorphism_violations_exit_two() {
    let big = write_system("big_offset.json", json!([[1.0, 0.0], [0.0, 1.0]]), json!([0.0, 2.0]));
    assert_eq!(code(&run(&["classify", "-i", &big])), 0);
    assert_eq!(code(&run(&["classify", "-i", &big, "--require-homeo"])), 2);
    assert_eq!(code(&run(&["certify", "--mode", "nonexpansive", "-i", &big])), 2);
    assert_eq!(code(&run(&["orbit", "-i", &big, "--point", "1,0", "-n", "-2"])), 2);
    assert_eq!(code(&run(&["orbit", "-i", &big, "--point", "1,0", "-n", "2"])), 0);
}

#[test]
fn classify_reports_certification() {
    let out = run(&["classify", "-i", &data("identity.json")]);
    assert_eq!(code(&out), 0);
    let r: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(r["homeo_certified"], true);
    assert!((r["inverse_offset_norm"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(r["fixed_points"].as_array().unwrap().len(), 2);

    let path = tmp("classify_out.json");
    assert_eq!(code(&run(&["classify", "-i", &data("involution.json"), "-o", path.to_str().unwrap()])), 0);
    let r: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(r["involution"]["is_involution"], true);
    assert_eq!(r["distality"]["verdict"], "Distal");
}

#[test]
fn orbit_zero_steps_is_the_start() {
    let out = run(&["orbit", "-i", &data("identity.json"), "--point", "3,4", "-n", "0"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "index,x1,x2");
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 0.0);
    assert!((rows[0][1] - 0.6).abs() < 1e-15 && (rows[0][2] - 0.8).abs() < 1e-15);
}

#[test]
fn forward_orbit_approaches_the_attracting_fixed_point() {
    let (s, c) = (PI / 6.0).sin_cos();
    let alpha = 0.6;
    let sys = write_system("rot_pi6.json", json!([[c, -s], [s, c]]), json!([0.0, alpha]));
    let out = run(&["orbit", "-i", &sys, "--point", "1,0", "-n", "50"]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 51);
    // Attracting fixed point in the frame a = (0, α).
    let q = [-s / alpha, (alpha * alpha - s * s).sqrt() / alpha];
    let last = rows.last().unwrap();
    assert_eq!(last[0], 50.0);
    assert!((last[1] - q[0]).hypot(last[2] - q[1]) < 1e-4);
}

#[test]
fn backward_orbit_has_every_index() {
    let out = run(&["orbit", "-i", &data("rotation_pi3.json"), "--point", "0,1", "-n", "-10"]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 11);
    let idx: Vec<i64> = rows.iter().map(|r| r[0] as i64).collect();
    assert_eq!(idx, (-10..=0).collect::<Vec<_>>());
    for r in &rows {
        assert!((r[1].hypot(r[2]) - 1.0).abs() < 1e-12);
    }

    let json_out = run(&["orbit", "-i", &data("rotation_pi3.json"), "--point", "0,1", "-n", "-10", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&json_out)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 11);
    assert_eq!(v[0]["index"], -10);
}

#[test]
fn sweep_writes_csv_and_svg() {
    let svg = tmp("phase.svg");
    let out = run(&["sweep", "--theta", "0:pi:pi/4", "--alpha", "0.25:0.75:0.25", "--svg", svg.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "theta,alpha,fixed_count,period2_count,boundary");
    let lines: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(lines.len(), 5 * 3);
    // θ = 0 always has two fixed points; θ = π never has any.
    assert!(lines[..3].iter().all(|l| l.split(',').nth(2) == Some("2")));
    assert!(lines[12..].iter().all(|l| l.split(',').nth(2) == Some("0")));
    let picture = fs::read_to_string(svg).unwrap();
    assert!(picture.starts_with("<svg") && picture.trim_end().ends_with("</svg>"));

    let again = run(&["sweep", "--theta", "0:pi:pi/4", "--alpha", "0.25:0.75:0.25"]);
    assert_eq!(stdout(&again), text);
    assert_eq!(code(&run(&["sweep", "--theta", "0", "--alpha", "1.5"])), 1);
    assert_eq!(code(&run(&["sweep", "--theta", "0:1", "--alpha", "0.5"])), 1);
}

#[test]
fn certify_nondistal_examples() {
    let out = run(&["certify", "--mode", "nondistal", "-i", &data("rotation_pi3.json")]);
    assert_eq!(code(&out), 3);
    assert_eq!(code(&run(&["certify", "--mode", "nondistal", "-i", &data("involution.json")])), 3);

    let path = tmp("fixed_point_witness.json");
    let out = run(&["certify", "--mode", "nondistal", "-i", &data("scaled_identity.json"), "-o", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let w: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(w["kind"], "FixedPoint");
    let out = run(&["verify", "-i", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let r: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(r["pass"], true);

    let pair = tmp("pair_witness.json");
    let out = run(&["certify", "--mode", "nondistal", "--pair", "-i", &data("identity.json"), "-o", pair.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(code(&run(&["verify", "-i", pair.to_str().unwrap()])), 0);
}

#[test]
fn certify_nonexpansive_on_a_random_system() {
    let sys = write_system(
        "random4.json",
        json!([
            [0.9, -0.3, 0.2, 0.1],
            [0.4, 1.1, -0.2, 0.0],
            [0.0, 0.3, 0.7, -0.5],
            [0.2, 0.0, 0.6, 1.3]
        ]),
        json!([0.05, -0.1, 0.02, 0.08]),
    );
    let path = tmp("nonexpansive_witness.json");
    let out = run(&["certify", "--mode", "nonexpansive", "-i", &sys, "--delta", "0.01", "-o", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let w: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(w["kind"], "NonExpansivePair");
    assert_eq!(code(&run(&["verify", "-i", path.to_str().unwrap()])), 0);
}

#[test]
fn tampered_witness_fails_verification() {
    let path = tmp("tampered.json");
    let out = run(&["certify", "--mode", "nondistal", "-i", &data("scaled_identity.json"), "-o", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let mut w: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    w["data"]["point"] = json!([1.0, 0.0]);
    fs::write(&path, w.to_string()).unwrap();
    let out = run(&["verify", "-i", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let r: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(r["pass"], false);
}

#[test]
fn product_actions() {
    let (id, rot) = (data("identity.json"), data("rotation_pi3.json"));
    let out = run(&["product", "-i", &rot, "-i", &id]);
    assert_eq!(code(&out), 0);
    let r: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(r["factors"].as_array().unwrap().len(), 2);
    assert_eq!(r["distality"]["verdict"], "NonDistal");

    let out = run(&["product", "-i", &rot, "-i", &id, "--action", "apply", "--point", "1,0,0,1", "-n", "3"]);
    assert_eq!(code(&out), 0);
    let r: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(r["point"].as_array().unwrap().len(), 4);
    // The identity factor fixes (0, 1).
    assert!((r["components"][1][1].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(code(&run(&["product", "-i", &rot, "-i", &id, "--action", "apply", "--point", "1,0"])), 1);

    let path = tmp("product_witness.json");
    let out = run(&["product", "-i", &rot, "-i", &id, "--action", "certify", "--mode", "nonexpansive", "-o",
        path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(code(&run(&["verify", "-i", path.to_str().unwrap()])), 0);

    let inv = data("involution.json");
    let out = run(&["product", "-i", &inv, "-i", &inv, "--action", "certify"]);
    assert_eq!(code(&out), 3);
}
