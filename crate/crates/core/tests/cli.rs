use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const CHERRY: &str = r#"{"alpha":"golden","cells":[{"seed":[0.5,0.5],"kind":"backward","width":0.01,"length":0.03}]}"#;
const DENJOY: &str = r#"{"kind":"denjoy","alpha":"golden","weights":{"rule":"inverse_square","mass":0.3,"shift":4.0},"truncation":512}"#;

fn rotorlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotorlab"))
        .current_dir(dir)
        .env("ROTORLAB_THREADS", "2")
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", stderr(o));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cherry.json"), CHERRY).unwrap();
    fs::write(dir.path().join("denjoy.json"), DENJOY).unwrap();
    dir
}

#[test]
fn malformed_specs_exit_two_with_the_field_path() {
    let dir = setup();
    let p = dir.path();
    fs::write(p.join("bad_type.json"), r#"{"kind": "rotnum", "map": "denjoy.json", "n": "many"}"#).unwrap();
    let o = rotorlab(p, &["run", "bad_type.json"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("`n`") && err.contains("line 1"), "{err}");

    fs::write(p.join("nested.json"), "{\"kind\": \"thm-a\",\n \"map\": {\"kind\": \"flat_spot\", \"omega\": \"x\"}}").unwrap();
    let err = stderr(&rotorlab(p, &["run", "nested.json"]));
    assert!(err.contains("map.omega"), "{err}");

    fs::write(p.join("syntax.json"), "{\n  \"kind\": \"cfrac\",\n  \"alpha\": \"golden\",,\n}").unwrap();
    let o = rotorlab(p, &["run", "syntax.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    fs::write(p.join("unknown.json"), r#"{"kind": "cfrac", "alpha": "golden", "dpeth": 3}"#).unwrap();
    let o = rotorlab(p, &["run", "unknown.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dpeth"));

    fs::write(p.join("kind.json"), r#"{"kind": "nope"}"#).unwrap();
    assert_eq!(rotorlab(p, &["run", "kind.json"]).status.code(), Some(2));
    assert_eq!(rotorlab(p, &["rotnum"]).status.code(), Some(2));
}

#[test]
fn computation_errors_exit_one() {
    let dir = setup();
    let p = dir.path();
    fs::write(p.join("heavy.json"), DENJOY.replace("0.3", "1.5")).unwrap();
    let o = rotorlab(p, &["map-var", "heavy.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("mass"), "{}", stderr(&o));
    assert_eq!(rotorlab(p, &["map-eval", "missing.json", "--x", "0.1"]).status.code(), Some(1));
}

#[test]
fn spec_files_and_flags_agree() {
    let dir = setup();
    let p = dir.path();
    fs::write(p.join("spec.json"), r#"{"kind": "cfrac", "alpha": "silver", "depth": 5}"#).unwrap();
    let a = json(&rotorlab(p, &["run", "spec.json"]));
    let b = json(&rotorlab(p, &["cfrac", "silver", "--depth", "5"]));
    assert_eq!(a, b);
    assert_eq!(a["partial_quotients"], serde_json::json!([2, 2, 2, 2, 2]));
}

#[test]
fn seeded_runs_are_reproducible() {
    let dir = setup();
    let p = dir.path();
    let portrait = |seed: &str, out: &str| {
        let o = rotorlab(
            p,
            &["portrait", "cherry.json", "--orbits", "6", "--t", "4", "--seed", seed, "--out-dir", out],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        ["portrait.json", "orbits.csv", "portrait.svg"].map(|f| fs::read(p.join(out).join(f)).unwrap())
    };
    let a = portrait("7", "a");
    let b = portrait("7", "b");
    let c = portrait("8", "c");
    assert_eq!(a, b);
    assert_ne!(a[1], c[1]);

    let distortion = |seed: &str| {
        rotorlab(p, &["distortion-check", "denjoy.json", "--samples", "200", "--k", "50", "--seed", seed]).stdout
    };
    assert_eq!(distortion("11"), distortion("11"));
    assert_ne!(distortion("11"), distortion("12"));
}

#[test]
fn out_dir_holds_a_manifest_and_well_formed_files() {
    let dir = setup();
    let p = dir.path();
    let o = rotorlab(p, &["portrait", "cherry.json", "--orbits", "4", "--t", "3", "--out-dir", "out", "-q"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let out = p.join("out");
    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["kind"], "portrait");
    assert_eq!(manifest["tool"], "rotorlab");
    assert_eq!(manifest["threads"], 2);
    let files: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(files, ["portrait.json", "orbits.csv", "portrait.svg"]);
    for f in &files {
        assert!(out.join(f).exists());
    }
    let csv = fs::read_to_string(out.join("orbits.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(header.len() >= 3);
    assert!(lines.all(|l| l.split(',').count() == header.len()));

    let svg = fs::read_to_string(out.join("portrait.svg")).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert!(svg.contains(r#"width="1024""#) && svg.contains(r#"height="1024""#));
    assert!(svg.trim_end().ends_with("</svg>"));
    // every element opened is closed
    let opens = svg.matches("<polyline").count() + svg.matches("<circle").count() + svg.matches("<rect").count();
    assert_eq!(opens, svg.matches("/>").count());
    // no leftover temporary files
    assert!(fs::read_dir(&out).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn dichotomy_on_a_denjoy_map() {
    let dir = setup();
    let p = dir.path();
    let v = json(&rotorlab(p, &["thm-a", "denjoy.json", "--horizon", "300"]));
    assert!(rotorlab(p, &["thm-a", "denjoy.json", "--horizon", "300", "--out-dir", "t"]).status.success());
    assert!(v.get("key_inequality").is_some(), "{v}");
    let csv = fs::read_to_string(p.join("t").join("lengths.csv")).unwrap();
    assert!(csv.starts_with("scan,k,length\n"));
    let csv_out = rotorlab(p, &["thm-a", "denjoy.json", "--horizon", "300", "--format", "csv"]);
    assert_eq!(String::from_utf8(csv_out.stdout).unwrap(), csv);
}

#[test]
fn closing_a_cherry_orbit() {
    let dir = setup();
    let p = dir.path();
    let o = rotorlab(
        p,
        &["close", "cherry.json", "--tune", "--n-targets", "3", "--loop-x0", "0", "--svg", "--out-dir", "c"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let c = p.join("c");
    let v: Value = serde_json::from_slice(&fs::read(c.join("close.json")).unwrap()).unwrap();
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 3, "{v}");
    let a: Vec<f64> = entries.iter().map(|e| e["a_n"].as_f64().unwrap()).collect();
    assert!(a.windows(2).all(|w| w[1] < w[0]), "{a:?}");
    for e in entries {
        assert!(e["closure_residual"].as_f64().unwrap() < 1e-6);
        assert_eq!(e["homology"], serde_json::json!([e["p_n"], e["q_n"]]));
    }
    for f in ["close.json", "closing.csv", "closing.svg", "field.json", "manifest.json"] {
        assert!(c.join(f).exists(), "{f}");
    }
}
