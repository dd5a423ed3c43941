//! Runs a JSON experiment spec in-process, as `rotorlab run` does.

use rotorlab::cli::{run, ExperimentSpec};

fn main() {
    let text = r#"{
        "kind": "thm-a",
        "map": {"kind": "cherry_return", "alpha": "golden", "plateaus": [{"seed": 0.1, "mass": 0.2}]},
        "horizon": 500,
        "seed": 3
    }"#;
    let spec = ExperimentSpec::parse(text, "inline").unwrap();
    let out = run(&spec).unwrap();
    println!("{}", serde_json::to_string_pretty(&out.artifacts.result["key_inequality"]).unwrap());
    println!("first failure: {}", out.artifacts.result["first_failure"]);
    println!("normalized spec:\n{}", spec.to_json());

    match ExperimentSpec::parse(r#"{"kind": "thm-a", "map": "m.json", "horizon": -1}"#, "inline") {
        Err(e) => println!("rejected: {e} (exit {})", e.exit_code()),
        Ok(_) => unreachable!(),
    }
}
