use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qubitbell"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = run(&full);
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    });
    (out.status.code().unwrap(), v)
}

fn generate(dir: &Path, name: &str, state: &str, meas: &str) -> String {
    let path = dir.join(name);
    let out = run(&["generate", state, meas, "-o", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_owned()
}

#[test]
fn analyze_singlet_is_violated() {
    let (code, v) = json(&["analyze", "singlet-zx", "chsh"]);
    assert_eq!(code, 0);
    assert_eq!(v["schema"], "qubitbell-report/1");
    assert_eq!(v["verdict"], "VIOLATED");
    assert!((v["lhs_value"].as_f64().unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["manifest"]["command"], "analyze");
    assert_eq!(v["manifest"]["seed"], 0);
}

#[test]
fn analyze_noise_is_local() {
    let (code, v) = json(&["analyze", "uniform-noise", "chsh"]);
    assert_eq!(code, 1);
    assert_eq!(v["verdict"], "LOCAL");
    assert_eq!(v["lhs_value"].as_f64().unwrap(), 0.0);
    assert_eq!(v["report"]["bell_local"], true);
}

#[test]
fn analyze_ghz_svetlichny_with_oracle() {
    let (code, v) = json(&["analyze", "ghz3-svetlichny", "svetlichny", "--oracle", "--grid", "90"]);
    assert_eq!(code, 0);
    assert_eq!(v["oracle"]["within_grid_bound"], true);
    assert_eq!(v["oracle"]["search"]["config"]["grid_resolution"], 90);
}

#[test]
fn steering_comparison() {
    let (_, v) = json(&["analyze", "singlet-zx", "chsh", "--steering"]);
    let opt = &v["steering"]["optimal"];
    assert!(opt["gap"].as_f64().unwrap().abs() < 1e-12);
    assert!((v["steering"]["computational"]["cavalcanti_lhs"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    let out = run(&["analyze", "ghz-3", "svetlichny", "--steering"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn text_and_json_carry_the_same_fields() {
    let text = String::from_utf8(run(&["bound", "svetlichny"]).stdout).unwrap();
    let (_, v) = json(&["bound", "svetlichny"]);
    for (k, val) in v.as_object().unwrap() {
        if let Some(n) = val.as_f64() {
            assert!(text.contains(&format!("{k}: {n}")), "{k} missing from:\n{text}");
        } else {
            assert!(text.contains(&format!("{k}:")), "{k} missing");
        }
    }
}

#[test]
fn bounds() {
    for (name, expected) in [("chsh", 2.0), ("svetlichny", 4.0), ("chained:3", 5.0)] {
        let (code, v) = json(&["bound", name]);
        assert_eq!(code, 0);
        assert_eq!(v["local_bound"].as_f64().unwrap(), expected, "{name}");
    }
    let (_, v) = json(&["bound", "svetlichny", "--order", "2,0,1"]);
    assert_eq!(v["local_bound"].as_f64().unwrap(), 4.0);
    let out = run(&["bound", "chained:3", "--cap", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn generate_is_idempotent_and_matches_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(dir.path(), "a.json", "singlet", "ZX");
    let b = generate(dir.path(), "b.json", "singlet", "ZX");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let stdout = run(&["generate", "singlet", "ZX"]).stdout;
    assert_eq!(stdout, fs::read(&a).unwrap());
    let (code, v) = json(&["analyze", &a, "chsh"]);
    assert_eq!(code, 0);
    assert_eq!(v["manifest"]["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn generated_werner_is_the_midpoint() {
    let dir = tempfile::tempdir().unwrap();
    let w = generate(dir.path(), "w.json", "werner:0.5", "ZX");
    let s = generate(dir.path(), "s.json", "singlet", "ZX");
    let n = generate(dir.path(), "n.json", "werner:0", "ZX");
    let members = |p: &str| {
        let v: Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
        v["members"].clone()
    };
    let (w, s, n) = (members(&w), members(&s), members(&n));
    for (key, wm) in w.as_object().unwrap() {
        let flat = |v: &Value| -> Vec<f64> {
            v.as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap().iter().flat_map(|c| c.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()))).collect()
        };
        for ((x, y), z) in flat(wm).iter().zip(flat(&s[key])).zip(flat(&n[key])) {
            assert!((x - 0.5 * (y + z)).abs() < 1e-12);
        }
    }
}

#[test]
fn generated_ghz_zz() {
    let dir = tempfile::tempdir().unwrap();
    let g = generate(dir.path(), "g.json", "ghz3", "ZZ");
    let v: Value = serde_json::from_str(&fs::read_to_string(&g).unwrap()).unwrap();
    let m = &v["members"];
    let re = |k: &str, i: usize| m[k][i][i][0].as_f64().unwrap();
    assert!((re("b=00|y=00", 0) - 0.5).abs() < 1e-12);
    assert!((re("b=11|y=00", 1) - 0.5).abs() < 1e-12);
    assert!(re("b=01|y=00", 0).abs() < 1e-12 && re("b=10|y=00", 1).abs() < 1e-12);
    let (code, _) = json(&["validate", &g, "--strict"]);
    assert_eq!(code, 0);
}

#[test]
fn validate_reports_defects() {
    let dir = tempfile::tempdir().unwrap();
    let good = generate(dir.path(), "s.json", "singlet", "ZX");
    let (code, v) = json(&["validate", &good]);
    assert_eq!(code, 0);
    assert_eq!(v["status"], "valid");

    // Push σ(b=0|y=0) below zero.
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&good).unwrap()).unwrap();
    doc["members"]["b=0|y=0"][0][0][0] = Value::from(-0.05);
    doc["members"]["b=1|y=0"][0][0][0] = Value::from(0.55);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, serde_json::to_string(&doc).unwrap()).unwrap();
    let (code, v) = json(&["validate", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    let msg = v["findings"][0]["message"].as_str().unwrap();
    assert!(msg.contains("b=0") && msg.contains("y=0"), "{msg}");
    assert_eq!(run(&["analyze", bad.to_str().unwrap(), "chsh"]).status.code(), Some(2));

    doc["shape"]["inputs_per_party"] = Value::from(vec![3]);
    fs::write(&bad, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inequality_files_and_shape_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chsh.json");
    let doc = serde_json::json!({
        "name": "my-chsh",
        "shape": {"untrusted_parties": 1, "inputs_per_party": [2], "outputs_per_party": [2], "trusted_inputs": 2, "trusted_outputs": 2},
        "coefficients": (0..16).map(|i| {
            let (a, b, x, y) = (i >> 3 & 1, i >> 2 & 1, i >> 1 & 1, i & 1);
            if (a + b + x * y) % 2 == 0 { 1.0 } else { -1.0 }
        }).collect::<Vec<f64>>(),
        "local_bound": 2.0,
    });
    fs::write(&path, doc.to_string()).unwrap();
    let (code, v) = json(&["analyze", "singlet-zx", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["report"]["guarantee"], "achievability-only");
    assert!(v["manifest"]["inputs"][1]["sha256"].is_string());
    assert_eq!(run(&["analyze", "singlet-zx", "svetlichny"]).status.code(), Some(2));
}

#[test]
fn global_flags() {
    let (_, v) = json(&["--tolerance", "tie=1e-6", "--seed", "9", "analyze", "werner-zx:0.7071067811865476", "chsh"]);
    assert_eq!(v["manifest"]["tolerances"]["tie"].as_f64().unwrap(), 1e-6);
    assert_eq!(v["manifest"]["seed"], 9);
    assert_eq!(v["verdict"], "LOCAL (marginal)");
    assert_eq!(run(&["--tolerance", "bogus=1", "bound", "chsh"]).status.code(), Some(2));
    assert_eq!(run(&["analyze"]).status.code(), Some(2));
}

#[test]
fn well_behaved_search_from_cli() {
    let (_, v) = json(&["analyze", "singlet-zx", "chsh", "--well-behaved", "20"]);
    assert_eq!(v["well_behaved"]["summary"], "no counterexample found in 20 trials");
}
