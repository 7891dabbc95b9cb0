use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sqm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run(dir: &Path, cmd: &str, config: &str, extra: &[&str]) -> (i32, String, std::path::PathBuf) {
    let cfg = dir.join(format!("{cmd}-{}.json", extra.len()));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("out-{cmd}-{}", extra.join("")));
    let mut args = vec![
        cmd,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = sqm(&args);
    let text = String::from_utf8_lossy(&o.stdout).to_string() + &String::from_utf8_lossy(&o.stderr);
    (o.status.code().unwrap(), text, out)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn validate_reports_css_status() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text, out) = run(
        dir.path(),
        "validate",
        r#"{"code": {"family": "toric"}, "L": [2, 3]}"#,
        &[],
    );
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("CSS: valid"));
    assert!(json(&out.join("validate.json"))["valid"].as_bool().unwrap());
    let broken = r#"{"family": "quantum", "field": {"p": 2}, "dim": 2, "h_x": [["1+x"], ["1+y"]], "h_z": [["1+y"], ["1"]]}"#;
    let (code, text, _) = run(dir.path(), "validate", broken, &["--svg"]);
    assert_eq!(code, 1);
    assert!(text.contains("CSS: invalid"));
}

#[test]
fn params_match_the_ising_chain() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text, out) = run(
        dir.path(),
        "params",
        r#"{"code": {"family": "ising", "dim": 1}, "L": [5]}"#,
        &[],
    );
    assert_eq!(code, 0, "{text}");
    let rows = json(&out.join("params.json"));
    let r = &rows[0];
    assert_eq!(
        (
            r["n"].as_u64(),
            r["k"].as_u64(),
            r["d"].as_u64(),
            r["E"].as_u64()
        ),
        (Some(5), Some(1), Some(5), Some(2))
    );
    assert_eq!(r["d_method"], "exact");
    assert_eq!(r["E_method"], "exact");
    let csv = fs::read_to_string(out.join("params.csv")).unwrap();
    assert!(csv
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("ising,5,torus,5,1,5,exact,2,exact"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let toric = r#"{"code": {"family": "toric"}, "L": [3]}"#;
    let (code, text, _) = run(dir.path(), "params", toric, &["--budget", "5"]);
    assert_eq!(code, 2, "{text}");
    assert!(text.contains("distance failed"));
    let (code, _, _) = run(
        dir.path(),
        "params",
        r#"{"code": {"family": "toric"}, "L": [3], "colour": 1}"#,
        &[],
    );
    assert_eq!(code, 1);
    let sim = r#"{"code": {"family": "ising", "dim": 1}, "L": [4], "beta": 1.0, "trajectories": 4,
                  "decoder": {"kind": "brute-force"}}"#;
    let (code, text, _) = run(dir.path(), "simulate", sim, &[]);
    assert_eq!(code, 1);
    assert!(text.contains("seed"));
    let (code, _, _) = run(
        dir.path(),
        "params",
        r#"{"code": {"family": "ising", "dim": 1}, "L": [1]}"#,
        &[],
    );
    assert_eq!(code, 1);
    assert_eq!(sqm(&["params"]).status.code(), Some(1));
    assert_eq!(sqm(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn build_writes_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text, out) = run(
        dir.path(),
        "build",
        r#"{"code": {"family": "toric"}, "L": [3]}"#,
        &[],
    );
    assert_eq!(code, 0, "{text}");
    let hx = sqm_core::SparseFqMatrix::from_text(&fs::read_to_string(out.join("h_x.txt")).unwrap())
        .unwrap();
    let hz = sqm_core::SparseFqMatrix::from_text(&fs::read_to_string(out.join("h_z.txt")).unwrap())
        .unwrap();
    assert_eq!(hx.cols(), 18);
    assert!(hx.mul(&hz.transpose()).unwrap().is_zero());
    let spec =
        sqm_core::codes::CodeSpec::from_json(&fs::read_to_string(out.join("spec.json")).unwrap())
            .unwrap();
    assert_eq!(spec.build().unwrap().to_spec(), spec);
    let manifest = json(&out.join("manifest.json"));
    let files: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["path"].as_str().unwrap())
        .collect();
    assert!(files.contains(&"h_x.txt") && files.contains(&"spec.json"));
}

#[test]
fn fractal_and_expansion_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text, out) = run(
        dir.path(),
        "fractal",
        r#"{"f": "1+x+y", "levels": [0, 1, 2, 3]}"#,
        &[],
    );
    assert_eq!(code, 0, "{text}");
    let rows = json(&out.join("fractal.json"));
    assert_eq!(rows[3]["weight"], 27);
    assert!(rows
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["claims_hold"].as_bool().unwrap()));
    let exp = r#"{"code": {"family": "ising", "dim": 2}, "L": [8], "nu": 0.5, "w_max": 6,
                  "search": {"mode": "exhaustive", "roots": [0]}}"#;
    let (code, text, out) = run(dir.path(), "expansion", exp, &[]);
    assert_eq!(code, 0, "{text}");
    let rep = json(&out.join("expansion.json"));
    assert_eq!(rep["reports"][0][1]["lambda_min"], 4.0);
    let stoch = r#"{"code": {"family": "ising", "dim": 2}, "L": [6], "nu": 0.5, "w_max": 6,
                    "search": {"mode": "stochastic", "restarts": 2, "steps": 200}}"#;
    assert_eq!(run(dir.path(), "expansion", stoch, &[]).0, 1);
    assert_eq!(run(dir.path(), "expansion", stoch, &["--seed", "3"]).0, 0);
}

fn output_hashes(out: &Path) -> Vec<(String, String)> {
    let m = json(&out.join("manifest.json"));
    m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| {
            (
                f["path"].as_str().unwrap().to_string(),
                f["sha256"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

#[test]
fn simulate_is_reproducible_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let sim = r#"{"code": {"family": "toric"}, "L": [3], "beta": 1.5, "trajectories": 12,
                  "schedule": {"kind": "geometric", "t0": 1.0, "ratio": 2.0, "count": 6},
                  "decoder": {"kind": "lookup", "w_max": 2}, "seed": 5}"#;
    let (c1, t1, a) = run(dir.path(), "simulate", sim, &["--workers", "1"]);
    let (c2, t2, b) = run(dir.path(), "simulate", sim, &["--workers", "3", "--svg"]);
    assert_eq!((c1, c2), (0, 0), "{t1}{t2}");
    let ha = output_hashes(&a);
    let hb: Vec<_> = output_hashes(&b)
        .into_iter()
        .filter(|(p, _)| !p.ends_with(".svg"))
        .collect();
    assert_eq!(ha, hb);
    for (p, _) in &ha {
        assert_eq!(fs::read(a.join(p)).unwrap(), fs::read(b.join(p)).unwrap());
    }
    assert!(b.join("curve_x.svg").exists() && b.join("curve_z.svg").exists());
    let est = json(&a.join("estimate_x.json"));
    assert_eq!(est["trajectories"], 12);
    let records = fs::read_to_string(a.join("records_z.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 12 * 6);
    let (_, _, c) = run(dir.path(), "simulate", sim, &["--seed", "6"]);
    assert_ne!(output_hashes(&c), ha);
}

#[test]
fn small_sweep_emits_curves_and_fits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
      "codes": [{"label": "m2", "m": 2, "field": {"p": 2, "e": 2}, "code_seed": 3},
                {"label": "ising", "spec": {"family": "ising", "dim": 2}}],
      "L": [3, 4], "betas": [1.0, 2.0], "trajectories": 10,
      "decoder": {"kind": "brute-force", "budget": 65536},
      "schedule": {"kind": "geometric", "t0": 0.5, "ratio": 2.0, "count": 5},
      "seed": 1
    }"#;
    let (code, text, out) = run(dir.path(), "sweep", cfg, &["--svg"]);
    assert_eq!(code, 0, "{text}");
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["entries"].as_array().unwrap().len(), 8);
    assert_eq!(summary["fits"].as_array().unwrap().len(), 4);
    assert_eq!(
        fs::read_to_string(out.join("curves.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 8 * 5
    );
    assert_eq!(
        fs::read_to_string(out.join("fits.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 8
    );
    assert!(out.join("curves_m2_beta1.svg").exists());
    assert!(text.contains("fit m2 beta=1"));
}
