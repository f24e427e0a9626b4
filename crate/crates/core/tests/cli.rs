use std::fs;
use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn cuntz(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cuntz")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn scratch(name: &str, files: &[(&str, &str)]) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cuntz-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    for (f, body) in files {
        fs::write(dir.join(f), body).unwrap();
    }
    dir
}

fn s(p: PathBuf) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn eval_examples() {
    let (code, out, _) = cuntz(&["eval", "--ww", "M(2)", "O2"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("{0,∞}\n"));
    let (code, out, _) = cuntz(&["eval", "--w", "C", "C"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("ℕ₀\n"));
    let (code, out, _) = cuntz(&["--format", "json", "eval", "--ww", "CX(a,b,c)", "C"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["value"]["kind"], "mf");
    assert_eq!(v["value"]["space"]["points"].as_array().unwrap().len(), 3);
    assert!(v["trace"].as_array().unwrap().iter().all(|s| s["anchor"].as_str().is_some_and(|a| !a.is_empty())));
}

#[test]
fn eval_unknown_and_parse_errors() {
    let (code, out, _) = cuntz(&["eval", "--w", "CX(a,b)", "Z"]);
    assert_eq!(code, 2);
    assert!(out.contains("W(CX(a,b), Z)"));
    let (code, _, err) = cuntz(&["eval", "--w", "M(2", "C"]);
    assert_eq!(code, 1);
    assert!(err.contains("byte 3"), "{err}");
}

#[test]
fn compare_verdicts() {
    let dir = scratch(
        "compare",
        &[
            ("space.json", r#"{"kind":"discrete","points":["p","q"]}"#),
            ("nu.json", r#"{"schema":"cuntz/1","atoms":[{"at":"p","mult":2}]}"#),
            ("mu.json", r#"{"schema":"cuntz/1","atoms":[{"at":"p","mult":3},{"at":"q","mult":"inf"}]}"#),
            ("p1.json", r#"{"schema":"cuntz/1","atoms":[{"at":"p","mult":1}]}"#),
            ("q1.json", r#"{"schema":"cuntz/1","atoms":[{"at":"q","mult":1}]}"#),
            ("bad.json", r#"{"schema":"cuntz/9","atoms":[]}"#),
        ],
    );
    let sp = s(dir.join("space.json"));
    let run = |a: &str, b: &str| cuntz(&["compare", "--space", &sp, &s(dir.join(a)), &s(dir.join(b))]);
    assert_eq!(run("nu.json", "mu.json"), (0, "leq\n".into(), String::new()));
    assert_eq!(run("mu.json", "nu.json").1, "geq\n");
    assert_eq!(run("nu.json", "nu.json").1, "equal\n");
    assert_eq!(run("p1.json", "q1.json").1, "incomparable\n");
    assert_eq!(run("bad.json", "nu.json").0, 1);
}

#[test]
fn classify_exit_codes() {
    let (code, out, _) = cuntz(&["classify", "UHF(2:inf)", "UHF(3:inf)"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("NotIsomorphic"));
    let (code, out, _) = cuntz(&["classify", "M(4)", "M(4)"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("Isomorphic"));
    assert_eq!(cuntz(&["classify", "CAR", "Z"]).0, 3);
    assert_eq!(cuntz(&["classify", "CAR", "Y"]).0, 1);
}

#[test]
fn oz_subcommands() {
    let dir = scratch(
        "oz",
        &[
            ("phi.json", r#"{"schema":"cuntz/1","domain":[1],"target_dim":1,"mult":[1],"blocks":[[["1"]]]}"#),
            (
                "psi.json",
                r#"{"schema":"cuntz/1","domain":[1],"target_dim":2,"mult":[2],"blocks":[[["1","0"],["0","1/2"]]]}"#,
            ),
            ("broken.json", r#"{"schema":"cuntz/1","domain":[1]}"#),
        ],
    );
    let (phi, psi) = (s(dir.join("phi.json")), s(dir.join("psi.json")));
    let (code, out, _) = cuntz(&["--format", "json", "oz", "compare", &phi, &psi]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "leq");
    assert!(v["residual"].as_f64().unwrap() < 1e-6);
    let (code, out, _) = cuntz(&["oz", "compare", &psi, &phi]);
    assert_eq!(code, 4);
    assert!(out.starts_with("not_leq"));
    let (code, out, _) = cuntz(&["oz", "eps", &psi, "--eps", "1/2"]);
    assert_eq!(code, 0);
    let cut: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(cut["blocks"][0][0][0], "1/2");
    assert_eq!(cut["blocks"][0][1][1], "0");
    let (code, out, _) = cuntz(&["oz", "check", &psi, "--trials", "100", "--seed", "7"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("order zero: pass"));
    assert_eq!(cuntz(&["oz", "witness", &phi, &psi]).0, 0);
    assert_eq!(cuntz(&["oz", "check", &s(dir.join("broken.json"))]).0, 1);
    assert_eq!(cuntz(&["oz", "eps", &psi, "--eps", "3/2"]).0, 1);
}

#[test]
fn axioms_reports() {
    let json = |args: &[&str]| -> Value {
        let mut full = vec!["--format", "json", "axioms", "extnat"];
        full.extend_from_slice(args);
        let (code, out, _) = cuntz(&full);
        assert_eq!(code, 0);
        serde_json::from_str(&out).unwrap()
    };
    assert_eq!(json(&["--bound", "20"])["all_pass"], true);
    assert_eq!(json(&["--bound", "0"])["all_pass"], true);
    let fault = json(&["--bound", "20", "--inject-fault"]);
    assert_eq!(fault["all_pass"], false);
    let wo2 = fault["wo"].as_array().unwrap().iter().find(|r| r["axiom"] == "WO.2").unwrap();
    assert_eq!(wo2["witness"][0], "inf");
    assert_eq!(cuntz(&["axioms", "extnat", "--bound", "65"]).0, 1);
}

#[test]
fn output_is_deterministic() {
    for args in [
        vec!["--format", "json", "eval", "--ww", "F(2,3,5)", "Oinf"],
        vec!["axioms", "extnat", "--bound", "12"],
        vec!["classify", "CX(a,b,c)", "CX(p,q)"],
    ] {
        assert_eq!(cuntz(&args), cuntz(&args));
    }
}
