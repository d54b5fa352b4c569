use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use dispersion_lab::cli::journal;

fn symbol(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("symbols").join(format!("{name}.sym"))
}

fn run(sym: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dispersion-lab"))
        .arg("--symbol")
        .arg(sym)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(code(&run(&symbol("quartic"), out, &["analyze"])), 0);
    assert_eq!(code(&run(&symbol("saddle"), out, &["analyze"])), 3);

    let malformed = out.join("broken.sym");
    fs::write(&malformed, "n: 1\nname: broken\nterms: [{exp: [4], coef: }\n").unwrap();
    let o = run(&malformed, out, &["analyze"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));

    let degenerate = out.join("degenerate.sym");
    fs::write(&degenerate, "{n: 2, name: degenerate, terms: [{exp: [4, 0], coef: 1.0}, {exp: [0, 4], coef: -1.0}]}\n").unwrap();
    assert_eq!(code(&run(&degenerate, out, &["analyze"])), 2);

    assert_eq!(code(&run(&symbol("quartic"), out, &["eval", "--t", "0"])), 2);
    assert_eq!(code(&run(&symbol("quartic"), out, &["--tol", "-1", "eval", "--t", "1"])), 2);
    assert_eq!(code(&run(&symbol("quartic"), out, &["--no-such-flag", "analyze"])), 1);
    assert_eq!(code(&run(&out.join("missing.sym"), out, &["analyze"])), 4);

    let empty = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&symbol("quartic"), empty.path(), &["verify", "--target", "I"])), 4);
    assert_eq!(code(&run(&symbol("quartic"), empty.path(), &["report", "--target", "I1"])), 4);
}

#[test]
fn eval_documents_match_oracles() {
    let dir = tempfile::tempdir().unwrap();
    for method in ["partition", "mollified"] {
        let o = run(&symbol("free"), dir.path(), &["--method", method, "eval", "--t", "2", "--x=-3"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let doc = read_json(&dir.path().join("eval.json"));
        let mag = doc["magnitude"].as_f64().unwrap();
        assert!((mag - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-5, "{method}: {mag}");
    }
    let o = run(&symbol("quartic"), dir.path(), &["eval", "--t", "1"]);
    assert_eq!(code(&o), 0);
    let mag = read_json(&dir.path().join("eval.json"))["magnitude"].as_f64().unwrap();
    let want = 2.0 * statrs::function::gamma::gamma(1.25);
    assert!((mag - want).abs() < 1e-6 * want);
}

#[test]
fn free_symbol_pipeline_is_deterministic_and_journaled() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let steps: [&[&str]; 6] = [
        &["analyze"],
        &["scan", "--target", "I"],
        &["scan", "--target", "I1"],
        &["verify", "--target", "I"],
        &["verify", "--target", "I1"],
        &["report", "--target", "I"],
    ];
    for dir in [a.path(), b.path()] {
        for args in steps {
            let o = run(&symbol("free"), dir, args);
            assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        }
    }
    for name in ["analysis.json", "scan_I.json", "scan_I1.json", "verdict_theorem1.json", "verdict_theorem2.json", "report_I.tsv", "comparison.tsv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    for name in ["verdict_theorem1.json", "verdict_theorem2.json"] {
        assert_eq!(read_json(&a.path().join(name))["verdict"]["pass"], Value::Bool(true), "{name}");
    }
    let tsv = fs::read_to_string(a.path().join("scan_I.tsv")).unwrap();
    assert!(tsv.lines().take(8).all(|l| l.starts_with('#')));
    assert!(tsv.contains("# config_hash: "));

    assert_eq!(journal::read(a.path()).unwrap().len(), steps.len());
    assert!(journal::verify(a.path()).unwrap().is_empty());
    fs::write(a.path().join("scan_I.tsv"), "tampered\n").unwrap();
    assert_eq!(journal::verify(a.path()).unwrap(), vec!["scan_I.tsv".to_string()]);
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let o = Command::new(env!("CARGO_BIN_EXE_dispersion-lab")).arg(flag).output().unwrap();
        assert_eq!(code(&o), 0);
        assert!(!o.stdout.is_empty());
    }
}
