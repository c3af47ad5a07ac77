use std::fs;
use std::path::Path;

use mpr_cli::{run_with, Summary};
use serde_json::Value;

fn mpr(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("mpr").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn wiener_all_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout, _) = mpr(&["check", "--model", "wiener", "-N", "6", "--all", "--triple", "1,2,4", "--out", out]);
    assert_eq!(code, 0, "{stdout}");
    let qh = json(&dir.path().join("qh_1_2_4.json"));
    for (k, v) in [("A", "4/9"), ("B", "4/9"), ("C", "1/9"), ("F", "-4/9")] {
        assert_eq!(qh["constants"][k], v);
    }
    let notes: Vec<&str> = qh["notes"].as_array().unwrap().iter().filter_map(Value::as_str).collect();
    assert!(notes.iter().any(|n| n.starts_with("closed-form discrepancy")), "{notes:?}");
    assert_eq!(qh["config"]["N"], 6);
    assert_eq!(qh["config"]["model"]["name"], "wiener");
    // dependency order, certify first
    let summary: Summary = serde_json::from_value(json(&dir.path().join("summary.json"))).unwrap();
    let names: Vec<&str> = summary.reports.iter().map(|e| e.check.as_str()).collect();
    assert_eq!(names, ["certify", "ii", "levy", "reversed", "ortho", "cgs", "harness", "qh (1,2,4)", "m2-reversed"]);
    assert_eq!(summary.exit_code, 0);
    assert!(stdout.contains("A=4/9 B=4/9 C=1/9 D=0 E=0 F=-4/9"));
}

#[test]
fn poisson_orthogonality_fails() {
    let (code, stdout, _) = mpr(&["check", "--model", "poisson:1", "-N", "6", "--ortho"]);
    assert_eq!(code, 1);
    assert!(stdout.contains("E M_1M_2 = t"), "{stdout}");
}

#[test]
fn poisson_quadratic_harness_runs_on_recombined_family() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, _) = mpr(&["check", "--model", "poisson:1", "-N", "4", "--checks", "cgs,qh", "--out", out]);
    assert_eq!(code, 0);
    let qh = json(&dir.path().join("qh_1_2_4.json"));
    assert_eq!(qh["verdict"], "pass");
    assert_eq!(qh["constants"]["A"], "4/9");
    let notes = qh["notes"].to_string();
    assert!(notes.contains("Gram-Schmidt"), "{notes}");
}

#[test]
fn bad_model_file_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mpr");
    fs::write(&bad, "g[1] = t +\n").unwrap();
    let (code, _, err) = mpr(&["check", "--model-file", bad.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(err.contains("syntax error"), "{err}");
    let (code, _, _) = mpr(&["check", "--model-file", dir.path().join("missing.mpr").to_str().unwrap()]);
    assert_eq!(code, 3);
}

#[test]
fn model_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("w.mpr");
    fs::write(&f, "model \"bm\"\ng[1] = 0\ng[2] = t\ng[3] = 0\ng[4] = 3*t^2\ng[5] = 0\ng[6] = 15*t^3\n").unwrap();
    let (code, stdout, err) = mpr(&["check", "--model-file", f.to_str().unwrap(), "-N", "3", "--checks", "ii,levy,ortho"]);
    assert_eq!(code, 0, "{stdout}{err}");
}

#[test]
fn usage_errors() {
    for args in [
        vec!["check", "--model", "wiener", "--triple", "2,1,3"],
        vec!["check", "--model", "wiener", "--triple", "0,1,3"],
        vec!["check", "--model", "wiener", "--triple", "1,2"],
        vec!["check", "--model", "wiener", "--checks", "bogus"],
        vec!["check", "--model", "wiener", "-N", "1"],
        vec!["check", "--model", "brownian"],
        vec!["check", "--model", "poisson:x"],
        vec!["check"],
        vec!["check", "--model", "wiener", "--format", "xml"],
        vec!["frobnicate"],
        vec!["sim", "--model", "wiener", "--grid", "2,1"],
        vec!["check", "--model", "wiener", "-N", "2", "--checks", "qh"],
    ] {
        let (code, _, err) = mpr(&args);
        assert_eq!(code, 3, "{args:?}");
        assert!(!err.is_empty(), "{args:?}");
    }
}

#[test]
fn all_is_lenient_about_capacity() {
    // N = 2 leaves no room for M_3: the quadratic harness is not applicable
    let (code, stdout, _) = mpr(&["check", "--model", "wiener", "-N", "2", "--all"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("not-applicable"), "{stdout}");
}

#[test]
fn build_emits_family_json() {
    let (code, stdout, _) = mpr(&["build", "--model", "gamma", "-N", "3"]);
    assert_eq!(code, 0);
    let start = stdout.find('{').unwrap();
    let end = stdout.rfind('}').unwrap();
    let fam = mpr_core::MartingaleFamily::from_json(&stdout[start..=end]).unwrap();
    assert_eq!(fam.order(), 3);
    assert!(fam.is_certified());
}

#[test]
fn ortho_systems() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout, _) = mpr(&[
        "ortho", "--model", "wiener", "-N", "6", "--time", "1", "-K", "4", "--transitional", "1,2,3", "--transitional-degree", "3",
        "--out", out,
    ]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("p_4 = 3 - 6*x^2 + x^4"), "{stdout}");
    let m = json(&dir.path().join("marginal_t_1.json"));
    assert_eq!(m["relation_to_family"], "equal");
    // Hermite: c_n = n
    assert_eq!(m["recurrence"]["c"], serde_json::json!(["1", "2", "3", "4"]));
    // marginal of a degenerate law at t = 0 is infeasible; reject t = 0 upfront
    let (code, _, _) = mpr(&["ortho", "--model", "wiener", "--time", "0"]);
    assert_eq!(code, 3);
}

#[test]
fn sim_reports_embed_seed_and_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &Path, workers: &str| {
        mpr(&[
            "sim", "--model", "gamma", "-N", "3", "--paths", "20000", "--seed", "7", "--workers", workers, "--out",
            dir.to_str().unwrap(),
        ])
    };
    let (ca, _, _) = run(a.path(), "1");
    let (cb, _, _) = run(b.path(), "8");
    assert_eq!(ca, 0);
    assert_eq!(cb, 0);
    let first = json(&a.path().join("martingale_n_2_k_1_s_1_t_2.json"));
    assert_eq!(first["config"]["mc"]["seed"], 7);
    assert_eq!(first["config"]["mc"]["n_paths"], 20000);
    let second = json(&b.path().join("martingale_n_2_k_1_s_1_t_2.json"));
    assert_eq!(first["z"], second["z"]);
    assert_eq!(first["estimate"], second["estimate"]);
    let (code, _, err) = mpr(&["sim", "--model-file", "nope.mpr"]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn report_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, _) = mpr(&["check", "--model", "poisson:2", "-N", "4", "--checks", "ii,ortho,harness", "--out", out]);
    assert_eq!(code, 1);
    let (c1, s1, _) = mpr(&["report", out]);
    let first = fs::read(dir.path().join("summary.json")).unwrap();
    let (c2, s2, _) = mpr(&["report", out]);
    let second = fs::read(dir.path().join("summary.json")).unwrap();
    assert_eq!((c1, c2), (1, 1));
    assert_eq!(s1, s2);
    assert_eq!(first, second);
    let (code, _, _) = mpr(&["report", dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(code, 3);
}
