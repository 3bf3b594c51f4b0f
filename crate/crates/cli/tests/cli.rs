use std::path::Path;
use std::process::{Command, Output};

fn dcsbm(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcsbm")).args(args).current_dir(cwd).output().unwrap()
}

fn error_json(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("stderr line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not json: {line}: {e}"))
}

fn golden(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name).display().to_string()
}

#[test]
fn usage_errors_exit_2_with_json() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["solve"],
        vec!["solve", "--method", "bogus", "x.inst"],
        vec!["generate", "--n", "8", "--k", "2", "--strength", "low"],
        vec!["nonsense"],
    ] {
        let out = dcsbm(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let v = error_json(&out);
        assert_eq!(v["error"], "usage", "{args:?}");
        assert!(!v["message"].as_str().unwrap().is_empty());
    }
}

#[test]
fn runtime_errors_exit_1_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcsbm(&["solve", "missing.inst"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "io");

    std::fs::write(dir.path().join("bad.inst"), "not an instance\n").unwrap();
    let out = dcsbm(&["solve", "bad.inst"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "parse");
}

#[test]
fn help_lists_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcsbm(&["solve", "--help"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in ["[default: exact]", "[default: 60]", "[default: 50]", "[default: on]"] {
        assert!(text.contains(needle), "missing {needle}");
    }
}

#[test]
fn single_community_is_optimal_with_zero_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcsbm(&["generate", "--n", "6", "--k", "1", "--strength", "low", "--seed", "3", "--out-dir", "g"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let inst = "g/custom-k1-n06-low-r00.inst";
    let out = dcsbm(&["solve", inst, "-o", "s.sol", "--csv", "s.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sol = std::fs::read_to_string(dir.path().join("s.sol")).unwrap();
    assert!(sol.contains("status optimal"));
    assert!(sol.contains("labels 1 1 1 1 1 1"));
    let mut rdr = csv::Reader::from_path(dir.path().join("s.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    let gap_col = headers.iter().position(|h| h == "gap_pct").unwrap();
    assert_eq!(row[gap_col].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "seed = 5\n[solve]\nmethod = \"em-ls1\"\ntrials = 3\n").unwrap();
    let inst = golden("three_vertex.inst");

    let out = dcsbm(&["--config", "c.toml", "solve", &inst, "--csv", "a.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(a.lines().count(), 4);
    assert!(a.lines().skip(1).all(|l| l.contains(",em-ls1,")));

    let out = dcsbm(&["--config", "c.toml", "solve", &inst, "--trials", "2", "--method", "em-ls2", "--csv", "b.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let b = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(b.lines().count(), 3);
    assert!(b.lines().skip(1).all(|l| l.contains(",em-ls2,")));
}

#[test]
fn eval_gap_reports_against_best_known() {
    let dir = tempfile::tempdir().unwrap();
    let inst = golden("three_vertex.inst");
    for (method, out) in [("exact", "e.sol"), ("em-ls1", "h.sol")] {
        let o = dcsbm(&["solve", &inst, "--method", method, "--seed", "1", "-o", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let out = dcsbm(&["eval", "gap", "e.sol", "h.sol"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().count() >= 3, "{text}");
}
