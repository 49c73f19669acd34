//! The binary end to end: exit codes, output and determinism.

use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fibertop");

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("FIBERTOP_MAX_POINTS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn normal_identity_exits_zero() {
    let o = run(&["check", "normal", &fixture("id_D2.top")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("normal holds"));
}

#[test]
fn sierpinski_identity_is_not_co_perfect() {
    let o = run(&["check", "co-perfect", &fixture("id_S.top"), "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["holds"], false);
    assert_eq!(v["verified"], true);
    assert_eq!(v["counterexample"]["carrier"], serde_json::json!([0]));
    assert_eq!(v["counterexample"]["y"], 1);
}

#[test]
fn oversized_input_exits_two() {
    let o = run(&["check", "normal", &fixture("big.top")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cap"));
}

#[test]
fn cap_follows_the_environment() {
    let o = Command::new(BIN)
        .args(["check", "normal", &fixture("id_D2.top")])
        .env("FIBERTOP_MAX_POINTS", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["check", "normal", &fixture("big.top"), "--max-points", "21"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn malformed_files_exit_two() {
    let dir = std::env::temp_dir().join(format!("fibertop-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.top");
    std::fs::write(&path, "space B\npoints 3\nopens\n-\n0\n1\n0 1 2\n").unwrap();
    let o = run(&["check", "normal", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("space B"));
    let o = run(&["check", "regular", &fixture("id_S.top")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn separator_at_depth_five() {
    let o = run(&["build", "separator", &fixture("sep.top"), "f", "F", "T", "--y", "0", "--depth", "5", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["osc_bound"], "1/31");
    assert_eq!(v["checks"]["holds"], true);
    assert_eq!(v["phi"], serde_json::json!(["0", "1", "0"]));
}

#[test]
fn extension_residuals_shrink_by_two_thirds() {
    let o = run(&["build", "extend", &fixture("sep.top"), "f", "F", "phit", "--y", "0", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let res: Vec<fibertop::Q> = v["residuals"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| fibertop::oscillation::parse_q(r.as_str().unwrap()).unwrap())
        .collect();
    assert!(res.len() > 1);
    let two_thirds = fibertop::oscillation::q(2, 3);
    assert!(res.windows(2).all(|w| w[1] <= &w[0] * &two_thirds));
    assert_eq!(v["phi"][0], "1/2");
}

#[test]
fn builders_reject_bad_arguments() {
    let o = run(&["build", "partitions", &fixture("sep.top"), "f", "F", "U", "--y", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["build", "separator", &fixture("sep.top"), "f", "F", "--y", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn other_builders_succeed() {
    for args in [
        vec!["partitions", "f", "F", "T", "--y", "1"],
        vec!["sigma-family", "f", "F", "T", "--y", "0"],
        vec!["functional-witness", "f", "U", "--y", "1"],
        vec!["separator", "f", "F", "T", "--y", "1", "--over", "Top"],
    ] {
        let file = fixture("sep.top");
        let mut full = vec!["build", args[0], &file];
        full.extend_from_slice(&args[1..]);
        let o = run(&full);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn sampled_census_is_clean_and_repeatable() {
    let args = ["census", "--seed", "7", "--sample", "500", "--n", "5", "--json"];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0));
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let last = stdout(&a).lines().last().unwrap().to_string();
    assert!(last.contains("\"violations\":0"), "{last}");
}

#[test]
fn exhaustive_census_and_harness() {
    for n in ["2", "3"] {
        let o = run(&["census", "--total", n]);
        assert_eq!(o.status.code(), Some(0));
    }
    let o = run(&["harness", "--total", "4", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let last = stdout(&o).lines().last().unwrap().to_string();
    assert!(last.contains("\"mismatches\":0"), "{last}");
}
