use std::process::{Command, Output};

use serde_json::Value;

fn mme(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mme")).args(args).env_remove("MME_THREADS").output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn planar_quartic_root_without_vertices() {
    let v = json(&mme(&["maps", "--root", "X1^4", "--genus", "0", "--vertices", ""]));
    assert_eq!(v["schema"], "mme/1");
    assert_eq!(v["count"], 2);
}

#[test]
fn quadratic_suite_passes() {
    let out = mme(&["verify", "--suite", "quadratic"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["pass"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("α_n≡0 for n≥1: PASS"));
}

#[test]
fn expand_is_deterministic() {
    let args = ["expand", "--potential", "X1^4 + X2^2", "--observable", "X1*X2*X1*X2", "--genus", "1", "--lambda-order", "2"];
    let a = mme(&args);
    let b = mme(&args);
    json(&a);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn expand_known_coefficients() {
    let v = json(&mme(&["expand", "--potential", "X1^4", "--observable", "X1^2", "--genus", "1", "--lambda-order", "2", "--lambda", "1/10"]));
    let coeffs = |n: usize| v["series"][n]["lambda_coeffs"].clone();
    assert_eq!(coeffs(0), serde_json::json!(["1", "-8", "144"]));
    assert_eq!(coeffs(1), serde_json::json!(["0", "-4", "240"]));
    assert_eq!(v["evaluations"][0]["value"], "41/25");
}

#[test]
fn csv_output() {
    let out = mme(&["--format", "csv", "expand", "--potential", "X1^4", "--observable", "X1^2", "--lambda-order", "1"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "n,k,coeff\n0,0,1\n0,1,-8\n");
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = std::env::temp_dir().join(format!("mme-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("job.conf");
    std::fs::write(&path, "# quartic\npotential = X1^4\nobservable = X1^2\nlambda_order = 2\nformat = csv\n").unwrap();
    let p = path.to_str().unwrap();
    let out = mme(&["--config", p, "expand"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "n,k,coeff\n0,0,1\n0,1,-8\n0,2,144\n");
    let out = mme(&["--config", p, "expand", "--lambda-order", "0"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "n,k,coeff\n0,0,1\n");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bad_input_exits_with_one() {
    for args in [
        &["expand", "--potential", "X1 + Y2", "--observable", "X1"][..],
        &["expand", "--potential", "X1*X2*X3", "--observable", "X1"],
        &["maps", "--root", "X1^4", "--vertices", "2*X1"],
        &["verify", "--suite", "nope"],
    ] {
        let out = mme(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn sample_is_reproducible() {
    let args = ["sample", "--potential", "X1^4", "--lambda", "0.02", "--n", "6", "--steps", "400", "--burnin", "50", "--seed", "7", "--observable", "X1^2"];
    let a = json(&mme(&args));
    assert_eq!(a, json(&mme(&args)));
    assert_eq!(a["observables"][0]["name"], "ts(X1^2)");
    assert!(a["observables"][0]["mean"].as_f64().unwrap() > 0.0);
}
