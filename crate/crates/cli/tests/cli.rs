use std::path::Path;
use std::process::Command;

fn run(args: &[&str], out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_fracmarket"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn record(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("run.json")).unwrap()).unwrap()
}

#[test]
fn census_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["census", "--N-grid", "1,12,30", "--exhaustive-max", "16", "--mc-samples", "20000", "--seed", "7"];
    assert_eq!(run(&args, &a), 0);
    assert_eq!(run(&args, &b), 0);
    let csv = std::fs::read(a.join("census.csv")).unwrap();
    assert_eq!(csv, std::fs::read(b.join("census.csv")).unwrap());
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("n,method,count_u,count_d,ratio,ci_low,ci_high,samples,seed\n1,exhaustive,0,0,"));
    assert!(text.contains("\n30,monte_carlo,"));
}

#[test]
fn critical_writes_increasing_lambda_psi() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["critical", "--N-grid", "dyadic:64:256"], dir.path()), 0);
    let r = record(dir.path());
    assert_eq!(r["results"]["lambda_psi_increasing"], true);
    let csv = std::fs::read_to_string(dir.path().join("thresholds.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("N,lambda_phi_NN,lambda_psi,lowbd,exact_one_step,nH"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn verify_above_threshold_exits_with_violation() {
    let dir = tempfile::tempdir().unwrap();
    let (ok, bad) = (dir.path().join("ok"), dir.path().join("bad"));
    assert_eq!(run(&["verify", "--N", "64", "--lambda", "0.01"], &ok), 0);
    assert_eq!(record(&ok)["results"]["certificate"]["is_arbitrage"], true);

    let lambda_psi = record(&ok)["results"]["closed_form"]["lambda_psi"].as_f64().unwrap();
    let above = format!("{}", lambda_psi + 1e-9);
    assert_eq!(run(&["verify", "--N", "64", "--lambda", &above], &bad), 3);
    let r = record(&bad);
    let witness = r["results"]["certificate"]["witness_path"].as_str().unwrap();
    assert_eq!(witness.len(), 64);
    assert!(witness.starts_with(&"d".repeat(16)));
    assert!(bad.join("witness_values.csv").exists());
}

#[test]
fn all_down_verify_uses_n_h() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["verify", "--strategy", "all-down", "--N", "32", "--lambda", "0"], dir.path()), 0);
    let r = record(dir.path());
    assert_eq!(r["results"]["closed_form"]["n0"], 5);
    assert_eq!(r["results"]["certificate"]["profit_probability"], "1/2^4");
    assert_eq!(r["results"]["strategy"], "all-down");
}

#[test]
fn invalid_parameters_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["critical", "--H", "0.4"], dir.path()), 2);
    assert_eq!(run(&["verify"], dir.path()), 2);
    assert_eq!(run(&["aa1", "--p", "0.7"], dir.path()), 2);
    assert_eq!(run(&["census", "--N-grid", "dyadic:3:8"], dir.path()), 2);
}

#[test]
fn coeffs_and_variance_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["coeffs", "--n-max", "30"], dir.path()), 0);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("coeffs_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["n_max"], 30);
    assert_eq!(record(dir.path())["results"]["bounds_pass"], true);

    assert_eq!(run(&["variance", "--N-grid", "16,32"], dir.path()), 0);
    let csv = std::fs::read_to_string(dir.path().join("variance.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
