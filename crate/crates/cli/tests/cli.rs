use std::process::{Command, Output};

use mordell_core::errfns::err_m2;
use mordell_core::kernel::h_alpha_kernel;
use mordell_core::{QuadraticForm, Tolerance};
use serde_json::Value;

const HEADER: &str = "method,a1,a2,a3,alpha1,alpha2,v,value_re,value_im,err_est,n_evals,r_used,converged";

fn mordell(args: &[&str]) -> Output {
    mordell_env(args, &[])
}

fn mordell_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mordell"));
    cmd.args(args).env_remove("MORDELL_MAX_EVALS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn rows(o: &Output) -> Vec<csv::StringRecord> {
    let text = stdout(o);
    assert_eq!(text.lines().next(), Some(HEADER));
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|x| x.unwrap()).collect()
}

fn field(r: &csv::StringRecord, name: &str) -> String {
    let idx = HEADER.split(',').position(|h| h == name).unwrap();
    r[idx].to_string()
}

fn num(r: &csv::StringRecord, name: &str) -> f64 {
    field(r, name).parse().unwrap()
}

#[test]
fn eval_h_kernel_prints_one_row() {
    let o = mordell(&[
        "eval", "H", "--form", "1,1,1", "--alpha", "1/3,1/3", "--v", "1", "--method", "kernel",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rs = rows(&o);
    assert_eq!(rs.len(), 1);
    let q = QuadraticForm::new(1, 1, 1).unwrap();
    let lib = h_alpha_kernel(&q, &"1/3,1/3".parse().unwrap(), 1.0, &Tolerance::default()).unwrap();
    assert_eq!(num(&rs[0], "value_re"), lib.value.re);
    assert_eq!(field(&rs[0], "alpha1"), "1/3");
    assert_eq!(field(&rs[0], "converged"), "true");
}

#[test]
fn eval_errfn_matches_library() {
    let o = mordell(&["eval", "errfn", "--kind", "M2", "--kappa", "1", "--u", "1,1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rs = rows(&o);
    let lib = err_m2(1.0, 1.0, 1.0, &Tolerance::default()).unwrap();
    assert_eq!(num(&rs[0], "value_re"), lib.value.re);
    let o = mordell(&["eval", "errfn", "--kind", "M", "--u", "-1", "--path", "contour"]);
    assert_eq!(code(&o), 0);
    assert!((num(&rows(&o)[0], "value_re") - 0.012189).abs() < 1e-6);
}

#[test]
fn invalid_inputs_exit_2() {
    let o = mordell(&["eval", "H", "--form", "1,3,1", "--alpha", "1/3,1/3", "--v", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("form not positive definite"));
    for args in [
        vec!["eval", "H", "--form", "1,1,1", "--alpha", "0.5,0.25", "--v", "1"],
        vec!["eval", "H", "--form", "1,1,1", "--alpha", "1/3,1/3"],
        vec!["eval", "H", "--form", "1,1,1", "--alpha", "1/3,1/3", "--tau", "0.3,1"],
        vec!["eval", "H", "--form", "1,1,1", "--alpha", "0,0", "--v", "1"],
        vec!["eval", "errfn", "--kind", "M", "--u", "0"],
        vec!["eval", "mordell", "--z", "0,0", "--tau", "0,-1"],
        vec![
            "sweep", "--form", "1,1,1", "--alpha", "1/3,1/3", "--v", "1", "--param", "v", "--from", "1", "--to", "2", "--steps", "1",
        ],
        vec!["frobnicate"],
    ] {
        let o = mordell(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
    let o = mordell_env(
        &["eval", "H", "--form", "1,1,1", "--alpha", "1/3,1/3", "--v", "1"],
        &[("MORDELL_MAX_EVALS", "lots")],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn exhausted_budget_exits_3_with_record() {
    let o = mordell_env(
        &[
            "eval", "H", "--form", "1,1,1", "--alpha", "1/3,1/3", "--v", "1", "--method", "kernel",
        ],
        &[("MORDELL_MAX_EVALS", "200")],
    );
    assert_eq!(code(&o), 3);
    let rs = rows(&o);
    assert_eq!(rs.len(), 1);
    assert_eq!(field(&rs[0], "converged"), "false");
}

#[test]
fn verify_suites_exit_codes() {
    let o = mordell(&["verify", "--suite", "errfns"]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["suite"], "errfns");
    assert_eq!(r["pass"], true);
    let checks = r["checks"].as_array().unwrap();
    assert!(checks.len() >= 56);
    assert!(checks.iter().all(|c| c["pass"] == true));

    let o = mordell(&["verify", "--suite", "errfns", "--tol-scale", "1e-12"]);
    assert_eq!(code(&o), 1);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["pass"], false);

    let o = mordell(&["verify", "--suite", "onedim", "--tol-scale", "0.001"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_theorem_passes() {
    let o = mordell(&["verify", "--suite", "theorem"]);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let failed: Vec<&Value> = r["checks"].as_array().unwrap().iter().filter(|c| c["pass"] != true).collect();
    assert_eq!(code(&o), 0, "{failed:?}");
    assert_eq!(r["pass"], true);
}

#[test]
fn sweep_v_is_deterministic() {
    let args = [
        "sweep", "--form", "1,1,1", "--alpha", "1/3,1/3", "--method", "kernel", "--param", "v", "--from", "0.5", "--to", "2", "--steps",
        "4",
    ];
    let a = mordell(&args);
    let b = mordell(&args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let rs = rows(&a);
    let vs: Vec<f64> = rs.iter().map(|r| num(r, "v")).collect();
    assert_eq!(vs, vec![0.5, 1.0, 1.5, 2.0]);
}

#[test]
fn sweep_alpha1_approaches_integral_case() {
    let o = mordell(&[
        "sweep",
        "--form",
        "2,1,3",
        "--alpha",
        "1/8,1/2",
        "--v",
        "0.5",
        "--method",
        "kernel",
        "--param",
        "alpha1",
        "--values",
        "1/8,1/16,1/32,0",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rs = rows(&o);
    assert_eq!(rs.len(), 4);
    let limit = num(&rs[3], "value_re");
    let gaps: Vec<f64> = rs[..3].iter().map(|r| (num(r, "value_re") - limit).abs()).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
    assert_eq!(field(&rs[1], "alpha1"), "1/16");
}

#[test]
fn sweep_r_increments_shrink() {
    let o = mordell(&[
        "sweep",
        "--form",
        "1,1,1",
        "--alpha",
        "1/3,1/3",
        "--v",
        "1",
        "--method",
        "lattice-relation",
        "--param",
        "r",
        "--from",
        "1",
        "--to",
        "6",
        "--steps",
        "6",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s: Vec<f64> = rows(&o).iter().map(|r| num(r, "value_re")).collect();
    assert_eq!(s.len(), 6);
    let inc: Vec<f64> = s.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(inc.windows(2).all(|w| w[1] < w[0]));
    let o = mordell(&[
        "sweep", "--form", "1,1,1", "--alpha", "1/3,1/3", "--v", "1", "--method", "kernel", "--param", "r", "--values", "1,2",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("job.json");
    std::fs::write(
        &path,
        r#"{"form": [2, 1, 3], "alpha": "1/4,2/3", "v": 0.5, "tol": 1e-9, "method": "lattice-relation", "r_max": 5, "output": "json"}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let o = mordell(&["eval", "H", "--config", p]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["schema_version"], 1);
    let rec = &r["records"][0];
    assert_eq!(rec["method"], "lattice-relation");
    assert_eq!(rec["r_used"], 5);
    assert_eq!(rec["a1"], 2);

    let o = mordell(&["eval", "H", "--config", p, "--method", "kernel", "--out", "csv", "--v", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rs = rows(&o);
    assert_eq!(field(&rs[0], "method"), "kernel");
    assert_eq!(num(&rs[0], "v"), 1.0);
    assert_eq!(field(&rs[0], "alpha2"), "2/3");

    std::fs::write(&path, r#"{"form": [2, 1, 3], "colour": "blue"}"#).unwrap();
    assert_eq!(code(&mordell(&["eval", "H", "--config", p])), 2);
    assert_eq!(code(&mordell(&["eval", "H", "--config", "/nonexistent/job.json"])), 2);
}

#[test]
fn mordell_and_double_eichler_rows() {
    let o = mordell(&["eval", "mordell", "--z", "0,0", "--tau", "0,1", "--out", "json"]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["records"][0]["value_re"].as_f64().unwrap() > 0.0);
    let o = mordell(&[
        "eval",
        "double-eichler",
        "--form",
        "2,1,3",
        "--alpha",
        "1/4,2/3",
        "--tau",
        "0.3,0.8",
        "--r-max",
        "6",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rs = rows(&o);
    assert_eq!(field(&rs[0], "r_used"), "6");
    assert!(num(&rs[0], "value_im").abs() > 1e-4);
}
