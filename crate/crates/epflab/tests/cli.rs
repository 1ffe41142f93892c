use std::path::Path;
use std::process::{Command, Output};

fn epflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epflab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn quick_config(dir: &Path) -> String {
    let path = dir.join("cfg.json");
    std::fs::write(
        &path,
        r#"{"solver": {"n_starts": 6}, "c_steps": 6, "local_samples": 200}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn list_problems_names_the_registry() {
    let o = epflab(&["list-problems"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["toy-lin-1", "toy-eq-1", "toy-socp-1", "toy-socp-2", "toy-sdp-1"] {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn sweep_writes_csv_with_exact_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = epflab(&[
        "sweep",
        "--problem",
        "toy-lin-1",
        "--penalty",
        "linear",
        "--c-min",
        "0.5",
        "--c-max",
        "8",
        "--c-steps",
        "5",
        "--starts",
        "6",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        rows.headers().unwrap().iter().collect::<Vec<_>>(),
        ["c", "best_F", "best_x1", "feas_gap", "dist_to_xstar", "starts_agreeing"]
    );
    let recs: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    assert_eq!(recs.len(), 5);
    // Infeasible minimizer x = 2 below c = 1, x ≈ 0 above it.
    let gap = |r: &csv::StringRecord| r[3].parse::<f64>().unwrap();
    assert!((gap(&recs[0]) - 2.0).abs() < 1e-6);
    assert!(gap(&recs[4]) < 1e-6);
}

#[test]
fn estimate_cstar_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let o = epflab(&[
        "estimate-cstar",
        "--problem",
        "toy-lin-1",
        "--penalty",
        "linear",
        "--starts",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((v["c_star"].as_f64().unwrap() - 1.0).abs() < 0.05);

    let o = epflab(&[
        "estimate-cstar",
        "--problem",
        "toy-eq-1",
        "--penalty",
        "al-hpr",
        "--lambda",
        "0",
        "--starts",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["c_star"].is_null());
}

#[test]
fn check_kkt_accepts_and_rejects() {
    assert_eq!(
        code(&epflab(&[
            "check-kkt",
            "--problem",
            "toy-eq-1",
            "--x",
            "1,1",
            "--mu",
            "-2"
        ])),
        0
    );
    assert_eq!(
        code(&epflab(&[
            "check-kkt",
            "--problem",
            "toy-eq-1",
            "--x",
            "1,1",
            "--mu",
            "0"
        ])),
        2
    );
    assert_eq!(
        code(&epflab(&["check-kkt", "--problem", "toy-socp-1", "--x", "1,1"])),
        0
    );
    assert_eq!(
        code(&epflab(&["check-kkt", "--problem", "toy-sdp-1", "--x", "0.5,1"])),
        0
    );
    assert_eq!(code(&epflab(&["check-kkt", "--problem", "toy-eq-1", "--x", "1"])), 3);
}

#[test]
fn gradcheck_passes_on_registry() {
    let o = epflab(&[
        "gradcheck",
        "--problem",
        "toy-socp-2",
        "--penalty",
        "c1-socp",
        "--c",
        "3",
        "--points",
        "30",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8(o.stdout).unwrap().contains("PASS"));
}

#[test]
fn input_errors_exit_three() {
    assert_eq!(code(&epflab(&["sweep", "--problem", "nope", "--penalty", "linear"])), 3);
    assert_eq!(
        code(&epflab(&["sweep", "--problem", "toy-lin-1", "--penalty", "cubic"])),
        3
    );
    assert_eq!(
        code(&epflab(&["localize", "--problem", "toy-lin-1", "--penalty", "c1-sdp"])),
        3
    );
    assert_eq!(code(&epflab(&["bogus"])), 3);
    assert_eq!(code(&epflab(&["--help"])), 0);
}

#[test]
fn localize_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = epflab(&[
            "localize",
            "--problem",
            "toy-socp-1",
            "--penalty",
            "linear",
            "--config",
            &cfg,
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let a = run("a.json");
    assert_eq!(a, run("b.json"));
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["seed"], 5);
    assert!(v["verdicts"]["local_exact"].as_bool().unwrap());
}
