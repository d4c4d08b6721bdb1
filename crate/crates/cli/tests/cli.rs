use std::fs;
use std::process::{Command, Output};

fn djcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_djcm")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_lists_every_subcommand() {
    let o = djcm(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for sub in ["evolve", "pnd", "mandel", "antibunch", "squeeze", "wigner", "husimi", "sweep", "figures", "validate"] {
        assert!(text.contains(sub), "missing {sub}");
    }
}

#[test]
fn pnd_writes_normalized_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let o = djcm(&[
        "pnd",
        "--f",
        "identity",
        "--g",
        "0.5",
        "--beta",
        "2",
        "--omega",
        "1",
        "--w1",
        "100",
        "--w2",
        "100",
        "--t",
        "1",
        "--n-max",
        "20",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,p_n"));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 21);
    let total: f64 = values.iter().sum();
    assert!(total <= 1.0 && total > 0.99, "{total}");
    assert!(values.iter().all(|&p| p >= 0.0));
}

#[test]
fn pnd_extends_truncation_to_n_max() {
    let o = djcm(&["pnd", "--beta", "0.5", "--n-max", "60"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 62);
}

#[test]
fn validate_reports_small_deviation() {
    let o = djcm(&["validate", "--f", "sin", "--t-end", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("max deviation: ")).unwrap();
    let dev: f64 = line.trim_start_matches("max deviation: ").parse().unwrap();
    assert!(dev <= 1e-8);
}

#[test]
fn validate_fails_above_tolerance() {
    let o = djcm(&["validate", "--dt", "0.02", "--max-substeps", "1", "--t-end", "2", "--tol", "1e-14"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("exceeds tolerance"));
}

#[test]
fn scalar_witnesses_at_t0() {
    let o = djcm(&["mandel", "--t", "0"]);
    assert_eq!(stdout(&o), "t,q_mandel\n0,-0.2\n");
    let o = djcm(&["antibunch", "--t", "0", "--f", "ln"]);
    assert_eq!(stdout(&o), "t,d1\n0,-1\n");
    let o = djcm(&["squeeze", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(doc["s_x"].is_number() && doc["s_p"].is_number());
    assert_eq!(doc["t"], 1.0);
}

#[test]
fn oracle_engine_agrees_with_closed_form() {
    let closed = djcm(&["mandel", "--t", "0.5"]);
    let oracle = djcm(&["mandel", "--t", "0.5", "--engine", "oracle"]);
    assert_eq!(oracle.status.code(), Some(0), "{}", stderr(&oracle));
    let q = |o: &Output| -> f64 { stdout(o).lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap() };
    assert!((q(&closed) - q(&oracle)).abs() < 1e-9);
}

#[test]
fn evolve_json_round_trips() {
    let o = djcm(&["evolve", "--format", "json", "--beta", "1+0.5i"]);
    assert_eq!(o.status.code(), Some(0));
    let state = djcm::FieldState::from_json(&stdout(&o)).unwrap();
    assert_eq!(state.params().beta, num_complex::Complex64::new(1.0, 0.5));
    let csv = djcm(&["evolve", "--beta", "1,0.5"]);
    assert_eq!(stdout(&csv).lines().next(), Some("n,re_c2,im_c2,re_c1,im_c1"));
    assert_eq!(stdout(&csv).lines().count(), state.levels() + 1);
}

#[test]
fn phase_space_layouts() {
    let grid = ["--n-re", "5", "--n-im", "4"];
    let o = djcm(&[&["wigner"][..], &grid].concat());
    let text = stdout(&o);
    assert!(text.starts_with("# kind=wigner window=-3,3,-3,3\n# resolution=5,4\n"));
    assert_eq!(text.lines().count(), 6);
    let o = djcm(&[&["wigner", "--diagonal-only", "--long"][..], &grid].concat());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("re,im,value"));
    assert_eq!(text.lines().count(), 21);
    let o = djcm(&[&["husimi", "--format", "json"][..], &grid].concat());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["kind"], "husimi");
    assert_eq!(doc["values"].as_array().unwrap().len(), 4);
}

#[test]
fn sweep_outputs() {
    let o =
        djcm(&["sweep", "--axis", "omega", "--count", "3", "--witness", "mandel,squeeze", "--kinds", "ln;poly:1,0.1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# spec: {"));
    assert_eq!(lines[1], "omega,kind,q_mandel,s_x,s_p,status");
    assert_eq!(lines.len(), 8);
    assert!(lines[5].starts_with("0.1,\"poly:1.0,0.1\","), "{}", lines[5]);

    let o = djcm(&["sweep", "--axis", "photon_index", "--witness", "pnd", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 48);
}

#[test]
fn figures_are_deterministic_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &std::path::Path, threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_djcm"))
            .env("DJCM_THREADS", threads)
            .args(["figures", "--out-dir", dir.to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    };
    run(a.path(), "1");
    run(b.path(), "3");
    for i in 1..=6 {
        let name = format!("fig{i}.csv");
        let x = fs::read(a.path().join(&name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, fs::read(b.path().join(&name)).unwrap(), "{name}");
    }
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# shared settings\nf = ln\nt = 0\nn-max = 3\nlong = true\n").unwrap();
    let o = djcm(&["pnd", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 5);
    // command-line flags win over the file
    let o = djcm(&["mandel", "--config", cfg.to_str().unwrap(), "--t", "1"]);
    let from_flags = djcm(&["mandel", "--f", "ln", "--t", "1"]);
    assert_eq!(stdout(&o), stdout(&from_flags));

    fs::write(&cfg, "gg = 3\n").unwrap();
    let o = djcm(&["pnd", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown config key"));
    let o = djcm(&["pnd", "--config", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn argument_errors_exit_2() {
    for args in [
        &["pnd", "--beta", "abc"][..],
        &["pnd", "--f", "tan"],
        &["pnd", "--g", "-1"],
        &["pnd", "--eps", "2"],
        &["wigner", "--n-re", "1"],
        &["sweep", "--axis", "photon_index", "--count", "7"],
        &["sweep", "--witness", "entropy"],
        &["sweep", "--start", "3", "--stop", "1"],
        &["mandel", "--engine", "oracle", "--dt", "0"],
        &["frobnicate"],
        &[],
    ] {
        let o = djcm(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).contains("panicked"));
    }
}

#[test]
fn numerical_errors_exit_1() {
    let o = djcm(&["mandel", "--f", "poly:0,0,0,1e10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: deformation value"));
    assert_eq!(stderr(&o).lines().count(), 1);
    let o = djcm(&["pnd", "--beta", "200"]);
    assert_eq!(o.status.code(), Some(1));
    let o = djcm(&["mandel", "--engine", "oracle", "--f", "invsin", "--max-substeps", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("step too large"));
}

#[test]
fn unwritable_output_exits_1() {
    let o = djcm(&["mandel", "-o", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_thread_count_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_djcm")).env("DJCM_THREADS", "many").arg("mandel").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn strong_coupling_warns() {
    let o = djcm(&["mandel", "--g", "20"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("rotating-wave"));
}
