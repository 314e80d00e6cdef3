use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn succ_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_succ-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_small(experiment: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--experiment",
        experiment,
        "--sims",
        "2",
        "--epochs",
        "3",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    succ_lab(&args)
}

#[test]
fn run_writes_report_and_figures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cl");
    let o = run_small("count-list", &out, &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for name in [
        "report.json",
        "predictions.csv",
        "similarities.csv",
        "stats.csv",
        "accuracy.svg",
        "similarity.svg",
        "mds.svg",
    ] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["config"]["n_sims"], 2);
    assert_eq!(report["config"]["learning_rate"], 0.05);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pv");
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        format!(
            "# small run\nexperiment = place-value\nsims = 3\nepochs = 2\nseed = 7\nlr = 0.002\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = succ_lab(&["run", "--config", cfg.to_str().unwrap(), "--sims", "2"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["n_sims"], 2);
    assert_eq!(report["config"]["base_seed"], 7);
    assert_eq!(report["config"]["learning_rate"], 0.002);
    assert_eq!(report["config"]["epochs"], 2);

    let json_cfg = dir.path().join("run.json");
    fs::write(
        &json_cfg,
        format!(
            r#"{{"experiment": "count-list", "sims": 2, "epochs": 2, "angle_stat": "linear", "out": "{}"}}"#,
            dir.path().join("cl").display()
        ),
    )
    .unwrap();
    let o = succ_lab(&["run", "--config", json_cfg.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cl/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["config"]["angle_dispersion"], "linear");
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(run_small("abacus", &out, &[]).status.code(), Some(1));
    assert_eq!(
        run_small("count-list", &out, &["--tail", "three"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run_small("count-list", &out, &["--split", "1.5"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run_small("count-list", &out, &["--layer", "2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(succ_lab(&["run", "--sims", "1"]).status.code(), Some(1));
    assert_eq!(succ_lab(&["frobnicate"]).status.code(), Some(1));
    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "colour = blue\n").unwrap();
    assert_eq!(
        succ_lab(&["run", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    assert!(!out.exists());
}

#[test]
fn runtime_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("diverged");
    // every simulation diverges
    let o = run_small("place-value", &out, &["--lr", "1e9"]);
    assert_eq!(o.status.code(), Some(2));
    let o = succ_lab(&[
        "plot",
        "--report",
        dir.path().join("missing.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plot_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cl = dir.path().join("cl");
    let pv = dir.path().join("pv");
    assert_eq!(run_small("count-list", &cl, &[]).status.code(), Some(0));
    assert_eq!(run_small("place-value", &pv, &[]).status.code(), Some(0));

    let figs = dir.path().join("figs");
    let o = succ_lab(&[
        "plot",
        "--report",
        cl.join("report.json").to_str().unwrap(),
        "--out",
        figs.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_dir(&figs).unwrap().count(), 3);
    assert_eq!(
        fs::read(figs.join("mds.svg")).unwrap(),
        fs::read(cl.join("mds.svg")).unwrap()
    );

    let cmp = dir.path().join("cmp");
    let o = succ_lab(&[
        "compare",
        "--a",
        pv.join("report.json").to_str().unwrap(),
        "--b",
        cl.join("report.json").to_str().unwrap(),
        "--out",
        cmp.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["similarity", "angle_sd", "magnitude"] {
        assert_eq!(v[key]["df"], 2);
    }
    assert!(cmp.join("comparison.svg").exists());

    let o = succ_lab(&[
        "compare",
        "--a",
        cl.join("report.json").to_str().unwrap(),
        "--b",
        cl.join("report.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
