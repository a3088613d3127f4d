use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qfgeo(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfgeo"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "simulate", "--size", "27", "--flows", "2", "--duration", "8", "--jammer", "true", "--seed", "9", "--out",
            out,
        ]
    };
    assert_eq!(code(&qfgeo(&args("a"), dir.path())), 0);
    assert_eq!(code(&qfgeo(&args("b"), dir.path())), 0);
    for f in ["report.json", "events.csv", "config.txt"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between identical runs");
    }
    let report = fs::read_to_string(dir.path().join("a/report.json")).unwrap();
    assert!(report.contains("config_sha256"));
    assert!(report.contains("\"protocol\": \"qfgeo\""));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("hop.cfg"),
        "# one hop\nnode=0 0\nnode=0.5 0\nflow=0 1\nduration_s=8\n",
    )
    .unwrap();
    let o = qfgeo(&["simulate", "--config", "hop.cfg", "--protocol", "gf", "--out", "r"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(dir.path().join("r/report.json")).unwrap();
    assert!(report.contains("\"protocol\": \"gf\""));
    assert!(report.contains("\"reception_ratio\": 1.0"));

    // an explicit node list has no size to override
    let o = qfgeo(&["simulate", "--config", "hop.cfg", "--size", "30", "--out", "r2"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["simulate", "--bogus"],
        vec!["simulate", "--seed", "abc", "--out", "x"],
        vec!["simulate", "--protocol", "ospf", "--out", "x"],
        vec!["fit", "--out", "x", "missing.csv"],
        vec!["netgen", "--size", "0", "--out", "x"],
        vec!["report", "--input", "nowhere"],
        vec![],
    ] {
        let o = qfgeo(&args, dir.path());
        assert_eq!(code(&o), 1, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(code(&qfgeo(&["--help"], dir.path())), 0);
    assert_eq!(code(&qfgeo(&["--version"], dir.path())), 0);
}

#[test]
fn invalid_trial_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    // flows arrive after the trial ends
    let o = qfgeo(&["simulate", "--duration", "1", "--out", "x"], dir.path());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("x/report.json").exists());
}

#[test]
fn stretch_fit_validate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let o = qfgeo(
        &["stretch", "--size", "64", "--densities", "3,5", "--trials", "60", "--out", "s.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(csv.starts_with("# code_version="));

    let o = qfgeo(&["fit", "s.csv", "--out", "fit"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let model = fs::read_to_string(dir.path().join("fit/model.txt")).unwrap();
    let record = model.lines().find(|l| !l.starts_with('#')).unwrap();
    let fields: Vec<f64> = record.split_whitespace().map(|f| f.parse().unwrap()).collect();
    assert_eq!(fields.len(), 4);
    assert_eq!(&fields[2..], &[2.0, 1.05]);
    assert!(dir.path().join("fit/coverage.csv").exists());

    // any model passes a wide enough tolerance, none passes a zero one
    let wide = qfgeo(
        &["validate", "--input", "s.csv", "--model", "fit/model.txt", "--tolerance", "100"],
        dir.path(),
    );
    assert_eq!(code(&wide), 0, "{}", String::from_utf8_lossy(&wide.stderr));
    let strict = qfgeo(&["validate", "--input", "s.csv", "--tolerance", "0"], dir.path());
    assert_eq!(code(&strict), 2);
}

#[test]
fn netgen_writes_readable_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let o = qfgeo(&["netgen", "--size", "30", "--count", "3", "--out", "nets"], dir.path());
    assert_eq!(code(&o), 0);
    for i in 0..3 {
        let text = fs::read_to_string(dir.path().join(format!("nets/net_{i:04}.txt"))).unwrap();
        let g = qfgeo_core::NetworkGraph::read_text(text.as_bytes()).unwrap();
        assert_eq!(g.len(), 30);
    }
}

#[test]
fn sweep_resumes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep", "--sizes", "27", "--densities", "3", "--flows", "1,2", "--mobility", "0", "--jammer", "false",
        "--protocols", "qfgeo,gf", "--trials", "2", "--duration", "8", "--jobs", "2", "--out", "sw",
    ];
    let o = qfgeo(&args, dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let results = dir.path().join("sw/results");
    assert_eq!(fs::read_dir(&results).unwrap().count(), 8);

    // drop one result; the rerun recomputes only that one, byte for byte
    let victim = fs::read_dir(&results).unwrap().next().unwrap().unwrap().path();
    let before = fs::read(&victim).unwrap();
    fs::remove_file(&victim).unwrap();
    let o = qfgeo(&args, dir.path());
    assert!(String::from_utf8_lossy(&o.stderr).contains("8 trials, 7 already done"));
    assert_eq!(fs::read(&victim).unwrap(), before);

    let sweep = fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 9);
    assert!(sweep.starts_with("size,density,flows,mobility,jammer,protocol,seed,"));

    let o = qfgeo(&["report", "--input", "sw"], dir.path());
    assert_eq!(code(&o), 0);
    let flows = fs::read_to_string(dir.path().join("sw/summary_flows.csv")).unwrap();
    let lines: Vec<&str> = flows.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("1,gf,2,"));
}
