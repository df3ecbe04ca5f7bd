use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mimo-switch"));
    cmd.env_remove("MIMOSWITCH_OUT");
    cmd
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn table1_shape_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["table1", "--channels", "6", "--seed", "4"];
    let first = run(&args, dir.path());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let table = read(dir.path().join("table1.csv"));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines.iter().all(|l| l.split(',').count() == 9));
    assert!(lines[0].starts_with("snr_db,opposite_phase,maxmin_reference"));
    let json = read(dir.path().join("table1.json"));
    assert!(json.contains("\"config_hash\"") && json.contains("\"master_seed\": 4"));

    let again = tempfile::tempdir().unwrap();
    assert!(run(&args, again.path()).status.success());
    for f in ["table1.csv", "table1_points.csv", "table1.json"] {
        assert_eq!(read(dir.path().join(f)), read(again.path().join(f)), "{f}");
    }
}

#[test]
fn table2_reports_wider_errors_with_fewer_channels() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["table2", "--channels", "3", "--snr", "10"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = read(dir.path().join("table2.csv"));
    assert_eq!(lines.lines().count(), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("max stderr"));
}

#[test]
fn sweep_rows_and_gnuplot() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["sweep", "--schemes", "basic,opposite_phase", "--snr", "-5,0,5,10,15", "--channels", "20", "--gnuplot"])
        .env("MIMOSWITCH_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path().join("sweep.csv"));
    assert_eq!(csv.lines().count(), 11);
    assert_eq!(csv.lines().next().unwrap(), "scheme,snr_db,mean_tput,stderr,channels,rejected");
    let dat = read(dir.path().join("sweep.dat"));
    assert_eq!(dat.lines().filter(|l| !l.starts_with('#')).count(), 5);
}

#[test]
fn sweep_json_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["sweep", "--channels", "4", "--format", "json"], dir.path());
    assert!(out.status.success());
    assert!(!dir.path().join("sweep.csv").exists());
    let v: serde_json::Value = serde_json::from_str(&read(dir.path().join("sweep.json"))).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 4);
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fig.toml");
    std::fs::write(
        &cfg,
        "n = 4\npattern = \"non_pairwise_asymmetric\"\nchannels = 5\nschemes = [\"basic\", \"pnc_identical_b\"]\nsnr_points_db = [0.0, 20.0]\n",
    )
    .unwrap();
    let out = run(&["sweep", "--config", cfg.to_str().unwrap(), "--channels", "3"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path().join("sweep.csv"));
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(4) == Some("3")));
}

#[test]
fn unknown_scheme_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["sweep", "--schemes", "best_scheme"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("best_scheme") && err.contains("pnc_phase_aligned") && err.contains("opposite_phase"));
}

#[test]
fn pairing_requirement_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["sweep", "--schemes", "pnc_phase_aligned", "--pattern", "nonpairwise", "--stations", "4"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pairwise"));
}

#[test]
fn bad_flags_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["sweep", "--channels", "many"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--channels", "0"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["table1", "--schemes", "basic"], dir.path()).status.code(), Some(1));
    assert_eq!(bin().arg("launch").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    let blocked = dir.path().join("file");
    std::fs::write(&blocked, "").unwrap();
    assert_eq!(run(&["sweep", "--channels", "2"], &blocked).status.code(), Some(1));
}

#[test]
fn single_channel_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["single", "--schemes", "opposite_phase,maxmin_sdr,sdr_upper", "--snr", "10", "--format", "json"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&read(dir.path().join("single.json"))).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let t: Vec<f64> = rows.iter().map(|r| r["worst_tput"].as_f64().unwrap()).collect();
    assert!(t[0] <= t[1] + 1e-9 && t[1] <= t[2] + 1e-7, "{t:?}");
}

#[test]
fn verify_passes_and_catches_faults() {
    let ok = bin().args(["verify", "--instances", "4"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS") || l.starts_with("     ")));

    let bad = bin().args(["verify", "--instances", "4", "--inject-fault"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL psd"));
}

#[test]
fn verify_is_seed_robust() {
    for seed in 0..10 {
        let out = bin().args(["verify", "--instances", "2", "--seed", &seed.to_string()]).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "seed {seed}: {}", String::from_utf8_lossy(&out.stdout));
    }
}
