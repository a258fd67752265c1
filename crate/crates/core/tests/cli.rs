use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sagnac(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sagnac"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("SAGNAC_LOG", "error")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn plan_defaults_succeed() {
    let tmp = TempDir::new().unwrap();
    let out = sagnac(&["plan"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.trim().ends_with("manifest.txt"));
    let rows = csv_rows(&tmp.path().join("plan/plan.csv"));
    assert_eq!(rows.len(), 20);
    assert_eq!((rows[0][0].as_str(), rows[0][1].as_str()), ("19", "23"));
    assert_eq!((rows[19][0].as_str(), rows[19][1].as_str()), ("0", "42"));
}

#[test]
fn bad_config_reports_file_and_line() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "seed = 3\n\n[tomography]\nwerner_p = 1.5\n");
    let out = sagnac(&["tomography", "--config", &cfg], &tmp.path().join("o"));
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains(&format!("{cfg}:4")), "{stderr}");

    let cfg = write_config(tmp.path(), "seed = 3\nbogus_key = 1\n");
    let out = sagnac(&["plan", "--config", &cfg], &tmp.path().join("o"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains(&format!("{cfg}:2")));
}

#[test]
fn unknown_command_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let out = sagnac(&["teleport"], tmp.path());
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn channels_flag_overrides_plan() {
    let tmp = TempDir::new().unwrap();
    let out = sagnac(&["plan", "--channels", "18:24,0:42"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&tmp.path().join("plan/plan.csv"));
    let pairs: Vec<_> = rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    assert_eq!(pairs, [("18".into(), "24".into()), ("0".into(), "42".into())]);

    let out = sagnac(&["plan", "--channels", "19:24"], &tmp.path().join("bad"));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical_and_seed_matters() {
    let tmp = TempDir::new().unwrap();
    let read = |dir: &Path| fs::read(dir.join("timetags/timetags.bin")).unwrap();

    let a = tmp.path().join("a");
    assert_eq!(sagnac(&["timetags", "--seed", "11"], &a).status.code(), Some(0));
    let first = read(&a);
    let manifest = fs::read(a.join("timetags/manifest.txt")).unwrap();
    fs::remove_dir_all(&a).unwrap();
    assert_eq!(sagnac(&["timetags", "--seed", "11"], &a).status.code(), Some(0));
    assert_eq!(read(&a), first);
    assert_eq!(fs::read(a.join("timetags/manifest.txt")).unwrap(), manifest);

    assert_eq!(sagnac(&["timetags", "--seed", "12"], &a).status.code(), Some(0));
    assert_ne!(read(&a), first);
}

#[test]
fn outage_yields_warning_exit() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[qkd.session]\nduration_s = 600.0\n\n[[qkd.events]]\nkind = \"outage\"\nstart_s = 100.0\nduration_s = 60.0\n",
    );
    let out = sagnac(&["qkd", "--config", &cfg], &tmp.path().join("o"));
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&tmp.path().join("o/qkd/session.csv"));
    assert_eq!(rows.len(), 60);
    assert!(rows.iter().any(|r| r[4].parse::<f64>().unwrap() == 0.0));

    let out = sagnac(&["qkd"], &tmp.path().join("clean"));
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn tomography_sweep_fidelities() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[tomography]\nbootstrap_replicas = 10\n");
    let out = sagnac(&["tomography", "--config", &cfg], &tmp.path().join("o"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&tmp.path().join("o/tomography/fidelity.csv"));
    assert_eq!(rows.len(), 20);
    for r in &rows {
        let f: f64 = r[2].parse().unwrap();
        assert!((0.955..=0.985).contains(&f), "{r:?}");
        assert_eq!(r[7], "ok");
    }
    let report = fs::read_to_string(tmp.path().join("o/tomography/tomography_report.txt")).unwrap();
    assert_eq!(report.matches("[[channel]]").count(), 20);
}
