use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wiener-chaos"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("run binary")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert!(bin().arg("--help").status().unwrap().success());
    assert!(bin().arg("--version").status().unwrap().success());
    assert!(bin().args(["diagnose", "--help"]).status().unwrap().success());
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin().output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["sweep-fbm", "--hurst", "1.5"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error kind=usage reason="), "{}", stderr(&o));
    let o = run(&["diagnose", "--family", "nope"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["sample", "--statistic", "l-eps"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--eps"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_is_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("plain");
    fs::write(&file, "x").unwrap();
    let o = run(&["validate", "--only", "5"], &file.join("sub"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("kind=io"), "{}", stderr(&o));
}

#[test]
fn constant_cross_is_flagged() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["diagnose", "--family", "constant-cross", "--samples", "10000"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&tmp.path().join("diagnose.csv"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for row in &rows {
        let k: f64 = row[col("mc_kurtosis")].parse().unwrap();
        let se: f64 = row[col("mc_kurtosis_se")].parse().unwrap();
        assert!((k - 9.0).abs() <= 4.0 * se, "{k} +/- {se}");
        assert_eq!(row[col("ks_pass")], "false");
        assert_eq!(row[col("fourth_moment")].parse::<f64>().unwrap(), 9.0);
    }
    assert_eq!(summary(tmp.path())["results"]["report"]["verdict"], "Inconsistent");
}

#[test]
fn schema_matches_csv_header() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["diagnose", "--family", "clt", "--samples", "200"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&tmp.path().join("diagnose.csv"));
    assert_eq!(rows.len(), 4);
    let schema: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("diagnose.schema.json")).unwrap()).unwrap();
    let names: Vec<&str> = schema["columns"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, header);
    assert_eq!(summary(tmp.path())["results"]["report"]["verdict"], "Consistent");
    assert!(tmp.path().join("timing.json").exists());
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# diagnose run\ncommand = diagnose\nfamily = clt\nsamples = 150\nschedule = 4,16\n").unwrap();
    let out = tmp.path().join("out");
    let o = bin()
        .args(["--config"])
        .arg(&cfg)
        .args(["--samples", "120", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(&out);
    assert_eq!(s["config"]["samples"], 120);
    assert_eq!(s["config"]["schedule"], serde_json::json!([4.0, 16.0]));
    assert_eq!(read_csv(&out.join("diagnose.csv")).1.len(), 2);
}

#[test]
fn validate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["validate", "--only", "1,5"], &tmp.path().join("ok"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("[PASS]  1 ") && stdout.contains("[PASS]  5 "), "{stdout}");
    let (_, rows) = read_csv(&tmp.path().join("ok/validate.csv"));
    assert_eq!(rows.len(), 2);
}

#[test]
fn sample_output_is_thread_independent() {
    let tmp = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for t in ["1", "4"] {
        let out = tmp.path().join(t);
        let o = bin()
            .args(["--threads", t, "sample", "--statistic", "f-beta", "--beta=-0.3", "--samples", "500", "--cells", "64", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        files.push((fs::read(out.join("sample.csv")).unwrap(), fs::read(out.join("summary.json")).unwrap()));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn sample_routes_agree_in_distribution() {
    let tmp = tempfile::tempdir().unwrap();
    let mut stats = Vec::new();
    for route in ["spectral", "chaos", "direct"] {
        let out = tmp.path().join(route);
        let o = run(
            &["sample", "--statistic", "a-beta", "--beta=-0.5", "--route", route, "--samples", "4000", "--cells", "64"],
            &out,
        );
        assert!(o.status.success(), "{}", stderr(&o));
        let s = summary(&out)["results"]["summary"].clone();
        stats.push((s["variance"].as_f64().unwrap(), s["se_variance"].as_f64().unwrap()));
    }
    for (v, se) in &stats[1..] {
        let (v0, se0) = stats[0];
        assert!((v - v0).abs() <= 4.0 * (se * se + se0 * se0).sqrt(), "{stats:?}");
    }
}

#[test]
fn sweep_outputs_have_one_row_per_point() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["sweep-fbm", "--eps", "0.1,0.01", "--samples", "300", "--cells", "64"], &tmp.path().join("f"));
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_csv(&tmp.path().join("f/sweep-fbm.csv")).1.len(), 2);
    let o = run(&["sweep-sheet", "--dims", "2", "--beta=-0.5", "--samples", "300", "--cells", "16"], &tmp.path().join("s"));
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&tmp.path().join("s/sweep-sheet.csv"));
    let c = header.iter().position(|h| h == "closed_form_variance").unwrap();
    assert!((rows[0][c].parse::<f64>().unwrap() - 0.5).abs() < 1e-15);
    let o = run(&["sweep-fbm", "--eps", "0.1", "--beta", "0.2"], &tmp.path().join("x"));
    assert_eq!(o.status.code(), Some(1));
}
