use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn inflate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inflate")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, out: &str) -> String {
    let path = dir.join(format!("{out}.json"));
    let text = format!(
        r#"{{"equation": "nls_uu", "family": "cube_pair", "s": -1.2, "N_list": [16, 32, 64, 128],
            "n_max": 4, "params": {{"engine": "quadrature"}}, "seed": 3, "out_dir": "{}"}}"#,
        dir.join(out).display()
    );
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run");
    let first = inflate(&["sweep", "--config", &cfg, "--no-cache"]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let a = fs::read(dir.path().join("run/records.csv")).unwrap();
    let second = inflate(&["sweep", "--config", &cfg]);
    assert!(second.status.success());
    let b = fs::read(dir.path().join("run/records.csv")).unwrap();
    let third = inflate(&["sweep", "--config", &cfg]);
    assert!(third.status.success());
    let c = fs::read(dir.path().join("run/records.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(b, c);
    let header = String::from_utf8(a).unwrap();
    assert!(header.starts_with("scenario,N,A,theta,t,norm_u0_Hs,norm_u0_FL1,norm_Ip_Hs,metric_series_Hs,dominance_ratio,cond_all_ok,status\n"));
}

#[test]
fn report_fits_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rep");
    assert!(inflate(&["sweep", "--config", &cfg, "--no-cache"]).status.success());
    let csv = dir.path().join("rep/records.csv");
    let svg = dir.path().join("plot.svg");
    let out = inflate(&["report", "--in", csv.to_str().unwrap(), "--plot", svg.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("slope"));
    assert!(fs::read_to_string(svg).unwrap().contains("<polyline"));
}

#[test]
fn iterate_prints_one_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "one");
    let out = inflate(&["iterate", "--config", &cfg, "--N", "64"]);
    assert!(out.status.success());
    let rec: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec["n"], 64.0);
    assert_eq!(rec["status"], "ok");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"equation": "kawahara(1)", "family": "kawahara_window", "s": -0.1, "N_list": [32], "n_max": 4}"#).unwrap();
    let out = inflate(&["iterate", "--config", bad.to_str().unwrap(), "--N", "32"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("s<-2"));

    let only = dir.path().join("only.json");
    fs::write(&only, r#"{"checks": ["modulation_identity"]}"#).unwrap();
    let ok = inflate(&["verify", "--config", only.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    let broken = inflate(&["verify", "--config", only.to_str().unwrap(), "--inject-fault", "modulation-sign"]);
    assert_eq!(broken.status.code(), Some(3));

    let empty = dir.path().join("empty.json");
    fs::write(&empty, r#"{"checks": ["sequence_exact"]}"#).unwrap();
    assert_eq!(inflate(&["verify", "--config", empty.to_str().unwrap()]).status.code(), Some(0));
}
