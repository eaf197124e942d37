//! End-to-end runs of the `mechfringe` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn mechfringe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mechfringe")).args(args).output().expect("binary runs")
}

fn run_in(verb: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![verb, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    mechfringe(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn exit_code_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let sample = std::fs::read_to_string(fixture("sample.toml")).unwrap();

    let unknown = write_config(tmp.path(), "unknown.toml", &sample.replace("target = 2000", "target = 2000\ntargte = 1"));
    assert_eq!(code(&run_in("sample", &unknown, &tmp.path().join("a"), &[])), 2);

    let unseeded: String = sample.lines().filter(|l| !l.starts_with("seed")).map(|l| format!("{l}\n")).collect();
    let unseeded = write_config(tmp.path(), "unseeded.toml", &unseeded);
    assert_eq!(code(&run_in("sample", &unseeded, &tmp.path().join("b"), &[])), 2);
    let seeded_by_flag = run_in("sample", &unseeded, &tmp.path().join("b"), &["--seed", "5"]);
    assert_eq!(code(&seeded_by_flag), 0, "{}", String::from_utf8_lossy(&seeded_by_flag.stderr));

    let bad_event = write_config(
        tmp.path(),
        "event.toml",
        &std::fs::read_to_string(fixture("filter.toml")).unwrap().replace("\"1,1\"", "\"1;1\""),
    );
    assert_eq!(code(&run_in("filter", &bad_event, &tmp.path().join("c"), &[])), 2);

    let impossible =
        write_config(tmp.path(), "zero.toml", "measurement = \"1,1\"\nnbar = 0.0\n[coupling]\nmu = 0.0\nphi = 0.0\n");
    assert_eq!(code(&run_in("wigner", &impossible, &tmp.path().join("d"), &[])), 3);

    let out = tmp.path().join("e");
    assert_eq!(code(&run_in("herald", &fixture("herald.toml"), &out, &[])), 0);
    assert_eq!(code(&run_in("herald", &fixture("herald.toml"), &out, &[])), 4);
    assert_eq!(code(&run_in("herald", &fixture("herald.toml"), &out, &["--overwrite"])), 0);

    assert_eq!(code(&run_in("sample", &fixture("sample.toml"), &tmp.path().join("f"), &["--format", "bin"])), 2);
    assert_eq!(code(&mechfringe(&["herald"])), 2);
}

#[test]
fn every_output_carries_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    assert_eq!(code(&run_in("sample", &fixture("sample.toml"), &out, &["--threads", "1"])), 0);
    for entry in std::fs::read_dir(&out).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        if path.extension().unwrap() == "csv" {
            let mut lines = text.lines();
            assert!(lines.next().unwrap().starts_with("# mechfringe "));
            assert!(lines.next().unwrap().starts_with("# config-sha256 "));
            assert_eq!(lines.next().unwrap(), "# seed 2024");
        } else {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["provenance"]["seed"], 2024);
            assert_eq!(v["provenance"]["config_sha256"].as_str().unwrap().len(), 64);
        }
    }
}

#[test]
fn binary_wigner_dump_has_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("w");
    assert_eq!(code(&run_in("wigner", &fixture("wigner.toml"), &out, &["--format", "bin"])), 0);
    let bytes = std::fs::read(out.join("wigner.bin")).unwrap();
    let grid = mechfringe_core::wigner::read_wigner_binary(bytes.as_slice()).unwrap();
    assert_eq!(bytes.len(), 8 * (4 + grid.nx * grid.np));
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("wigner.bin.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["provenance"]["command"], "wigner");
}

#[test]
fn summary_flag_prints_json() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in("wigner", &fixture("wigner.toml"), &tmp.path().join("w"), &["--summary", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let closed = v["min_w_closed"].as_f64().unwrap();
    let numeric = v["min_w_numeric"]["value"].as_f64().unwrap();
    assert!((closed - numeric).abs() < 1e-8);
    assert!(v["marginal_max_deviation"].as_f64().unwrap() < 1e-5);
    assert!(tmp.path().join("w/wigner.json").exists());
}

#[test]
fn filter_peaks_double_for_coincidences() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in("filter", &fixture("filter.toml"), &tmp.path().join("f"), &["--summary"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let peaks = |k: usize| v["events"][k]["peaks"].as_u64().unwrap();
    assert_eq!(peaks(3), 2 * peaks(2));
    // {0,0} is the thermal distribution times a constant
    let text = std::fs::read_to_string(tmp.path().join("f/distribution.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('x'))
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    let v = 9.0;
    let ratio = |r: &Vec<f64>| r[1] / ((-r[0] * r[0] / v).exp() / (std::f64::consts::PI * v).sqrt());
    let r0 = ratio(&rows[0]);
    assert!(rows.iter().all(|r| (ratio(r) / r0 - 1.0).abs() < 1e-12));
}
