use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use enskog_lab::{parse_config, run_scenario, Mode};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_enskog-lab"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn base_config(extra: &str) -> String {
    format!(
        r#"{{
    "dimension": 3,
    "kernel": {{
        "sigma": {{"gamma": 0.0}},
        "angular": {{"kind": "long_range", "nu": 0.5}},
        "cutoff": 0.1,
        "beta": {{"rho": 1.0}}
    }},
    "sim": {{
        "n": 40, "dt": 0.01, "t_end": 0.2, "seed": 7,
        "snapshot_times": [0.0, 0.1, 0.2],
        "init": {{"kind": "gaussian", "r_mean": [0,0,0], "r_std": 0.5, "v_mean": [0,0,0], "v_std": 1.0}}
    }}{extra}
}}"#
    )
}

fn error_record(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("stderr record");
    serde_json::from_str(line).expect("json error record")
}

#[test]
fn misspelled_key_is_config_error_naming_path() {
    let dir = tempfile::tempdir().unwrap();
    let text = base_config("").replace("\"gamma\": 0.0", "\"gama\": 0.0");
    let cfg = write(dir.path(), "c.json", &text);
    let out = bin().args(["simulate", "--config"]).arg(&cfg).arg("--validate-only").output().unwrap();
    assert!(!out.status.success());
    let rec = error_record(&out);
    assert_eq!(rec["error"], "config-error");
    let msg = rec["message"].as_str().unwrap();
    assert!(msg.contains("kernel.sigma"), "{msg}");
    assert!(msg.contains("gama"), "{msg}");
}

#[test]
fn missing_file_is_io_error() {
    let out = bin()
        .args(["simulate", "--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert_eq!(error_record(&out)["error"], "io-error");
}

#[test]
fn mode_mismatch_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &base_config(",\n\"mode\": \"audit\""));
    let out = bin().args(["simulate", "--config"]).arg(&cfg).arg("--validate-only").output().unwrap();
    assert!(!out.status.success());
    assert_eq!(error_record(&out)["error"], "config-error");
}

#[test]
fn validate_only_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &base_config(""));
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--validate-only")
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out_dir.exists());
}

#[test]
fn simulate_writes_snapshots_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &base_config(""));
    let out_dir = dir.path().join("out");
    let out = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(out_dir.join("snapshots.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,particle_id,r1,r2,r3,v1,v2,v3");
    assert_eq!(lines.count(), 3 * 40);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["files"], serde_json::json!(["snapshots.csv"]));
    let mut on_disk: Vec<_> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    on_disk.sort();
    assert_eq!(on_disk, ["manifest.json", "snapshots.csv"]);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let one = write(dir.path(), "one.json", &base_config(""));
    let two = write(dir.path(), "two.json", &base_config(",\n\"threads\": 2"));
    let mut outputs = Vec::new();
    for (i, cfg) in [&one, &one, &two].iter().enumerate() {
        let out_dir = dir.path().join(format!("out{i}"));
        let loaded = parse_config(cfg).unwrap();
        run_scenario(Mode::Simulate, &loaded, &out_dir).unwrap();
        outputs.push(fs::read(out_dir.join("snapshots.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn stability_with_zero_epsilon_has_zero_distance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &base_config(",\n\"stability\": {\"epsilon\": 0.0, \"calibration_seeds\": [8]}"),
    );
    let out_dir = dir.path().join("out");
    let loaded = parse_config(&cfg).unwrap();
    run_scenario(Mode::Stability, &loaded, &out_dir).unwrap();
    let csv = fs::read_to_string(out_dir.join("stability.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<_> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "w1_shifted").unwrap();
    let mut rows = 0;
    for line in lines {
        let v: f64 = line.split(',').nth(col).unwrap().parse().unwrap();
        assert_eq!(v, 0.0, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 3);
}

#[test]
fn metrics_reads_measures_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "mu.csv", "weight,r1,r2,r3,v1,v2,v3\n0.5,0,0,0,1,0,0\n0.5,1,0,0,0,0,0\n");
    write(dir.path(), "nu.csv", "weight,r1,r2,r3,v1,v2,v3\n1,0,0,0,1,0,0\n");
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"dimension": 3, "metrics": {"mu": "mu.csv", "nu": "nu.csv", "times": [0.0, 1.0]}}"#,
    );
    let out_dir = dir.path().join("out");
    let loaded = parse_config(&cfg).unwrap();
    run_scenario(Mode::Metrics, &loaded, &out_dir).unwrap();
    let csv = fs::read_to_string(out_dir.join("distances.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "t,w1_shifted,primal,dual,gap");
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        // Half the mass pays |dr - t dv| = 1 + t plus |dv| = 1.
        let expected = 0.5 * (2.0 + f[0]);
        assert!((f[1] - expected).abs() < 1e-12, "{line}");
        assert!(f[4].abs() < 1e-9, "{line}");
    }
}

#[test]
fn audit_writes_one_row_per_family() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"dimension": 3, "audit": {"samples": 2000, "seed": 3, "families": [
            {"family": "tanaka_shift"},
            {"family": "cross_section_difference", "gamma": 0.5}
        ]}}"#,
    );
    let out_dir = dir.path().join("out");
    let loaded = parse_config(&cfg).unwrap();
    run_scenario(Mode::Audit, &loaded, &out_dir).unwrap();
    let csv = fs::read_to_string(out_dir.join("audit.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("tanaka_shift"));
    assert!(csv.lines().nth(2).unwrap().ends_with("NA"));
}

#[test]
fn unknown_audit_family_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"dimension": 3, "audit": {"families": [{"family": "bogus"}]}}"#,
    );
    let out = bin().args(["audit", "--config"]).arg(&cfg).arg("--validate-only").output().unwrap();
    assert_eq!(error_record(&out)["error"], "config-error");
}
