//! The `qnm` binary on the bundled configurations at coarse resolution.

use std::path::{Path, PathBuf};
use std::process::Command;

use qnm::cli::pipeline::{DISTANCE_FILE, MODEVOL_FILE, MODE_FILE, PROPAGATOR_FILE, REPORT_FILE, SPECTRUM_FILE};
use qnm::solver::container;
use qnm::solver::mode::NormState;

const CSV_FILES: [&str; 4] = [MODEVOL_FILE, SPECTRUM_FILE, DISTANCE_FILE, PROPAGATOR_FILE];

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn qnm(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qnm")).args(args).env("QNM_LOG", "warn").output().expect("binary runs")
}

fn run_into(sub: &str, cfg: &str, out: &Path, h: &str) -> std::process::Output {
    let cfg = config(cfg);
    qnm(&[sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--resolution-override", h])
}

fn report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(REPORT_FILE)).unwrap()).unwrap()
}

#[test]
fn rod_pipeline_is_complete_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run_into("run", "paper-2d-rod.json", out, "2 nm");
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in CSV_FILES.iter().chain(&[MODE_FILE, REPORT_FILE]) {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        assert!(!x.is_empty(), "{f} is empty");
        assert_eq!(x, y, "{f} differs between identical runs");
    }

    let r = report(&a);
    assert_eq!(r["zero_contrast"], false);
    let re = r["eigenfrequency_thz"]["re"].as_f64().unwrap();
    assert!((re - 415.863).abs() < 0.02 * 415.863, "{re}");
    assert_eq!(r["normalization"]["converged"], true);
    assert!(r["v_eff_nm2"].as_f64().unwrap() > 0.0);
    assert_eq!(r["checks"].as_array().unwrap().len(), 3);

    let spectrum = std::fs::read_to_string(a.join(SPECTRUM_FILE)).unwrap();
    let mut lines = spectrum.lines();
    assert_eq!(lines.next().unwrap(), "omega_thz,F_a_oracle,F_a_f,F_a_far,F_a_out,F_a_born");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 13);
    // on resonance the enhancement is large and the approximations bracket the oracle loosely
    let mid = &rows[6];
    assert!(mid[1] > 10.0 && (mid[3] - mid[1]).abs() < 0.3 * mid[1], "{mid:?}");

    let mode = container::read(&a.join(MODE_FILE)).unwrap();
    assert!(matches!(mode.norm_state, NormState::Normalized { .. }));
    assert_eq!(container::encode(&mode).unwrap(), std::fs::read(a.join(MODE_FILE)).unwrap());
}

#[test]
fn find_writes_only_the_raw_mode() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into("find", "paper-2d-rod.json", dir.path(), "2.5");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mode = container::read(&dir.path().join(MODE_FILE)).unwrap();
    assert_eq!(mode.norm_state, NormState::Raw);
    assert!((mode.disc.h - 2.5e-9).abs() < 1e-20);
    for f in CSV_FILES {
        assert!(!dir.path().join(f).exists(), "{f} should not be written by find");
    }
    assert_eq!(report(dir.path())["normalization"], serde_json::Value::Null);
}

#[test]
fn zero_contrast_rows_are_unity() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into("run", "zero-contrast.json", dir.path(), "2 nm");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(dir.path())["zero_contrast"], true);
    for f in [SPECTRUM_FILE, DISTANCE_FILE] {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        for row in text.lines().skip(1) {
            for v in row.split(',').skip(1).filter(|v| !v.is_empty()) {
                assert_eq!(v.parse::<f64>().unwrap(), 1.0, "{f}: {row}");
            }
        }
    }
}

#[test]
fn bad_configs_fail_with_structured_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let mut text: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(config("paper-2d-rod.json")).unwrap()).unwrap();
    text["grid"]["h"] = "1".into();
    std::fs::write(&bad, text.to_string()).unwrap();
    let o = qnm(&["run", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert!(!dir.path().join(REPORT_FILE).exists());

    text["grid"]["h"] = "1 nm".into();
    text["extra"] = 1.into();
    std::fs::write(&bad, text.to_string()).unwrap();
    let o = qnm(&["find", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field"));
}

#[test]
fn unconverged_normalization_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tight.json");
    let mut text: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(config("paper-2d-rod.json")).unwrap()).unwrap();
    text["normalization"]["tolerance"] = 1e-9.into();
    std::fs::write(&path, text.to_string()).unwrap();
    let o = qnm(&["normalize", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--resolution-override", "2.5"]);
    assert_eq!(o.status.code(), Some(4));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "norm_not_converged");
}
