use std::path::Path;
use std::process::Command;

use dispersive_core::lab::{
    preset, read_manifest, read_table, run_scenario, verify_hashes, ScenarioKind,
};

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dispersive-lab"))
}

fn run_into(kind: ScenarioKind, dir: &Path) -> dispersive_core::lab::RunManifest {
    let mut cfg = preset(kind);
    cfg.out = Some(dir.to_path_buf());
    run_scenario(&cfg).unwrap()
}

fn same_files(a: &Path, b: &Path, names: &[&str]) {
    for name in names {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert!(x == y, "{name} differs between replays");
    }
}

#[test]
fn decay_replay_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m = run_into(ScenarioKind::LinearDecayKdv, a.path());
    run_into(ScenarioKind::LinearDecayKdv, b.path());
    assert!(m.pass);
    same_files(a.path(), b.path(), &["norms.csv", "probes.csv", "fit.json"]);
}

#[test]
fn corpus_replay_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_into(ScenarioKind::LorentzUnit, a.path());
    run_into(ScenarioKind::LorentzUnit, b.path());
    same_files(a.path(), b.path(), &["inequality.csv", "inequality_calibration.csv"]);
}

#[test]
fn manifest_lists_every_file_with_its_hash() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_into(ScenarioKind::LinearDecayKdv, dir.path());
    let on_disk = read_manifest(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(on_disk.files, m.files);
    assert!(verify_hashes(dir.path(), &on_disk).unwrap().is_empty());
    let mut listed: Vec<String> = m.files.iter().map(|f| f.path.clone()).collect();
    listed.sort();
    let mut present: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    present.sort();
    assert_eq!(listed, present);
    let (header, rows) = read_table(&dir.path().join("norms.csv")).unwrap();
    assert_eq!(header[0], "t");
    assert_eq!(rows.len(), m.snapshots);
}

#[test]
fn degenerate_amplitude_is_rejected() {
    let mut cfg = preset(ScenarioKind::LinearDecayKdv);
    cfg.data.amplitude = 0.0;
    let err = run_scenario(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("degenerate"), "{err}");
}

#[test]
fn cli_dry_run_prints_resolved_config() {
    let out = lab().args(["kato", "--dry-run", "--set", "kato.dt=0.02"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"kato_identity\""), "{text}");
    assert!(text.contains("0.02"));
}

#[test]
fn cli_rejects_unknown_keys_and_bad_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "scenario = \"linear_decay_kdv\"\n[time]\ndt_rulee = 3\n").unwrap();
    let out = lab().args(["linear-decay", "--dry-run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt_rulee"));

    let out = lab().args(["nonlinear-decay", "--k", "0", "--dry-run"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("equation.k"));

    let out = lab().args(["linear-decay", "--dim", "5", "--dry-run"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = lab().args(["kato", "--dry-run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "scenario mismatch");
}

#[test]
fn cli_long_running_needs_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab()
        .args(["linear-decay", "--dim", "4", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("long-running"));
}

#[test]
fn cli_run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("kdv");
    let out = lab().args(["linear-decay", "--out"]).arg(&run_dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let out = lab().arg("report").arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("hashes ok"));

    std::fs::write(run_dir.join("norms.csv"), "t\n").unwrap();
    let out = lab().arg("report").arg(&run_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("hash mismatch"));
}
