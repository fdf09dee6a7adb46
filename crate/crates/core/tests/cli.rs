use std::process::Command;

fn orbifold() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orbifold"))
}

#[test]
fn malformed_config_exits_two_with_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[theta]\ndelta = \"half\"\n").unwrap();
    let out = orbifold().args(["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "periods"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config_invalid");
    assert_eq!(err["path"], "theta.delta");
}

#[test]
fn computation_error_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("oblique.toml");
    std::fs::write(&cfg, "[curve]\nbranch_points = [[-0.7, 0.2], [0.1, -0.3], [1.1, 0.4]]\n").unwrap();
    let out = orbifold()
        .args(["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "bifurcate", "--steps", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "computation_failed");
}

#[test]
fn same_seed_same_bytes() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let st = orbifold().args(["--out", d.path().to_str().unwrap(), "--seed", "7", "--threads", "2", "spectrum"]).output().unwrap().status;
        assert!(st.success());
    }
    for f in ["eigenvalues.csv", "spectrum.json", "manifest.json"] {
        assert_eq!(std::fs::read(dirs[0].path().join(f)).unwrap(), std::fs::read(dirs[1].path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn bifurcate_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let st = orbifold()
        .args(["--out", dir.path().to_str().unwrap(), "bifurcate", "--kappa", "3.6", "--r-min", "0.98", "--r-max", "1.0", "--steps", "2"])
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(dir.path().join("branch.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "config_hash,r,kappa_c,amplitude,residual,detuning,status");
    assert_eq!(text.lines().count(), 3);
}
