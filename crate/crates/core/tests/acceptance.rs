//! One test per acceptance criterion. Each prints a single PASS/FAIL line.
//! Thresholds are the constants in `orbifold_ymh::checks`.

use orbifold_ymh::checks::{self, CheckOutcome};
use orbifold_ymh::config::RunConfig;
use orbifold_ymh::harness::{self, Command};
use std::sync::OnceLock;

fn report(o: &CheckOutcome) {
    println!("{}", checks::summary_line(o));
    for (k, v) in &o.metrics {
        println!("    {k} = {v:e}");
    }
}

fn assert_passed(o: &CheckOutcome) {
    report(o);
    assert!(o.passed, "{}", checks::summary_line(o));
}

#[test]
fn criterion_1_theta_automorphy() {
    assert_passed(&checks::theta_automorphy(&RunConfig::default()));
}

#[test]
fn criterion_2_half_periods() {
    assert_passed(&checks::half_periods(&RunConfig::default()));
}

#[test]
fn criterion_3_jump_conditions() {
    assert_passed(&checks::rh_jump(&RunConfig::default()));
}

#[test]
fn criterion_4_fuchsian_oracle() {
    assert_passed(&checks::fuchsian_oracle(&RunConfig::default()));
}

#[test]
fn criterion_5_monodromy_relations() {
    assert_passed(&checks::monodromy(&RunConfig::default()));
}

#[test]
fn criterion_6_chern_weil() {
    assert_passed(&checks::chern_weil_degrees(&RunConfig::default()));
}

fn spectral() -> &'static CheckOutcome {
    static OUT: OnceLock<CheckOutcome> = OnceLock::new();
    OUT.get_or_init(|| checks::spectral(&RunConfig::default()))
}

#[test]
fn criterion_7_landau_spectrum() {
    let o = spectral();
    report(o);
    let m = &o.metrics;
    let ok = m["lowest_relative_error"] < checks::LOWEST_LEVEL
        && m["min_ratio"] >= 1.0 - checks::LOWER_BOUND
        && m["second_level_relative_error"] < checks::SECOND_LEVEL
        && m["weitzenbock_order"] >= checks::WEITZENBOCK_ORDER.0
        && m["weitzenbock_order"] <= checks::WEITZENBOCK_ORDER.1;
    println!("[{}] 7a Landau spectrum and Weitzenböck order", if ok { "PASS" } else { "FAIL" });
    assert!(ok);
}

#[test]
fn criterion_7_explicit_ground_state() {
    let o = spectral();
    let m = &o.metrics;
    let ok = m["explicit_rayleigh_relative_error"] < checks::GROUND_STATE && m["equivariance_defect"] < checks::EQUIVARIANCE;
    println!(
        "[{}] 7b explicit section: Rayleigh relative error {:e}, equivariance defect {:e}",
        if ok { "PASS" } else { "FAIL" },
        m["explicit_rayleigh_relative_error"],
        m["equivariance_defect"]
    );
    assert!(ok);
}

#[test]
fn criterion_8_bifurcation() {
    assert_passed(&checks::bifurcation_branch(&RunConfig::default()));
}

#[test]
fn criterion_9_verify_is_deterministic() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let runs: Vec<_> = dirs
        .iter()
        .map(|d| {
            let cfg = RunConfig { output_dir: d.path().to_path_buf(), ..RunConfig::default() };
            harness::run(&Command::Verify, &cfg).unwrap()
        })
        .collect();
    let mut files: Vec<String> = runs[0].manifest.artifacts.iter().map(|a| a.file.clone()).collect();
    files.push("manifest.json".into());
    let same = files.iter().all(|f| std::fs::read(dirs[0].path().join(f)).unwrap() == std::fs::read(dirs[1].path().join(f)).unwrap());
    println!("[{}] 9 determinism across two verify runs ({} files)", if same { "PASS" } else { "FAIL" }, files.len());
    assert!(same);
}
