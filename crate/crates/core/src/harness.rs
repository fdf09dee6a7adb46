//! Subcommand runners behind the `orbifold` binary.
//!
//! Every run writes its artifacts into the output directory together with
//! `manifest.json`, which lists each artifact with its SHA-256. JSON artifacts
//! carry a top-level `config_hash`; CSV artifacts carry it as the first column.

use crate::bifurcation::{self, null_space, SolveOptions};
use crate::checks::{self, CheckOutcome};
use crate::config::RunConfig;
use crate::connection::{self, chern_weil, fs_curvature_density, Domain, ParabolicData, ScalarConnection};
use crate::elliptic::{MetricScale, Sheet};
use crate::fuchsian;
use crate::linalg::{self, c};
use crate::rh::{ExplicitSolution, LoopKind};
use crate::spectral::weitzenbock::smooth_random_section;
use crate::spectral::{assemble, check_explicit_ground_state, spectrum_report, weitzenbock_residual, EigenOptions, TorusGrid};
use crate::theta;
use crate::{Error, Result, VERSION};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Periods,
    ThetaEval,
    SolveRh,
    Monodromy,
    Degree,
    Spectrum,
    Bifurcate { kappa: Option<f64>, r_min: Option<f64>, r_max: Option<f64>, steps: Option<usize> },
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Periods => "periods",
            Self::ThetaEval => "theta-eval",
            Self::SolveRh => "solve-rh",
            Self::Monodromy => "monodromy",
            Self::Degree => "degree",
            Self::Spectrum => "spectrum",
            Self::Bifurcate { .. } => "bifurcate",
            Self::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    pub artifacts: Vec<ArtifactEntry>,
    /// `(id, name, passed)` for `verify`.
    pub checks: Vec<(u8, String, bool)>,
    pub passed: bool,
}

#[derive(Debug)]
pub struct RunSummary {
    pub manifest: Manifest,
    pub out_dir: PathBuf,
    /// Human-readable lines for the terminal.
    pub lines: Vec<String>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.manifest.passed {
            0
        } else {
            1
        }
    }
}

struct Artifacts {
    dir: PathBuf,
    hash: String,
    entries: Vec<ArtifactEntry>,
}

impl Artifacts {
    fn new(dir: &Path, hash: String) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), hash, entries: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.entries.push(ArtifactEntry { file: name.into(), sha256: hex::encode(Sha256::digest(bytes)) });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<()> {
        let doc = json!({ "config_hash": self.hash, "data": data });
        let mut bytes = serde_json::to_vec_pretty(&doc)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut head = vec!["config_hash"];
        head.extend_from_slice(header);
        w.write_record(&head)?;
        for row in rows {
            let mut rec = vec![self.hash.clone()];
            rec.extend(row.iter().cloned());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        self.write(name, &bytes)
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn solution(cfg: &RunConfig) -> Result<ExplicitSolution> {
    ExplicitSolution::new(cfg.curve()?, cfg.characteristics())
}

fn eigen_options(cfg: &RunConfig) -> EigenOptions {
    EigenOptions { tol: cfg.tolerances.eigen, seed: cfg.seed, ..EigenOptions::default() }
}

fn periods(cfg: &RunConfig, art: &mut Artifacts, lines: &mut Vec<String>) -> Result<()> {
    let curve = cfg.curve()?;
    let hp: Vec<Value> = curve
        .half_periods()
        .iter()
        .map(|&(u, z)| {
            let mapped = curve.covering_map(u)?;
            Ok(json!({ "u": u, "branch_point": z, "covering_map": mapped, "error": (mapped - z).norm() }))
        })
        .collect::<Result<_>>()?;
    lines.push(format!("ω1 = {}, ω2 = {}, τ = {}", curve.lat.omega1, curve.lat.omega2, curve.lat.tau));
    art.json(
        "periods.json",
        &json!({
            "omega1": curve.lat.omega1,
            "omega2": curve.lat.omega2,
            "tau": curve.lat.tau,
            "basepoint": curve.z0,
            "normalized_area": curve.lat.normalized_area(),
            "half_periods": hp,
        }),
    )
}

fn theta_eval(cfg: &RunConfig, art: &mut Artifacts, lines: &mut Vec<String>) -> Result<()> {
    let curve = cfg.curve()?;
    let tau = curve.lat.tau;
    let ch = cfg.characteristics();
    let n = cfg.theta.samples;
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for k in 0..n {
        for j in 0..n {
            let u = (j as f64 + 0.5) / n as f64 + (k as f64 + 0.5) / n as f64 * tau;
            let t = theta::theta(u, tau, ch, theta::DEFAULT_TOL)?;
            let d = theta::check_automorphy(u, tau, ch, theta::DEFAULT_TOL)?;
            worst = worst.max(d.defect1).max(d.defect2);
            rows.push(vec![num(u.re), num(u.im), num(t.re), num(t.im), num(d.defect1), num(d.defect2)]);
        }
    }
    lines.push(format!("{} theta values, largest automorphy defect {worst:e}", rows.len()));
    art.csv("theta.csv", &["u_re", "u_im", "theta_re", "theta_im", "defect_one", "defect_tau"], &rows)
}

fn solve_rh(cfg: &RunConfig, art: &mut Artifacts, lines: &mut Vec<String>) -> Result<()> {
    let sol = solution(cfg)?;
    let jump = sol.verify_jump(&sol.cut_points(20))?;
    let residues = sol.extract_residues(64)?;
    let eig: Vec<_> = residues.iter().map(linalg::eigenvalues).collect();
    let a = sol.column_monodromy(LoopKind::A)?;
    let b = sol.column_monodromy(LoopKind::B)?;
    lines.push(format!("jump defect {:e} over {} cut points", jump.max_defect, jump.points));
    art.json(
        "rh.json",
        &json!({ "jump": jump, "residues": residues, "residue_eigenvalues": eig, "column_monodromy": [a, b] }),
    )?;
    let bp = sol.curve.bp.as_array();
    let m = bp.iter().sum::<crate::Complex64>() / 3.0;
    let s = bp.iter().map(|z| (z - m).norm()).fold(0.0, f64::max) * 1.5 + 0.5;
    let mut rows = Vec::new();
    for k in 0..9 {
        for j in 0..9 {
            let z = m + c(s * (j as f64 / 4.0 - 1.0), s * (k as f64 / 4.0 - 1.0));
            let Ok(y) = sol.eval_y(z, Sheet::One) else { continue };
            let mut row = vec![num(z.re), num(z.im)];
            for e in [y[(0, 0)], y[(0, 1)], y[(1, 0)], y[(1, 1)]] {
                row.push(num(e.re));
                row.push(num(e.im));
            }
            rows.push(row);
        }
    }
    art.csv(
        "y_samples.csv",
        &["z_re", "z_im", "y11_re", "y11_im", "y12_re", "y12_im", "y21_re", "y21_im", "y22_re", "y22_im"],
        &rows,
    )
}

fn monodromy(cfg: &RunConfig, art: &mut Artifacts, lines: &mut Vec<String>) -> Result<()> {
    let sol = solution(cfg)?;
    let sys = sol.fuchsian_system(64)?;
    let base = sol.curve.z0;
    let loops = fuchsian::standard_loops(&sys, base, 48)?;
    let rep = fuchsian::monodromy_generators(&sys, base, &loops, cfg.tolerances.ode)?;
    let form = fuchsian::check_nonparabolic_form(&rep);
    lines.push(format!(
        "product defect {:e}, largest square defect {:e}",
        rep.diagnostics.product_defect,
        rep.diagnostics.square_defects.iter().copied().fold(0.0, f64::max)
    ));
    art.json(
        "monodromy.json",
        &json!({
            "basepoint": rep.basepoint,
            "rho": rep.rho,
            "rho4_derived": rep.rho4_derived,
            "diagnostics": rep.diagnostics,
            "normal_form": form,
        }),
    )
}

fn degree(cfg: &RunConfig, art: &mut Artifacts, lines: &mut Vec<String>) -> Result<()> {
    let sol = solution(cfg)?;
    let fs = chern_weil(fs_curvature_density, Domain::Sphere, cfg.tolerances.quadrature.max(1e-10))?;
    let fs_fd = ScalarConnection::fubini_study().chern_weil_fd(1e-4, 1e-8)?;
    let res = sol.extract_residues(64)?;
    let flat = connection::flat_orbifold_degree(&res, &sol.curve.bp.as_array(), 1e-10)?;
    let line = sol.line_subbundle_residues()?;
    let metric = MetricScale::new(&sol.curve.lat, cfg.spectrum.r)?;
    let flux = connection::flux_constant(&ParabolicData::twisted(), &metric)?;
    lines.push(format!("FS degree {fs}, flat orbifold degree {:e}, b = {}", flat.par_degree, flux.b));
    art.json(
        "degree.json",
        &json!({
            "fubini_study": fs,
            "fubini_study_finite_difference": fs_fd,
            "flat_orbifold": flat,
            "twisted_parabolic_degree": ParabolicData::twisted().par_degree(),
            "line_subbundle": line,
            "metric": metric,
            "flux": flux,
        }),
    )
}

fn spectrum(cfg: &RunConfig, art: &mut Artifacts, lines: &mut Vec<String>) -> Result<()> {
    let sc = &cfg.spectrum;
    let sol = solution(cfg)?;
    let grid = TorusGrid::from_lattice(&sol.curve.lat, sc.grid, sc.r)?;
    let (rep, _) = spectrum_report(&grid, sc.flux_quanta, sc.eigenpairs, &eigen_options(cfg))?;
    let ground = if sc.flux_quanta == 2 { Some(check_explicit_ground_state(&sol, &grid)?) } else { None };
    let op = assemble(&grid, sc.flux_quanta as f64)?;
    let wz = weitzenbock_residual(&op, &smooth_random_section(grid, sc.flux_quanta, cfg.seed))?;
    lines.push(format!("b_r = {}, lowest eigenvalue {} (relative error {:e})", rep.b_r, rep.eigenvalues[0], rep.lowest_relative_error));
    let rows: Vec<Vec<String>> = rep
        .eigenvalues
        .iter()
        .zip(&rep.residuals)
        .enumerate()
        .map(|(i, (l, r))| vec![i.to_string(), num(*l), num(l / rep.b_r), num(*r)])
        .collect();
    art.csv("eigenvalues.csv", &["index", "eigenvalue", "ratio_to_b_r", "residual"], &rows)?;
    art.json("spectrum.json", &json!({ "report": rep, "explicit_ground_state": ground, "weitzenbock_residual": wz }))
}

fn bifurcate(
    cfg: &RunConfig,
    overrides: (Option<f64>, Option<f64>, Option<f64>, Option<usize>),
    art: &mut Artifacts,
    lines: &mut Vec<String>,
) -> Result<()> {
    let bc = &cfg.bifurcation;
    let kappa = overrides.0.unwrap_or(bc.kappa);
    let r_min = overrides.1.unwrap_or(bc.r_min);
    let r_max = overrides.2.unwrap_or(bc.r_max);
    let steps = overrides.3.unwrap_or(bc.steps);
    let curve = cfg.curve()?;
    let ns = null_space(bc.grid, curve.lat.tau, 2, bc.galerkin_modes, &eigen_options(cfg))?;
    let solve = SolveOptions { tol: cfg.tolerances.newton, ..SolveOptions::default() };
    let rows = bifurcation::scan(&ns, kappa, r_min, r_max, steps, &solve)?;
    let kc = bifurcation::kappa_c(ns.beta)?;
    lines.push(format!("β = {}, κ_c = {kc}, {} of {} scan points bifurcate", ns.beta, rows.iter().filter(|r| r.status == "branch").count(), rows.len()));
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![num(r.r), num(r.kappa_c), num(r.amplitude), num(r.residual), num(r.detuning), r.status.clone()])
        .collect();
    art.csv("branch.csv", &["r", "kappa_c", "amplitude", "residual", "detuning", "status"], &csv_rows)?;
    art.json(
        "bifurcation.json",
        &json!({
            "kappa": kappa,
            "beta": ns.beta,
            "kappa_c": kc,
            "lambda0": ns.lambda0,
            "complement_values": ns.mode_values,
            "harmonic_dimension": ns.omega_dim,
            "harmonic_defect": ns.harmonic_defect,
            "hodge_spectrum": ns.hodge_spectrum,
        }),
    )
}

fn verify(cfg: &RunConfig, art: &mut Artifacts, lines: &mut Vec<String>) -> Result<Vec<CheckOutcome>> {
    let mut outcomes = checks::battery(cfg);
    outcomes.push(checks::determinism(cfg, &outcomes));
    for o in &outcomes {
        lines.push(checks::summary_line(o));
    }
    art.json("checks.json", &outcomes)?;
    // wall-clock times are not reproducible and stay out of the manifest
    let timings: Vec<Value> = outcomes.iter().map(|o| json!({ "id": o.id, "seconds": o.elapsed.as_secs_f64() })).collect();
    std::fs::write(art.dir.join("timings.json"), serde_json::to_vec_pretty(&timings)?)?;
    Ok(outcomes)
}

/// Runs one subcommand with its artifacts written under `cfg.output_dir`.
pub fn run(cmd: &Command, cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let hash = cfg.hash();
    let mut art = Artifacts::new(&cfg.output_dir, hash.clone())?;
    let mut lines = Vec::new();
    let mut check_list = Vec::new();
    let mut passed = true;
    match cmd {
        Command::Periods => periods(cfg, &mut art, &mut lines)?,
        Command::ThetaEval => theta_eval(cfg, &mut art, &mut lines)?,
        Command::SolveRh => solve_rh(cfg, &mut art, &mut lines)?,
        Command::Monodromy => monodromy(cfg, &mut art, &mut lines)?,
        Command::Degree => degree(cfg, &mut art, &mut lines)?,
        Command::Spectrum => spectrum(cfg, &mut art, &mut lines)?,
        Command::Bifurcate { kappa, r_min, r_max, steps } => {
            bifurcate(cfg, (*kappa, *r_min, *r_max, *steps), &mut art, &mut lines)?
        }
        Command::Verify => {
            let outcomes = verify(cfg, &mut art, &mut lines)?;
            passed = outcomes.iter().all(|o| o.passed);
            check_list = outcomes.iter().map(|o| (o.id, o.name.to_string(), o.passed)).collect();
        }
    }
    let manifest = Manifest {
        command: cmd.name().into(),
        config_hash: hash,
        version: VERSION.into(),
        seed: cfg.seed,
        artifacts: art.entries.clone(),
        checks: check_list,
        passed,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    std::fs::write(art.dir.join("manifest.json"), bytes)?;
    Ok(RunSummary { manifest, out_dir: art.dir, lines })
}

/// Machine-readable error record and exit status: 2 for configuration
/// errors, 1 for everything else.
pub fn error_report(e: &Error) -> (i32, Value) {
    match e {
        Error::ConfigInvalid { path, message } => {
            (2, json!({ "error": "config_invalid", "path": path, "message": message }))
        }
        other => (1, json!({ "error": "computation_failed", "message": other.to_string() })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dir: &Path) -> RunConfig {
        RunConfig { output_dir: dir.to_path_buf(), ..RunConfig::default() }
    }

    #[test]
    fn artifacts_carry_hash_and_are_listed() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg(dir.path());
        let s = run(&Command::ThetaEval, &cfg).unwrap();
        assert_eq!(s.exit_code(), 0);
        let text = std::fs::read_to_string(dir.path().join("theta.csv")).unwrap();
        let mut it = text.lines();
        assert!(it.next().unwrap().starts_with("config_hash,u_re"));
        assert!(it.all(|l| l.starts_with(&cfg.hash())));
        assert_eq!(s.manifest.artifacts.len(), 1);
        let m: Value = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["config_hash"], cfg.hash());
        assert_eq!(m["version"], VERSION);
    }

    #[test]
    fn periods_deterministic() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run(&Command::Periods, &cfg(a.path())).unwrap();
        run(&Command::Periods, &cfg(b.path())).unwrap();
        for f in ["periods.json", "manifest.json"] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        }
    }

    #[test]
    fn error_codes() {
        let (code, v) = error_report(&Error::ConfigInvalid { path: "spectrum.grid".into(), message: "x".into() });
        assert_eq!(code, 2);
        assert_eq!(v["path"], "spectrum.grid");
        assert_eq!(error_report(&Error::BetaBelowOne(0.5)).0, 1);
    }
}
