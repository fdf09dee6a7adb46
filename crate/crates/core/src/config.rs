//! Run configuration, read from TOML.
//!
//! Every key is optional. A file containing only
//!
//! ```toml
//! [curve]
//! branch_points = [[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]]
//! ```
//!
//! runs the lemniscatic curve with all other defaults. Unknown keys are rejected.

use crate::elliptic::{BranchPoints, EllipticCurve};
use crate::linalg::c;
use crate::theta::ThetaCharacteristics;
use crate::{Complex64, Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub curve: CurveConfig,
    pub theta: ThetaConfig,
    pub spectrum: SpectrumConfig,
    pub bifurcation: BifurcationConfig,
    pub tolerances: Tolerances,
    /// Artifact directory. Default `out`.
    pub output_dir: PathBuf,
    /// Seed for random sample points and eigensolver starts. Default `20240611`.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurveConfig {
    /// `[re, im]` of `z1, z2, z3`. Default `[-1, 0], [0, 0], [1, 0]`.
    pub branch_points: [[f64; 2]; 3],
    /// Basepoint `z0` of all continuations. Default: chosen off the cuts.
    pub basepoint: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThetaConfig {
    /// Default `0.21`.
    pub delta: f64,
    /// Default `0.13`.
    pub epsilon: f64,
    /// Points per side of the theta-eval grid over the fundamental cell. Default `16`.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// Metric scale `r`. Default `1`.
    pub r: f64,
    /// Grid points per period. Default `64`.
    pub grid: usize,
    /// Flux quanta through the torus. Default `2`.
    pub flux_quanta: i64,
    /// Number of eigenpairs. Default `8`.
    pub eigenpairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BifurcationConfig {
    /// Default `3.6`.
    pub kappa: f64,
    /// Scan interval in `r`. Defaults `0.99`, `1.01`.
    pub r_min: f64,
    pub r_max: f64,
    /// Default `5`.
    pub steps: usize,
    /// Grid points per period. Default `32`.
    pub grid: usize,
    /// Complement modes in the Galerkin space. Default `40`.
    pub galerkin_modes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Period and Chern–Weil quadrature. Default `1e-13`.
    pub quadrature: f64,
    /// Adaptive ODE integration. Default `1e-12`.
    pub ode: f64,
    /// Eigensolver residual relative to `‖H‖`. Default `1e-8`.
    pub eigen: f64,
    /// Nonlinear solves. Default `1e-12`.
    pub newton: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            curve: CurveConfig::default(),
            theta: ThetaConfig::default(),
            spectrum: SpectrumConfig::default(),
            bifurcation: BifurcationConfig::default(),
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("out"),
            seed: 20240611,
        }
    }
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self { branch_points: [[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]], basepoint: None }
    }
}

impl Default for ThetaConfig {
    fn default() -> Self {
        Self { delta: 0.21, epsilon: 0.13, samples: 16 }
    }
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { r: 1.0, grid: 64, flux_quanta: 2, eigenpairs: 8 }
    }
}

impl Default for BifurcationConfig {
    fn default() -> Self {
        Self { kappa: 3.6, r_min: 0.99, r_max: 1.01, steps: 5, grid: 32, galerkin_modes: 40 }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { quadrature: 1e-13, ode: 1e-12, eigen: 1e-8, newton: 1e-12 }
    }
}

fn invalid(path: &str, message: impl Into<String>) -> Error {
    Error::ConfigInvalid { path: path.into(), message: message.into() }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| invalid("", e.message().to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(if path == "." { "" } else { &path }, e.inner().message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid("", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |p: &str, x: f64| if x > 0.0 && x.is_finite() { Ok(()) } else { Err(invalid(p, format!("must be positive, got {x}"))) };
        for (i, b) in self.curve.branch_points.iter().enumerate() {
            if !b.iter().all(|x| x.is_finite()) {
                return Err(invalid(&format!("curve.branch_points[{i}]"), "must be finite"));
            }
        }
        self.branch_points().map_err(|e| invalid("curve.branch_points", e.to_string()))?;
        for (p, x) in [("theta.delta", self.theta.delta), ("theta.epsilon", self.theta.epsilon)] {
            if !x.is_finite() {
                return Err(invalid(p, "must be finite"));
            }
        }
        if self.theta.samples == 0 {
            return Err(invalid("theta.samples", "must be at least 1"));
        }
        pos("spectrum.r", self.spectrum.r)?;
        if self.spectrum.grid < 16 {
            return Err(invalid("spectrum.grid", "must be at least 16"));
        }
        if self.spectrum.eigenpairs == 0 {
            return Err(invalid("spectrum.eigenpairs", "must be at least 1"));
        }
        pos("bifurcation.kappa", self.bifurcation.kappa)?;
        pos("bifurcation.r_min", self.bifurcation.r_min)?;
        pos("bifurcation.r_max", self.bifurcation.r_max)?;
        if self.bifurcation.r_max < self.bifurcation.r_min {
            return Err(invalid("bifurcation.r_max", "must not be below r_min"));
        }
        if self.bifurcation.steps == 0 {
            return Err(invalid("bifurcation.steps", "must be at least 1"));
        }
        if self.bifurcation.grid < 16 || self.bifurcation.grid % 2 == 1 {
            return Err(invalid("bifurcation.grid", "must be even and at least 16"));
        }
        if self.bifurcation.galerkin_modes == 0 {
            return Err(invalid("bifurcation.galerkin_modes", "must be at least 1"));
        }
        pos("tolerances.quadrature", self.tolerances.quadrature)?;
        pos("tolerances.ode", self.tolerances.ode)?;
        pos("tolerances.eigen", self.tolerances.eigen)?;
        pos("tolerances.newton", self.tolerances.newton)?;
        Ok(())
    }

    pub fn branch_points(&self) -> Result<BranchPoints> {
        let [a, b, d] = self.curve.branch_points.map(|p| c(p[0], p[1]));
        BranchPoints::new(a, b, d)
    }

    pub fn basepoint(&self) -> Option<Complex64> {
        self.curve.basepoint.map(|p| c(p[0], p[1]))
    }

    pub fn curve(&self) -> Result<EllipticCurve> {
        EllipticCurve::new(self.branch_points()?, self.basepoint(), self.tolerances.quadrature)
    }

    pub fn characteristics(&self) -> ThetaCharacteristics {
        ThetaCharacteristics::new(self.theta.delta, self.theta.epsilon)
    }

    /// SHA-256 of the canonical JSON form without `output_dir`, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(&Self { output_dir: PathBuf::new(), ..self.clone() }).expect("config serialises");
        hex::encode(Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_key_is_pointered() {
        match RunConfig::from_toml_str("[spectrum]\ngird = 3\n") {
            Err(Error::ConfigInvalid { path, message }) => {
                assert_eq!(path, "spectrum.gird");
                assert!(message.contains("gird"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_type_is_pointered() {
        match RunConfig::from_toml_str("[bifurcation]\nkappa = \"big\"\n") {
            Err(Error::ConfigInvalid { path, .. }) => assert_eq!(path, "bifurcation.kappa"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semantic_errors_carry_path() {
        match RunConfig::from_toml_str("[curve]\nbranch_points = [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]\n") {
            Err(Error::ConfigInvalid { path, .. }) => assert_eq!(path, "curve.branch_points"),
            other => panic!("{other:?}"),
        }
        match RunConfig::from_toml_str("[tolerances]\node = -1.0\n") {
            Err(Error::ConfigInvalid { path, .. }) => assert_eq!(path, "tolerances.ode"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_is_config_error() {
        assert!(matches!(RunConfig::from_toml_str("[curve"), Err(Error::ConfigInvalid { .. })));
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let moved = RunConfig { output_dir: "elsewhere".into(), ..a.clone() };
        assert_eq!(moved.hash(), a.hash());
    }
}
