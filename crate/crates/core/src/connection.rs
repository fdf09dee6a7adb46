//! Fubini–Study twisting, parabolic degree, orbifold Chern–Weil integrals
//! and magnetic flux constants.

use crate::elliptic::{MetricScale, Sheet};
use crate::linalg::{self, c};
use crate::rh::ExplicitSolution;
use crate::{quadrature, Complex64, Error, Mat2, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `a(z)` of the Fubini–Study connection `a dz`, `−z̄/(1+|z|²)`.
pub fn fubini_study(z: Complex64) -> Complex64 {
    -z.conj() / (1.0 + z.norm_sqr())
}

/// Analytic density of `Tr F` against `dx∧dy` for the Fubini–Study connection.
pub fn fs_curvature_density(z: Complex64) -> Complex64 {
    -2.0 * I / (1.0 + z.norm_sqr()).powi(2)
}

/// Scalar connection `a(z) dz` on the sphere: a smooth part plus simple poles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarConnection {
    pub fubini_study: bool,
    /// `(z_k, λ_k)`: adds `λ_k/(z − z_k)`.
    pub poles: Vec<(Complex64, f64)>,
}

impl ScalarConnection {
    pub fn fubini_study() -> Self {
        Self { fubini_study: true, poles: Vec::new() }
    }

    pub fn zero() -> Self {
        Self { fubini_study: false, poles: Vec::new() }
    }

    pub fn coefficient(&self, z: Complex64) -> Complex64 {
        let mut a = if self.fubini_study { fubini_study(z) } else { c(0.0, 0.0) };
        for &(p, l) in &self.poles {
            a += l / (z - p);
        }
        a
    }

    /// `Tr F` density by central differences: `F = 2i·∂_z̄ a  dx∧dy`.
    pub fn curvature_fd(&self, z: Complex64, h: f64) -> Complex64 {
        let dx = (self.coefficient(z + h) - self.coefficient(z - h)) / (2.0 * h);
        let dy = (self.coefficient(z + I * h) - self.coefficient(z - I * h)) / (2.0 * h);
        2.0 * I * 0.5 * (dx + I * dy)
    }

    /// `−(1/2πi)∫ Tr F` over the sphere with finite-difference curvature.
    ///
    /// The outer hemisphere is handled in `w = 1/z` with the pulled-back
    /// coefficient `−a(1/w)/w²`; the curvature form is trivialisation
    /// independent, so this avoids differencing a decaying coefficient.
    pub fn chern_weil_fd(&self, h: f64, quad_tol: f64) -> Result<f64> {
        let inner = polar(&|z| self.curvature_fd(z, h), c(0.0, 0.0), 1.0, quad_tol)?;
        let pulled = |w: Complex64| -self.coefficient(1.0 / w) / (w * w);
        let fd = |w: Complex64| {
            let dx = (pulled(w + h) - pulled(w - h)) / (2.0 * h);
            let dy = (pulled(w + I * h) - pulled(w - I * h)) / (2.0 * h);
            I * (dx + I * dy)
        };
        let outer = polar(&fd, c(0.0, 0.0), 1.0, quad_tol)?;
        finish(inner + outer, quad_tol)
    }

    /// Residue `(1/2πi)∮ a dz` on a circle of radius `r` around `p`.
    pub fn contour_residue(&self, p: Complex64, r: f64, n: usize) -> Complex64 {
        let h = 2.0 * PI / n as f64;
        let mut s = c(0.0, 0.0);
        for j in 0..n {
            let e = c(0.0, h * j as f64).exp();
            s += self.coefficient(p + r * e) * I * r * e;
        }
        s * h / (2.0 * PI * I)
    }
}

/// Integration region for [`chern_weil`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Polar coordinates around `center`.
    Disk { center: Complex64, radius: f64 },
    /// The whole sphere: the unit disk plus the chart `w = 1/z` with
    /// Jacobian `|w|⁻⁴`.
    Sphere,
}

fn polar<F: Fn(Complex64) -> Complex64>(f: &F, center: Complex64, radius: f64, tol: f64) -> Result<Complex64> {
    quadrature::integrate(
        |r| {
            let inner = quadrature::integrate(|t| Ok(f(center + r * c(0.0, t).exp()) * r), 0.0, 2.0 * PI, tol)?;
            Ok(inner)
        },
        0.0,
        radius,
        tol,
    )
}

/// `−(1/2πi)∫ Tr F` over the domain; `density` is the coefficient of `dx∧dy`.
pub fn chern_weil<F>(density: F, domain: Domain, quad_tol: f64) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    let total = match domain {
        Domain::Disk { center, radius } => polar(&density, center, radius, quad_tol)?,
        Domain::Sphere => {
            let inner = polar(&density, c(0.0, 0.0), 1.0, quad_tol)?;
            let outer = polar(&|w: Complex64| density(1.0 / w) / w.norm_sqr().powi(2), c(0.0, 0.0), 1.0, quad_tol)?;
            inner + outer
        }
    };
    finish(total, quad_tol)
}

fn finish(total: Complex64, quad_tol: f64) -> Result<f64> {
    let v = -total / (2.0 * PI * I);
    if v.im.abs() > 1e-6 * (1.0 + v.re.abs()) {
        return Err(Error::NonConvergentQuadrature { tol: quad_tol, estimate: v.im.abs() });
    }
    Ok(v.re)
}

/// Degree of the underlying bundle plus parabolic weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicData {
    pub deg: i64,
    /// All weights `λ_j^±` at all marked points.
    pub weights: Vec<f64>,
    pub rank: usize,
}

impl ParabolicData {
    /// `deg + Σ λ`.
    pub fn par_degree(&self) -> f64 {
        self.deg as f64 + self.weights.iter().sum::<f64>()
    }

    /// Flat rank-2 orbifold bundle: weights `±1/4` at four points.
    pub fn flat_orbifold() -> Self {
        Self { deg: 0, weights: [0.25, -0.25].repeat(4), rank: 2 }
    }

    /// The flat bundle twisted by the degree-1 line bundle (degree 2 in rank 2).
    pub fn twisted() -> Self {
        Self { deg: 2, ..Self::flat_orbifold() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Flux {
    /// `2π·deg par/(|Σ|·rank)` with `|Σ|` the orbifold area at `r = 1`
    pub b: f64,
    /// `b / r`
    pub b_r: f64,
}

pub fn flux_constant(pd: &ParabolicData, metric: &MetricScale) -> Result<Flux> {
    if !(metric.area_sigma > 0.0) {
        return Err(Error::InvalidArgument("orbifold area must be positive".into()));
    }
    let sigma1 = metric.area_sigma / metric.r;
    let b = 2.0 * PI * pd.par_degree() / (sigma1 * pd.rank as f64);
    Ok(Flux { b, b_r: b / metric.r })
}

/// `(1 + |z|²)·Y(z)` on the given sheet.
pub fn twisted_solution(sol: &ExplicitSolution, z: Complex64, sheet: Sheet) -> Result<Mat2> {
    Ok(sol.eval_y(z, sheet)? * c(1.0 + z.norm_sqr(), 0.0))
}

/// `‖∂_zΨ̃ − (ΣA_k/(z−z_k) + z̄/(1+|z|²))Ψ̃‖ / ‖Ψ̃‖` with the Wirtinger
/// derivative taken by central differences on a locally continued branch.
pub fn twisted_residual(sol: &ExplicitSolution, residues: &[Mat2], z: Complex64, h: f64) -> Result<f64> {
    let base = sol.local_branch(z)?;
    let psi = |w: Complex64| -> Result<Mat2> {
        let t = sol.track(base, &[z, w])?;
        Ok(sol.y_tracked(&t)? * c(1.0 + w.norm_sqr(), 0.0))
    };
    let p0 = psi(z)?;
    let dx = (psi(z + h)? - psi(z - h)?) / c(2.0 * h, 0.0);
    let dy = (psi(z + I * h)? - psi(z - I * h)?) / c(2.0 * h, 0.0);
    let dz = (dx - dy * I) * c(0.5, 0.0);
    let mut a = Mat2::identity() * (z.conj() / (1.0 + z.norm_sqr()));
    for (p, r) in sol.curve.bp.as_array().iter().zip(residues) {
        a += r / (z - p);
    }
    Ok(linalg::norm(&(dz - a * p0)) / linalg::norm(&p0))
}

/// Eigenvalues of the residues in the local coordinate `t² = z − z_k` of the
/// cover, i.e. twice the eigenvalues on the sphere.
pub fn cover_exponents(residues: &[Mat2]) -> Vec<(Complex64, Complex64)> {
    residues
        .iter()
        .map(|r| {
            let (a, b) = linalg::eigenvalues(r);
            (2.0 * a, 2.0 * b)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbifoldDegree {
    /// Chern–Weil integral of the trace of the flat connection off the marked points
    pub smooth: f64,
    /// Σ of measured residue eigenvalues, including `∞`
    pub weights: f64,
    pub par_degree: f64,
}

/// Parabolic degree of the flat bundle defined by `Y`: the trace connection
/// `tr(Y'Y⁻¹)` integrated over a disk plus the measured weights at all four points.
pub fn flat_orbifold_degree(residues: &[Mat2], poles: &[Complex64], quad_tol: f64) -> Result<OrbifoldDegree> {
    let tr: Vec<(Complex64, f64)> = poles.iter().zip(residues).map(|(&p, r)| (p, linalg::trace(r).re)).collect();
    let conn = ScalarConnection { fubini_study: false, poles: tr };
    let sep = poles
        .iter()
        .enumerate()
        .flat_map(|(i, a)| poles[..i].iter().map(move |b| (a - b).norm()))
        .fold(f64::MAX, f64::min);
    let m = poles.iter().sum::<Complex64>() / poles.len() as f64;
    // smooth curvature between the marked points: an annulus-free disk around the centroid
    let r = 0.25 * sep;
    let smooth = chern_weil(|z| conn.curvature_fd(z, 1e-4), Domain::Disk { center: m + c(0.0, 0.5 * sep), radius: r }, quad_tol)?;
    let mut weights = 0.0;
    let mut inf = Mat2::zeros();
    for res in residues {
        let (a, b) = linalg::eigenvalues(res);
        weights += (a + b).re;
        inf -= res;
    }
    let (a, b) = linalg::eigenvalues(&inf);
    weights += (a + b).re;
    Ok(OrbifoldDegree { smooth, weights, par_degree: smooth + weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::EllipticCurve;
    use crate::theta::ThetaCharacteristics;

    #[test]
    fn fs_values() {
        assert_eq!(fubini_study(c(0.0, 0.0)), c(0.0, 0.0));
        assert_eq!(fubini_study(c(1.0, 0.0)), c(-0.5, 0.0));
    }

    #[test]
    fn fd_curvature_matches_analytic() {
        let conn = ScalarConnection::fubini_study();
        for z in [c(0.3, -0.2), c(1.5, 2.0)] {
            assert!((conn.curvature_fd(z, 1e-4) - fs_curvature_density(z)).norm() < 1e-7);
        }
    }

    #[test]
    fn fs_degree_one() {
        let d = chern_weil(fs_curvature_density, Domain::Sphere, 1e-10).unwrap();
        assert!((d - 1.0).abs() < 1e-8);
        let conn = ScalarConnection::fubini_study();
        let d = conn.chern_weil_fd(1e-4, 1e-8).unwrap();
        assert!((d - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rotation_invariance() {
        let rot = c(0.0, 0.7).exp();
        let a = chern_weil(fs_curvature_density, Domain::Disk { center: c(0.2, 0.1), radius: 0.8 }, 1e-11).unwrap();
        let b = chern_weil(|z| fs_curvature_density(z * rot), Domain::Disk { center: c(0.2, 0.1) / rot, radius: 0.8 }, 1e-11)
            .unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn zero_connection() {
        let conn = ScalarConnection::zero();
        assert_eq!(conn.chern_weil_fd(1e-3, 1e-8).unwrap(), 0.0);
    }

    #[test]
    fn residue_theorem_consistency() {
        let weights = [0.25, -0.25, 0.5];
        let pts = [c(-1.0, 0.0), c(0.0, 0.3), c(1.0, 0.0)];
        let conn = ScalarConnection { fubini_study: true, poles: pts.iter().copied().zip(weights).collect() };
        let measured: f64 = pts.iter().map(|&p| conn.contour_residue(p, 1e-5, 64).re).sum();
        let smooth = chern_weil(fs_curvature_density, Domain::Sphere, 1e-10).unwrap();
        let pd = ParabolicData { deg: 1, weights: weights.to_vec(), rank: 1 };
        assert!((measured + smooth - pd.par_degree()).abs() < 1e-6, "{measured} {smooth}");
    }

    #[test]
    fn twisted_at_origin_is_y() {
        let bp = crate::elliptic::BranchPoints::new(c(-0.7, 0.2), c(0.1, -0.3), c(1.1, 0.4)).unwrap();
        let sol = ExplicitSolution::new(EllipticCurve::new(bp, None, 1e-13).unwrap(), ThetaCharacteristics::new(0.2, 0.1))
            .unwrap();
        let z = c(0.0, 0.0);
        assert_eq!(twisted_solution(&sol, z, Sheet::One).unwrap(), sol.eval_y(z, Sheet::One).unwrap());
    }

    #[test]
    fn parabolic_arithmetic() {
        assert_eq!(ParabolicData::flat_orbifold().par_degree(), 0.0);
        assert_eq!(ParabolicData::twisted().par_degree(), 2.0);
    }

    #[test]
    fn flux_values() {
        let cv = EllipticCurve::lemniscatic().unwrap();
        let line = ParabolicData { deg: 1, weights: vec![], rank: 1 };
        for r in [0.5, 1.0, 3.0] {
            let m = MetricScale::new(&cv.lat, r).unwrap();
            let f = flux_constant(&line, &m).unwrap();
            let f2 = flux_constant(&ParabolicData::twisted(), &m).unwrap();
            assert!((f.b - 4.0 * PI).abs() < 1e-10);
            assert!((f2.b - f.b).abs() < 1e-10);
            assert!((f.b_r * r * m.area_sigma / r - 2.0 * PI).abs() < 1e-10);
        }
    }

    #[test]
    fn twisted_solution_properties() {
        let cv = EllipticCurve::new(crate::elliptic::BranchPoints::lemniscatic(), Some(c(0.0, 0.0) + c(0.3, 0.7)), 1e-13)
            .unwrap();
        let sol = ExplicitSolution::new(cv, ThetaCharacteristics::new(0.21, 0.13)).unwrap();
        let res = sol.extract_residues(64).unwrap();
        for z in [c(0.4, 0.9), c(-0.6, -0.7), c(1.7, 0.4)] {
            assert!(twisted_residual(&sol, &res, z, 1e-5).unwrap() < 1e-6);
        }
        for (a, b) in cover_exponents(&res) {
            assert!(((a - 0.5).norm() < 1e-8 && (b + 0.5).norm() < 1e-8) || ((b - 0.5).norm() < 1e-8 && (a + 0.5).norm() < 1e-8));
        }
        let od = flat_orbifold_degree(&res, &sol.curve.bp.as_array(), 1e-10).unwrap();
        assert!(od.par_degree.abs() < 1e-6);
    }
}
