//! Spectrum summaries and the explicit-section ground-state check.

use super::eigen::{self, chfsi, EigenOptions};
use super::grid::{TorusField, TorusGrid};
use super::operator::{assemble, MagneticOperator};
use crate::linalg::{self, c};
use crate::rh::ExplicitSolution;
use crate::{Complex64, Error, Mat2, Result};
use nalgebra::DMatrix;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub n_grid: usize,
    pub flux_quanta: i64,
    pub tau: [f64; 2],
    pub r: f64,
    pub b_r: f64,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// Clusters with relative spread below 1e-2.
    pub clusters: Vec<Vec<f64>>,
    pub lowest_relative_error: f64,
    /// `min λ / b_r`.
    pub min_ratio: f64,
    /// Mean of the eigenvalues in `(2b_r, 4b_r)` against `3b_r`.
    pub second_level_relative_error: f64,
    /// Number of eigenvalues within 1% of the lowest.
    pub multiplicity: usize,
    /// `ι`-even directions in the lowest cluster.
    pub iota_even: usize,
}

/// Lowest `k` eigenpairs with Landau-level diagnostics.
pub fn spectrum_report(
    grid: &TorusGrid,
    flux_quanta: i64,
    k: usize,
    opts: &EigenOptions,
) -> Result<(SpectrumReport, Vec<(f64, TorusField)>)> {
    let op = assemble(grid, flux_quanta as f64)?;
    let pairs = chfsi(&op, k, opts, None::<fn(&mut [Complex64])>)?;
    let fields = eigen::to_fields(&op, &pairs);
    let vals = pairs.values.clone();
    let b = op.b_r;
    let l0 = vals[0];
    let multiplicity = vals.iter().filter(|&&l| (l - l0).abs() <= 1e-2 * l0.abs().max(1e-12)).count();
    let second: Vec<f64> = vals.iter().copied().filter(|&l| l > 2.0 * b && l < 4.0 * b).collect();
    let second_err = if second.is_empty() {
        f64::NAN
    } else {
        (second.iter().sum::<f64>() / second.len() as f64 - 3.0 * b).abs() / (3.0 * b)
    };
    let iota_even = if b > 0.0 { count_even(&op, &fields[..multiplicity]) } else { 0 };
    let report = SpectrumReport {
        n_grid: grid.n,
        flux_quanta,
        tau: [grid.tau.re, grid.tau.im],
        r: grid.r,
        b_r: b,
        clusters: eigen::clusters(&vals, 1e-2),
        lowest_relative_error: if b > 0.0 { (l0 - b).abs() / b } else { l0.abs() },
        min_ratio: if b > 0.0 { vals.iter().fold(f64::MAX, |m, &l| m.min(l)) / b } else { f64::NAN },
        second_level_relative_error: second_err,
        multiplicity,
        iota_even,
        residuals: pairs.residuals.clone(),
        iterations: pairs.iterations,
        eigenvalues: vals,
    };
    Ok((report, fields))
}

/// Signature of the parity `u ↦ −u` on the span of `fields`.
fn count_even(op: &MagneticOperator, fields: &[(f64, TorusField)]) -> usize {
    let m = fields.len();
    let parity: Vec<TorusField> = fields.iter().map(|(_, f)| op.parity(f)).collect();
    let mut p = DMatrix::zeros(m, m);
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            p[(i, j)] = fields[i].1.inner(&parity[j]);
            g[(i, j)] = fields[i].1.inner(&fields[j].1);
        }
    }
    let Some(gi) = g.try_inverse() else { return 0 };
    let mat: DMatrix<Complex64> = gi * p;
    mat.eigenvalues().map(|ev| ev.iter().filter(|z| z.re > 0.0).count()).unwrap_or(0)
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundStateReport {
    pub n_grid: usize,
    pub b_r: f64,
    /// Rayleigh quotient of each column of `(1+|z|²)Y` pulled back to the grid.
    pub rayleigh: [f64; 2],
    pub relative_error: [f64; 2],
    pub column_asymmetry: f64,
    /// `max ‖Ξ(−u) ∓ Ξ(u)J‖/‖Ξ(u)‖` over unmasked sites.
    pub equivariance_defect: f64,
    pub masked_fraction: f64,
    /// `max/min` of the pulled-back Fubini–Study curvature density `|z'|²·2/(1+|z|²)²`.
    pub curvature_ratio: f64,
}

/// Samples `ξ = (1+|z|²)·Y_i` through `u ↦ z(u)` onto the grid and measures it
/// against the flux-2 magnetic Laplacian.
pub fn check_explicit_ground_state(sol: &ExplicitSolution, grid: &TorusGrid) -> Result<GroundStateReport> {
    if (grid.tau - sol.curve.lat.tau).norm() > 1e-12 {
        return Err(Error::InvalidArgument("grid modulus differs from the curve's τ".into()));
    }
    let op = assemble(grid, 2.0)?;
    let keep = grid.mask(2.0);
    let inner = grid.mask(3.0);
    let n = grid.len();
    let mut xi = vec![Mat2::zeros(); n];
    let mut ok = vec![false; n];
    let (mut kmin, mut kmax) = (f64::MAX, 0.0f64);
    let mut equiv: f64 = 0.0;
    let j2 = linalg::jump();
    for v in 0..n {
        if !keep[v] {
            continue;
        }
        let (j, k) = grid.site(v);
        let u = grid.point(j, k);
        let (z, _, y) = match sol.eval_on_cover(u) {
            Ok(x) => x,
            Err(Error::SamplingNearSingularity(_)) | Err(Error::ThetaDenominatorZero(_)) => continue,
            Err(e) => return Err(e),
        };
        let w = 1.0 + z.norm_sqr();
        xi[v] = y * c(w, 0.0);
        ok[v] = true;
        let (_, dz) = sol.curve.covering_map_with_derivative(u)?;
        let dens = dz.norm_sqr() * 2.0 / (w * w);
        kmin = kmin.min(dens);
        kmax = kmax.max(dens);
        if let Ok((_, _, ym)) = sol.eval_on_cover(-u) {
            let a = linalg::norm(&(ym - y * j2));
            let b = linalg::norm(&(ym + y * j2));
            equiv = equiv.max(a.min(b) / linalg::norm(&y));
        }
    }
    // masked quadratic form: links with both ends sampled
    let area = grid.cell_area();
    let mut rayleigh = [0.0; 2];
    for (col, rq) in rayleigh.iter_mut().enumerate() {
        let mut num = 0.0;
        let mut den = 0.0;
        for v in 0..n {
            if !(ok[v] && inner[v]) {
                continue;
            }
            for comp in 0..2 {
                den += area * xi[v][(comp, col)].norm_sqr();
                for t in 0..3 {
                    let (w, u) = op.link(v, t);
                    if ok[w] && op.weights[t] > 0.0 {
                        num += op.weights[t] * (xi[v][(comp, col)] - u * xi[w][(comp, col)]).norm_sqr();
                    }
                }
            }
        }
        *rq = num / den;
    }
    let rel = rayleigh.map(|q| (q - op.b_r).abs() / op.b_r);
    Ok(GroundStateReport {
        n_grid: grid.n,
        b_r: op.b_r,
        rayleigh,
        relative_error: rel,
        column_asymmetry: (rayleigh[0] - rayleigh[1]).abs() / rayleigh[0].abs().max(rayleigh[1].abs()),
        equivariance_defect: equiv,
        masked_fraction: ok.iter().filter(|&&b| !b).count() as f64 / n as f64,
        curvature_ratio: kmax / kmin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::EllipticCurve;
    use crate::theta::ThetaCharacteristics;

    #[test]
    fn landau_structure_square_torus() {
        let g = TorusGrid::new(32, c(0.0, 1.0), 1.0).unwrap();
        let (rep, _) = spectrum_report(&g, 2, 6, &EigenOptions::default()).unwrap();
        assert_eq!(rep.multiplicity, 2);
        assert!(rep.lowest_relative_error < 1e-2);
        assert!(rep.second_level_relative_error < 2e-2, "{rep:?}");
        assert_eq!(rep.iota_even, 2);
    }

    #[test]
    fn explicit_section_is_sampled_equivariantly() {
        let sol = ExplicitSolution::new(EllipticCurve::lemniscatic().unwrap(), ThetaCharacteristics::new(0.21, 0.13)).unwrap();
        let g = TorusGrid::from_lattice(&sol.curve.lat, 16, 1.0).unwrap();
        let rep = check_explicit_ground_state(&sol, &g).unwrap();
        assert!(rep.equivariance_defect < 1e-8, "{rep:?}");
        assert!(rep.curvature_ratio > 1.0);
        assert!(rep.rayleigh.iter().all(|q| q.is_finite()));
    }
}
