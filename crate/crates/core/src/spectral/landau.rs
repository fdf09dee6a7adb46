//! Continuum Landau data for a uniform field on the torus.

use super::grid::{TorusField, TorusGrid};
use crate::linalg::c;
use crate::{Error, Result};
use std::f64::consts::PI;

/// `b_r(2m+1)` for `m = 0..count`.
pub fn landau_levels(b_r: f64, count: usize) -> Vec<f64> {
    (0..count).map(|m| b_r * (2 * m + 1) as f64).collect()
}

/// Lowest-level state `k ∈ 0..n` in the Landau gauge:
/// `Σ_m e^{2πi(nm+k)s} exp(πinτ(t+m+k/n)²)`.
pub fn lowest_level_state(grid: TorusGrid, n: i64, k: i64) -> Result<TorusField> {
    if n <= 0 || k < 0 || k >= n {
        return Err(Error::InvalidArgument(format!("lowest-level state needs 0 ≤ k < n, n > 0 (n = {n}, k = {k})")));
    }
    let tau = grid.tau;
    let nf = n as f64;
    // Gaussian width in t: |term| = exp(−πn Im τ (t+m+k/n)²)
    let reach = (40.0 / (PI * nf * tau.im)).sqrt().ceil() as i64 + 2;
    let f = TorusField::from_fn(grid, n, |s, t| {
        let mut acc = c(0.0, 0.0);
        for m in -reach..=reach {
            let x = t + m as f64 + k as f64 / nf;
            let q = (n * m + k) as f64;
            acc += (c(0.0, 2.0 * PI * q * s) + c(0.0, PI * nf) * tau * x * x).exp();
        }
        acc
    });
    Ok(f.normalized())
}

#[cfg(test)]
mod tests {
    use super::super::operator::assemble;
    use super::*;

    #[test]
    fn lowest_level_rayleigh_converges_to_b() {
        let tau = c(0.15, 1.05);
        let mut errs = Vec::new();
        for n in [32, 64] {
            let g = TorusGrid::new(n, tau, 1.0).unwrap();
            let op = assemble(&g, 2.0).unwrap();
            let psi = lowest_level_state(g, 2, 1).unwrap();
            let q = op.rayleigh(&psi).unwrap();
            errs.push((q - op.b_r).abs() / op.b_r);
        }
        assert!(errs[1] < 2e-3, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
    }

    #[test]
    fn states_are_orthogonal() {
        let g = TorusGrid::new(32, c(0.0, 1.0), 1.0).unwrap();
        let a = lowest_level_state(g, 2, 0).unwrap();
        let b = lowest_level_state(g, 2, 1).unwrap();
        assert!(a.inner(&b).norm() < 1e-10);
    }

    #[test]
    fn levels() {
        assert_eq!(landau_levels(2.0, 3), vec![2.0, 6.0, 10.0]);
    }
}
