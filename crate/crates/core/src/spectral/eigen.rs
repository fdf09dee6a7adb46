//! Chebyshev-filtered subspace iteration for the low end of a Hermitian spectrum.

use super::grid::TorusField;
use super::operator::MagneticOperator;
use crate::linalg::c;
use crate::{Complex64, Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Matrix-free Hermitian operator.
pub trait HermitianOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
    /// Upper bound on the spectrum (also used as `‖H‖`).
    fn upper_bound(&self) -> f64;
}

impl HermitianOperator for MagneticOperator {
    fn dim(&self) -> usize {
        MagneticOperator::dim(self)
    }
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        MagneticOperator::apply(self, x, y)
    }
    fn upper_bound(&self) -> f64 {
        self.norm_bound()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Residual target relative to the spectral bound.
    pub tol: f64,
    pub degree: usize,
    /// Guard vectors beyond the requested count.
    pub extra: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-8, degree: 24, extra: 8, max_iter: 400, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// Euclidean-orthonormal eigenvectors as columns.
    pub vectors: DMatrix<Complex64>,
    /// `‖Hv − λv‖` per pair.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

fn apply_block<H: HermitianOperator + ?Sized>(op: &H, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut y = DMatrix::zeros(x.nrows(), x.ncols());
    let mut buf = vec![c(0.0, 0.0); x.nrows()];
    for j in 0..x.ncols() {
        op.apply(x.column(j).as_slice(), &mut buf);
        y.column_mut(j).copy_from_slice(&buf);
    }
    y
}

fn orthonormalize(x: DMatrix<Complex64>) -> DMatrix<Complex64> {
    // two passes of Householder QR keep orthogonality at roundoff level
    let q = x.qr().q();
    q.qr().q()
}

/// Rayleigh–Ritz on span(X): returns sorted Ritz values, rotated X and HX.
fn rayleigh_ritz<H: HermitianOperator + ?Sized>(
    op: &H,
    x: &DMatrix<Complex64>,
) -> (Vec<f64>, DMatrix<Complex64>, DMatrix<Complex64>) {
    let hx = apply_block(op, x);
    let mut g = x.adjoint() * &hx;
    // symmetrise against roundoff
    let gt = g.adjoint();
    g = (g + gt) * c(0.5, 0.0);
    let eig = g.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let q = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    (vals, x * &q, hx * q)
}

fn chebyshev_filter<H: HermitianOperator + ?Sized>(
    op: &H,
    x: &DMatrix<Complex64>,
    degree: usize,
    lo: f64,
    hi: f64,
    target: f64,
) -> DMatrix<Complex64> {
    let e = (hi - lo) / 2.0;
    let center = (hi + lo) / 2.0;
    let mut sigma = e / (target - center);
    let sigma1 = sigma;
    let cc = c(center, 0.0);
    let mut x0 = x.clone();
    let mut y = (apply_block(op, x) - x * cc) * c(sigma1 / e, 0.0);
    for _ in 1..degree {
        let sigma2 = 1.0 / (2.0 / sigma1 - sigma);
        let hy = apply_block(op, &y);
        let ynew = (hy - &y * cc) * c(2.0 * sigma2 / e, 0.0) - x0 * c(sigma * sigma2, 0.0);
        x0 = y;
        y = ynew;
        sigma = sigma2;
    }
    y
}

/// The `k` lowest eigenpairs of `op`, restricted to the range of `project`
/// when given (the projector must commute with `op`).
pub fn chfsi<H, P>(op: &H, k: usize, opts: &EigenOptions, project: Option<P>) -> Result<Eigenpairs>
where
    H: HermitianOperator + ?Sized,
    P: Fn(&mut [Complex64]),
{
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one eigenpair".into()));
    }
    let n = op.dim();
    let p = (k + opts.extra).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = DMatrix::from_fn(n, p, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let proj = |x: &mut DMatrix<Complex64>| {
        if let Some(pr) = &project {
            for j in 0..x.ncols() {
                pr(x.column_mut(j).as_mut_slice());
            }
        }
    };
    proj(&mut x);
    x = orthonormalize(x);
    let hi = op.upper_bound();
    let (mut vals, mut x_r, mut hx) = rayleigh_ritz(op, &x);
    for it in 0..opts.max_iter {
        let residuals: Vec<f64> =
            (0..p).map(|j| (hx.column(j) - x_r.column(j) * c(vals[j], 0.0)).norm()).collect();
        if residuals[..k].iter().all(|&r| r <= opts.tol * hi) {
            let vectors = x_r.columns(0, k).into_owned();
            return Ok(Eigenpairs { values: vals[..k].to_vec(), vectors, residuals: residuals[..k].to_vec(), iterations: it });
        }
        let lo = vals[p - 1].min(hi * 0.999);
        let mut y = chebyshev_filter(op, &x_r, opts.degree, lo, hi, vals[0]);
        proj(&mut y);
        x = orthonormalize(y);
        (vals, x_r, hx) = rayleigh_ritz(op, &x);
    }
    Err(Error::NoConvergence(format!("subspace iteration did not reach {:e} in {} sweeps", opts.tol, opts.max_iter)))
}

/// Dense reference solver (small grids only).
pub fn dense_eigenpairs(h: &DMatrix<Complex64>, k: usize) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let k = k.min(order.len());
    let vecs = DMatrix::from_fn(h.nrows(), k, |i, j| eig.eigenvectors[(i, order[j])]);
    (order[..k].iter().map(|&i| eig.eigenvalues[i]).collect(), vecs)
}

/// `k` smallest eigenvalues and eigenfields of the magnetic Laplacian.
pub fn lowest_eigenpairs(op: &MagneticOperator, k: usize, opts: &EigenOptions) -> Result<Vec<(f64, TorusField)>> {
    let pairs = chfsi(op, k, opts, None::<fn(&mut [Complex64])>)?;
    Ok(to_fields(op, &pairs))
}

pub fn to_fields(op: &MagneticOperator, pairs: &Eigenpairs) -> Vec<(f64, TorusField)> {
    pairs
        .values
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let col: DVector<Complex64> = pairs.vectors.column(j).into_owned();
            (l, TorusField { grid: op.grid, flux_quanta: op.flux_quanta, data: col.as_slice().to_vec() }.normalized())
        })
        .collect()
}

/// Groups sorted eigenvalues into clusters whose relative spread is below `rel`.
pub fn clusters(values: &[f64], rel: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for &v in values {
        match out.last_mut() {
            Some(cl) if (v - cl[0]).abs() <= rel * cl[0].abs().max(1e-300) => cl.push(v),
            _ => out.push(vec![v]),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::grid::TorusGrid;
    use super::super::operator::assemble;
    use super::*;

    #[test]
    fn matches_dense_solver() {
        let g = TorusGrid::new(16, c(0.2, 1.1), 1.0).unwrap();
        let op = assemble(&g, 2.0).unwrap();
        let (dv, _) = dense_eigenpairs(&op.dense(), 6);
        let it = chfsi(&op, 6, &EigenOptions::default(), None::<fn(&mut [Complex64])>).unwrap();
        for (a, b) in dv.iter().zip(&it.values) {
            assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{a} {b}");
        }
        let hb = op.norm_bound();
        assert!(it.residuals.iter().all(|&r| r <= 1e-8 * hb));
    }

    #[test]
    fn zero_flux_ground_state_is_constant() {
        let g = TorusGrid::new(16, c(0.0, 1.0), 1.0).unwrap();
        let op = assemble(&g, 0.0).unwrap();
        let pairs = lowest_eigenpairs(&op, 1, &EigenOptions::default()).unwrap();
        assert!(pairs[0].0.abs() < 1e-7);
        let f = &pairs[0].1;
        let m = f.data[0];
        assert!(f.data.iter().all(|z| (z - m).norm() < 1e-6));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let g = TorusGrid::new(16, c(0.0, 1.0), 1.0).unwrap();
        let op = assemble(&g, 2.0).unwrap();
        let a = chfsi(&op, 4, &EigenOptions::default(), None::<fn(&mut [Complex64])>).unwrap();
        let b = chfsi(&op, 4, &EigenOptions::default(), None::<fn(&mut [Complex64])>).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn cluster_grouping() {
        let cl = clusters(&[1.0, 1.001, 3.0, 3.01, 5.0], 0.01);
        assert_eq!(cl.iter().map(|c| c.len()).collect::<Vec<_>>(), vec![2, 2, 1]);
    }
}
