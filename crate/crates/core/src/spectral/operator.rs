use super::grid::{TorusField, TorusGrid};
use crate::linalg::c;
use crate::{Complex64, Error, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Extra real link angles `a_e` added to the background Peierls phases,
/// one per site and forward edge type.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkField {
    pub values: Vec<[f64; 3]>,
}

impl LinkField {
    pub fn zeros(grid: &TorusGrid) -> Self {
        Self { values: vec![[0.0; 3]; grid.len()] }
    }

    /// Pure gauge `a = dχ`: `a_{v→w} = χ_w − χ_v`.
    pub fn gradient(op_edges: &[(isize, isize); 3], grid: &TorusGrid, chi: &[f64]) -> Self {
        let values = (0..grid.len())
            .map(|v| {
                let (j, k) = grid.site(v);
                let mut out = [0.0; 3];
                for (t, &(dj, dk)) in op_edges.iter().enumerate() {
                    let w = wrap(grid, j, k, dj, dk);
                    out[t] = chi[w] - chi[v];
                }
                out
            })
            .collect();
        Self { values }
    }
}

fn wrap(grid: &TorusGrid, j: usize, k: usize, dj: isize, dk: isize) -> usize {
    let n = grid.n as isize;
    grid.index((j as isize + dj).rem_euclid(n) as usize, (k as isize + dk).rem_euclid(n) as usize)
}

/// Background transport `U` for the link `(j,k) → (j+dj, k+dk)` in the Landau
/// gauge `A = −2πn·t ds`, including the magnetic-translation cocycle
/// `ψ(s, t+1) = e^{−2πins} ψ(s, t)` when the link crosses `t = 1`.
pub fn link_transport(grid: &TorusGrid, flux: i64, j: usize, k: usize, dj: isize, dk: isize) -> (usize, Complex64) {
    let n = grid.n as f64;
    let nf = flux as f64;
    let t = k as f64 / n;
    let theta = -2.0 * PI * nf * (dj as f64 / n) * (t + dk as f64 / (2.0 * n));
    let mut u = c(0.0, -theta).exp();
    let s_end = (j as isize + dj) as f64 / n;
    let k_end = k as isize + dk;
    if k_end >= grid.n as isize {
        u *= c(0.0, -2.0 * PI * nf * s_end).exp();
    } else if k_end < 0 {
        u *= c(0.0, 2.0 * PI * nf * s_end).exp();
    }
    (wrap(grid, j, k, dj, dk), u)
}

fn cot(x: Complex64, y: Complex64) -> f64 {
    let p = x.conj() * y;
    p.re / p.im.abs()
}

/// Edge stencil of the lattice triangulation and its cotangent weights.
///
/// Uses the diagonal `τ − 1` or `τ + 1`, whichever keeps all weights
/// non-negative; on rectangular lattices the diagonal weight vanishes and the
/// stencil reduces to five points.
pub fn stencil(tau: Complex64) -> ([(isize, isize); 3], [f64; 3]) {
    let a = c(1.0, 0.0);
    let b = tau;
    let w1 = [cot(-b, a - b), cot(-a, b - a), cot(a, b)];
    if w1.iter().all(|&w| w >= -1e-14) {
        return ([(1, 0), (0, 1), (-1, 1)], w1.map(|w| w.max(0.0)));
    }
    let w2 = [cot(-(a + b), -b), cot(a, a + b), cot(-a, b)];
    ([(1, 0), (0, 1), (1, 1)], w2)
}

/// Magnetic Laplacian `−Δ_A` of a uniform field on the torus, with Peierls
/// phases on the links of the cotangent stencil.
#[derive(Debug, Clone)]
pub struct MagneticOperator {
    pub grid: TorusGrid,
    pub flux_quanta: i64,
    /// Field strength `2πn/(r·Area)`.
    pub b_r: f64,
    pub edges: [(isize, isize); 3],
    pub weights: [f64; 3],
    diag: f64,
    /// Forward links per site: target and full transport factor.
    links: Vec<[(usize, Complex64); 3]>,
    rows: Vec<[(usize, Complex64); 6]>,
}

/// Assembles the operator for a flux given as a real number; only integers
/// are admissible.
pub fn assemble(grid: &TorusGrid, flux: f64) -> Result<MagneticOperator> {
    if !flux.is_finite() || (flux - flux.round()).abs() > 1e-12 {
        return Err(Error::FluxNotInteger(flux));
    }
    MagneticOperator::new(grid, flux.round() as i64, None)
}

impl MagneticOperator {
    pub fn new(grid: &TorusGrid, flux_quanta: i64, extra: Option<&LinkField>) -> Result<Self> {
        let (edges, weights) = stencil(grid.tau);
        let area = grid.cell_area();
        let links: Vec<[(usize, Complex64); 3]> = (0..grid.len())
            .into_par_iter()
            .map(|v| {
                let (j, k) = grid.site(v);
                let mut out = [(0, c(0.0, 0.0)); 3];
                for (t, &(dj, dk)) in edges.iter().enumerate() {
                    let (w, mut u) = link_transport(grid, flux_quanta, j, k, dj, dk);
                    if let Some(a) = extra {
                        u *= c(0.0, -a.values[v][t]).exp();
                    }
                    out[t] = (w, u);
                }
                out
            })
            .collect();
        let mut rows = vec![[(0, c(0.0, 0.0)); 6]; grid.len()];
        for (v, row) in rows.iter_mut().enumerate() {
            let (j, k) = grid.site(v);
            for (t, &(dj, dk)) in edges.iter().enumerate() {
                let (w, u) = links[v][t];
                row[2 * t] = (w, -weights[t] * u / area);
                let src = wrap(grid, j, k, -dj, -dk);
                let (back, ub) = links[src][t];
                debug_assert_eq!(back, v);
                row[2 * t + 1] = (src, -weights[t] * ub.conj() / area);
            }
        }
        let diag = 2.0 * weights.iter().sum::<f64>() / area;
        Ok(Self {
            grid: *grid,
            flux_quanta,
            b_r: 2.0 * PI * flux_quanta as f64 / grid.area(),
            edges,
            weights,
            diag,
            links,
            rows,
        })
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    /// `y = Hx`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.par_iter_mut().enumerate().for_each(|(v, out)| {
            let mut s = x[v] * self.diag;
            for &(w, h) in &self.rows[v] {
                s += h * x[w];
            }
            *out = s;
        });
    }

    pub fn apply_field(&self, f: &TorusField) -> Result<TorusField> {
        f.check_sector(self.flux_quanta)?;
        let mut out = TorusField::zeros(self.grid, self.flux_quanta);
        self.apply(&f.data, &mut out.data);
        Ok(out)
    }

    /// Gershgorin bound on the spectrum, used as `‖H‖`.
    pub fn norm_bound(&self) -> f64 {
        self.rows.iter().map(|r| self.diag + r.iter().map(|(_, h)| h.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Forward link `(target, U)` of edge type `t` at site `v`.
    pub fn link(&self, v: usize, t: usize) -> (usize, Complex64) {
        self.links[v][t]
    }

    /// Rayleigh quotient `⟨ψ, Hψ⟩/⟨ψ, ψ⟩`.
    pub fn rayleigh(&self, f: &TorusField) -> Result<f64> {
        let hf = self.apply_field(f)?;
        Ok(f.inner(&hf).re / f.inner(f).re)
    }

    pub fn dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for v in 0..n {
            m[(v, v)] += c(self.diag, 0.0);
            for &(w, h) in &self.rows[v] {
                m[(v, w)] += h;
            }
        }
        m
    }

    /// Maximum `|H − H†|` over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for v in 0..self.dim() {
            for &(w, _) in &self.rows[v] {
                let back: Complex64 = self.rows[w].iter().filter(|(x, _)| *x == v).map(|(_, h)| *h).sum();
                let fwd: Complex64 = self.rows[v].iter().filter(|(x, _)| *x == w).map(|(_, h)| *h).sum();
                worst = worst.max((fwd - back.conj()).norm());
            }
        }
        worst
    }

    /// Fluxes `−arg` of the holonomy around every elementary parallelogram.
    pub fn plaquette_fluxes(&self) -> Vec<f64> {
        let g = &self.grid;
        (0..g.len())
            .map(|v| {
                let (j, k) = g.site(v);
                let (v1, u1) = link_transport(g, self.flux_quanta, j, k, 1, 0);
                let (j1, k1) = g.site(v1);
                let (v2, u2) = link_transport(g, self.flux_quanta, j1, k1, 0, 1);
                let (j2, k2) = g.site(v2);
                let (v3, u3) = link_transport(g, self.flux_quanta, j2, k2, -1, 0);
                let (j3, k3) = g.site(v3);
                let (_, u4) = link_transport(g, self.flux_quanta, j3, k3, 0, -1);
                -(u1 * u2 * u3 * u4).arg()
            })
            .collect()
    }

    /// `ψ ↦ ψ(−u)` in the Landau gauge.
    pub fn parity(&self, f: &TorusField) -> TorusField {
        let g = &self.grid;
        let n = g.n;
        let mut out = TorusField::zeros(*g, f.flux_quanta);
        for v in 0..g.len() {
            let (j, k) = g.site(v);
            let src = g.index((n - j) % n, (n - k) % n);
            let phase = if k > 0 {
                c(0.0, -2.0 * PI * f.flux_quanta as f64 * j as f64 / n as f64).exp()
            } else {
                c(1.0, 0.0)
            };
            out.data[v] = f.data[src] * phase;
        }
        out
    }

    /// Magnetic translation by `½` along the real period (requires even `N`
    /// and even flux).
    pub fn half_shift(&self, x: &mut [Complex64]) {
        let n = self.grid.n;
        let shifted: Vec<Complex64> = (0..x.len())
            .map(|v| {
                let (j, k) = self.grid.site(v);
                x[self.grid.index((j + n / 2) % n, k)]
            })
            .collect();
        x.copy_from_slice(&shifted);
    }

    /// Projector onto the `+1` eigenspace of [`Self::half_shift`].
    pub fn even_sector_projector(&self) -> Result<impl Fn(&mut [Complex64]) + Sync + '_> {
        if self.grid.n % 2 != 0 || self.flux_quanta % 2 != 0 {
            return Err(Error::InvalidArgument("half-period sector needs even N and even flux".into()));
        }
        Ok(move |x: &mut [Complex64]| {
            let mut y = x.to_vec();
            self.half_shift(&mut y);
            for (a, b) in x.iter_mut().zip(y) {
                *a = (*a + b) * 0.5;
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize, tau: Complex64) -> TorusGrid {
        TorusGrid::new(n, tau, 1.0).unwrap()
    }

    #[test]
    fn square_stencil_is_five_point() {
        let (_, w) = stencil(c(0.0, 1.0));
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15 && w[2].abs() < 1e-15);
        let (e, w) = stencil(c(-0.3, 1.1));
        assert_eq!(e[2], (1, 1));
        assert!(w.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn flux_must_be_integer() {
        assert!(matches!(assemble(&grid(16, c(0.0, 1.0)), 1.5), Err(Error::FluxNotInteger(_))));
    }

    #[test]
    fn hermitian_exactly() {
        for tau in [c(0.0, 1.0), c(0.3, 0.9), c(-0.2, 1.3)] {
            let op = assemble(&grid(16, tau), 3.0).unwrap();
            assert_eq!(op.hermiticity_defect(), 0.0);
        }
    }

    #[test]
    fn plaquette_flux_quantised() {
        let op = assemble(&grid(20, c(0.25, 1.2)), 2.0).unwrap();
        let f = op.plaquette_fluxes();
        let expect = 2.0 * PI * 2.0 / 400.0;
        assert!(f.iter().all(|x| (x - expect).abs() < 1e-12));
        assert!((f.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn zero_flux_annihilates_constants() {
        let g = grid(16, c(0.1, 1.0));
        let op = assemble(&g, 0.0).unwrap();
        let one = TorusField::from_fn(g, 0, |_, _| c(1.0, 0.0));
        let h = op.apply_field(&one).unwrap();
        assert!(h.data.iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn plane_wave_eigenvalue_oblique() {
        // e^{2πi s} on a zero-flux oblique torus: continuum eigenvalue |2π·dual|²
        let tau = c(0.3, 0.9);
        let mut prev = f64::MAX;
        for n in [32, 64] {
            let g = grid(n, tau);
            let op = assemble(&g, 0.0).unwrap();
            let f = TorusField::from_fn(g, 0, |s, _| c(0.0, 2.0 * PI * s).exp());
            let q = op.rayleigh(&f).unwrap();
            // gradient of s = x − (τ_r/τ_i) y
            let exact = (2.0 * PI).powi(2) * (1.0 + (tau.re / tau.im).powi(2));
            let err = (q - exact).abs() / exact;
            assert!(err < prev / 3.0);
            prev = err;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn gauge_transform_is_unitary_conjugation() {
        let g = grid(16, c(0.0, 1.0));
        let op = assemble(&g, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let chi: Vec<f64> = (0..g.len()).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let gop = MagneticOperator::new(&g, 2, Some(&LinkField::gradient(&op.edges, &g, &chi))).unwrap();
        let f = TorusField::from_fn(g, 2, |s, t| c((3.0 * s).sin(), t * t));
        let gf = TorusField { data: f.data.iter().zip(&chi).map(|(z, x)| z * c(0.0, *x).exp()).collect(), ..f.clone() };
        let a = op.apply_field(&f).unwrap();
        let b = gop.apply_field(&gf).unwrap();
        for v in 0..g.len() {
            assert!((b.data[v] - a.data[v] * c(0.0, chi[v]).exp()).norm() < 1e-9);
        }
    }

    #[test]
    fn parity_is_involution() {
        let g = grid(16, c(0.0, 1.0));
        let op = assemble(&g, 2.0).unwrap();
        let f = TorusField::from_fn(g, 2, |s, t| c(s, t * t + 0.3));
        let p2 = op.parity(&op.parity(&f));
        assert!(f.data.iter().zip(&p2.data).all(|(a, b)| (a - b).norm() < 1e-14));
        // parity commutes with H
        let hp = op.apply_field(&op.parity(&f)).unwrap();
        let ph = op.parity(&op.apply_field(&f).unwrap());
        assert!(hp.data.iter().zip(&ph.data).all(|(a, b)| (a - b).norm() < 1e-9));
    }
}
