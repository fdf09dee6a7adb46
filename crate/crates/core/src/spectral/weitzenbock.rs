//! Discrete check of `−Δ_A − b = 2∂′*∂′` on the torus.

use super::grid::TorusField;
use super::operator::MagneticOperator;
use crate::elliptic::{hodge_star, FormType};
use crate::linalg::c;
use crate::{Complex64, Result};

/// Centred covariant `∇_x + i∇_y` (twice the `(0,1)` part of `∇_A`), built
/// from the links along `1` and `τ`.
pub struct DelBar<'a> {
    op: &'a MagneticOperator,
    coef: [Complex64; 2],
}

impl<'a> DelBar<'a> {
    pub fn new(op: &'a MagneticOperator) -> Self {
        let g = &op.grid;
        let phi = g.tau.arg();
        let l1 = g.r.sqrt() / g.n as f64;
        let l2 = l1 * g.tau.norm();
        // ∇_y = (∇_τ − cos φ ∇_1)/sin φ; the (0,1) projector carries the +i of the Hodge star
        let star = hodge_star(FormType::Dubar);
        let c1 = (c(1.0, 0.0) - star * (phi.cos() / phi.sin())) / (2.0 * l1);
        let c2 = star / (phi.sin() * 2.0 * l2);
        Self { op, coef: [c1, c2] }
    }

    /// Stencil of row `v`: `(site, coefficient)`.
    fn row(&self, v: usize) -> [(usize, Complex64); 4] {
        let g = &self.op.grid;
        let (j, k) = g.site(v);
        let mut out = [(0, c(0.0, 0.0)); 4];
        for t in 0..2 {
            let (w, u) = self.op.link(v, t);
            let (dj, dk) = self.op.edges[t];
            let n = g.n as isize;
            let src = g.index((j as isize - dj).rem_euclid(n) as usize, (k as isize - dk).rem_euclid(n) as usize);
            let (_, ub) = self.op.link(src, t);
            out[2 * t] = (w, self.coef[t] * u);
            out[2 * t + 1] = (src, -self.coef[t] * ub.conj());
        }
        out
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..x.len()).map(|v| self.row(v).iter().map(|&(w, a)| a * x[w]).sum()).collect()
    }

    pub fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![c(0.0, 0.0); y.len()];
        for (v, &yv) in y.iter().enumerate() {
            for (w, a) in self.row(v) {
                out[w] += a.conj() * yv;
            }
        }
        out
    }
}

/// `‖(−Δ_A − b_r)ψ − 2∂′*∂′ψ‖ / ‖ψ‖`.
pub fn weitzenbock_residual(op: &MagneticOperator, field: &TorusField) -> Result<f64> {
    let h = op.apply_field(field)?;
    let d = DelBar::new(op);
    let dd = d.apply_adjoint(&d.apply(&field.data));
    let mut num = 0.0;
    let mut den = 0.0;
    for v in 0..field.data.len() {
        let lhs = h.data[v] - field.data[v] * op.b_r;
        num += (lhs - dd[v]).norm_sqr();
        den += field.data[v].norm_sqr();
    }
    Ok((num / den).sqrt())
}

/// `‖∂′ψ‖/‖ψ‖` for the discrete operator.
pub fn delbar_norm(op: &MagneticOperator, field: &TorusField) -> f64 {
    let d = DelBar::new(op).apply(&field.data);
    let num: f64 = d.iter().map(|z| z.norm_sqr()).sum();
    let den: f64 = field.data.iter().map(|z| z.norm_sqr()).sum();
    (num / den).sqrt() / 2.0
}

/// Smooth section of the flux-`n` bundle built from Gaussian rows with
/// seeded random centres, widths and amplitudes.
pub fn smooth_random_section(grid: super::grid::TorusGrid, n: i64, seed: u64) -> TorusField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(i64, f64, f64, Complex64)> = (0..4)
        .map(|q| (q, rng.random_range(0.0..1.0), rng.random_range(2.0..4.0), c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect();
    TorusField::from_fn(grid, n, |s, t| {
        let mut acc = c(0.0, 0.0);
        for &(q, t0, alpha, amp) in &terms {
            for m in -6..=6i64 {
                let x = t + m as f64 - t0;
                acc += amp * c(-alpha * x * x, 2.0 * std::f64::consts::PI * (n * m + q) as f64 * s).exp();
            }
        }
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::super::grid::TorusGrid;
    use super::super::landau::lowest_level_state;
    use super::super::operator::assemble;
    use super::*;

    #[test]
    fn constant_field_zero_flux() {
        let g = TorusGrid::new(16, c(0.0, 1.0), 1.0).unwrap();
        let op = assemble(&g, 0.0).unwrap();
        let f = TorusField::from_fn(g, 0, |_, _| c(1.0, 0.0));
        assert!(weitzenbock_residual(&op, &f).unwrap() < 1e-10);
    }

    #[test]
    fn second_order_on_smooth_fields() {
        for tau in [c(0.0, 1.0), c(0.2, 1.1)] {
            let mut res = Vec::new();
            for n in [32, 64] {
                let g = TorusGrid::new(n, tau, 1.0).unwrap();
                let op = assemble(&g, 2.0).unwrap();
                res.push(weitzenbock_residual(&op, &smooth_random_section(g, 2, 11)).unwrap());
            }
            let ratio = res[0] / res[1];
            assert!(ratio > 3.5 && ratio < 4.5, "{res:?}");
        }
    }

    #[test]
    fn lowest_level_is_delbar_kernel() {
        let g = TorusGrid::new(64, c(0.0, 1.0), 1.0).unwrap();
        let op = assemble(&g, 2.0).unwrap();
        let psi = lowest_level_state(g, 2, 0).unwrap();
        assert!(delbar_norm(&op, &psi) < 1e-2);
        let q = op.rayleigh(&psi).unwrap();
        assert!((q - op.b_r).abs() / op.b_r < 2e-3);
    }
}
