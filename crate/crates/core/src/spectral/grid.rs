use crate::elliptic::PeriodLattice;
use crate::linalg::c;
use crate::{Complex64, Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform `N×N` sampling of the torus `ℂ/{1, τ}` with metric `r·|du|²`.
///
/// Site `(j, k)` sits at `u = (j + kτ)/N`; fields are stored row-major in `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub n: usize,
    pub tau: Complex64,
    pub r: f64,
}

impl TorusGrid {
    pub fn new(n: usize, tau: Complex64, r: f64) -> Result<Self> {
        if n < 16 {
            return Err(Error::InvalidArgument(format!("grid needs at least 16 samples per direction, got {n}")));
        }
        if !(tau.im > 0.0) {
            return Err(Error::DegenerateLattice(tau.im));
        }
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("metric scale r must be positive, got {r}")));
        }
        Ok(Self { n, tau, r })
    }

    pub fn from_lattice(lat: &PeriodLattice, n: usize, r: f64) -> Result<Self> {
        Self::new(n, lat.tau, r)
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, j: usize, k: usize) -> usize {
        k * self.n + j
    }

    pub fn site(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    /// Normalised coordinate `u` of site `(j, k)`.
    pub fn point(&self, j: usize, k: usize) -> Complex64 {
        (c(j as f64, 0.0) + self.tau * k as f64) / self.n as f64
    }

    /// Metric area `r·Im τ` of the torus.
    pub fn area(&self) -> f64 {
        self.r * self.tau.im
    }

    pub fn cell_area(&self) -> f64 {
        self.area() / self.len() as f64
    }

    /// Shortest physical link length.
    pub fn spacing(&self) -> f64 {
        self.r.sqrt() * self.tau.norm().min(1.0) / self.n as f64
    }

    pub fn is_rectangular(&self) -> bool {
        self.tau.re.abs() < 1e-12
    }

    /// Images of the four Weierstrass points `0, ½, τ/2, (1+τ)/2`.
    pub fn cone_points(&self) -> [Complex64; 4] {
        let t = self.tau;
        [c(0.0, 0.0), c(0.5, 0.0), 0.5 * t, 0.5 * (1.0 + t)]
    }

    /// Physical distance from `u` to the nearest cone point (torus-periodic).
    pub fn cone_distance(&self, u: Complex64) -> f64 {
        let mut best = f64::MAX;
        for p in self.cone_points() {
            for dm in -1..=1 {
                for dn in -1..=1 {
                    let d = (u - p - dm as f64 - self.tau * dn as f64).norm();
                    best = best.min(d);
                }
            }
        }
        best * self.r.sqrt()
    }

    /// `true` for sites further than `spacings` grid spacings from every cone point.
    pub fn mask(&self, spacings: f64) -> Vec<bool> {
        let h = self.spacing();
        (0..self.len())
            .map(|i| {
                let (j, k) = self.site(i);
                self.cone_distance(self.point(j, k)) > spacings * h
            })
            .collect()
    }
}

/// Samples of a section of the flux-`n` line bundle in the grid's Landau gauge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusField {
    pub grid: TorusGrid,
    pub flux_quanta: i64,
    pub data: Vec<Complex64>,
}

impl TorusField {
    pub fn zeros(grid: TorusGrid, flux_quanta: i64) -> Self {
        Self { grid, flux_quanta, data: vec![c(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: TorusGrid, flux_quanta: i64, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let n = grid.n as f64;
        let data = (0..grid.len())
            .map(|i| {
                let (j, k) = grid.site(i);
                f(j as f64 / n, k as f64 / n)
            })
            .collect();
        Self { grid, flux_quanta, data }
    }

    /// `∫ f̄ g` with the cell-area weight.
    pub fn inner(&self, other: &TorusField) -> Complex64 {
        let s: Complex64 = self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum();
        s * self.grid.cell_area()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.sqrt()
    }

    /// Average `⟨f⟩ = (1/area)∫ f` of a pointwise function of the samples.
    pub fn average(&self, f: impl Fn(Complex64) -> f64) -> f64 {
        self.data.iter().map(|&z| f(z)).sum::<f64>() / self.data.len() as f64
    }

    /// Rescales so that `⟨|ψ|²⟩ = 1`.
    pub fn normalized(mut self) -> Self {
        let m = self.average(|z| z.norm_sqr()).sqrt();
        if m > 0.0 {
            for z in &mut self.data {
                *z /= m;
            }
        }
        self
    }

    pub fn check_sector(&self, flux_quanta: i64) -> Result<()> {
        if self.flux_quanta != flux_quanta {
            return Err(Error::FluxSectorMismatch { expected: flux_quanta });
        }
        Ok(())
    }

    /// Magnitudes as an `N×N` table (rows = `k`).
    pub fn magnitude_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.grid.n).map(|row| row.iter().map(|z| z.norm()).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry() {
        let g = TorusGrid::new(16, c(0.0, 1.0), 2.0).unwrap();
        assert_eq!(g.len(), 256);
        assert!((g.cell_area() - 2.0 / 256.0).abs() < 1e-15);
        assert_eq!(g.site(g.index(3, 5)), (3, 5));
        assert!(g.cone_distance(c(0.5, 0.5)) < 1e-15);
        assert!(TorusGrid::new(8, c(0.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn mask_excludes_cone_neighbourhoods() {
        let g = TorusGrid::new(32, c(0.0, 1.0), 1.0).unwrap();
        let m = g.mask(2.0);
        assert!(!m[g.index(0, 0)] && !m[g.index(16, 16)] && !m[g.index(31, 0)]);
        assert!(m[g.index(8, 8)]);
    }

    #[test]
    fn normalisation() {
        let g = TorusGrid::new(16, c(0.2, 1.1), 1.0).unwrap();
        let f = TorusField::from_fn(g, 0, |s, t| c(1.0 + s, t)).normalized();
        assert!((f.average(|z| z.norm_sqr()) - 1.0).abs() < 1e-14);
    }
}
