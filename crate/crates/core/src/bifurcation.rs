//! Abrikosov constant `β`, critical `κ_c` and a Lyapunov–Schmidt solver for the
//! branch of abelian Ginzburg–Landau solutions leaving the normal state on a
//! rectangular torus.
//!
//! The discrete energy is
//!
//! ```text
//! E(ψ, a) = Σ_links w|ψ_v − U e^{−ia} ψ_w|² + Σ_plaquettes Φ(a)²/A + (κ²/2) Σ_sites A(|ψ|² − r)²
//! ```
//!
//! whose `ψ̄`-gradient is `A·(−Δ_{A+a}ψ + κ²(|ψ|² − r)ψ)` and whose `a`-gradient
//! is `2(curl*curl a/A − J)`. The kernel is taken in the sector invariant under
//! the half-period magnetic translation, where the lowest level is simple.

use crate::linalg::c;
use crate::spectral::{chfsi, EigenOptions, HermitianOperator, LinkField, MagneticOperator, TorusField, TorusGrid};
use crate::{Complex64, Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// `⟨|ξ|⁴⟩/⟨|ξ|²⟩²`, i.e. `⟨|ξ|⁴⟩` for a normalised field.
pub fn beta_constant(xi: &TorusField) -> f64 {
    let m2 = xi.average(|z| z.norm_sqr());
    xi.average(|z| z.norm_sqr().powi(2)) / (m2 * m2)
}

/// `√(½(1 − 1/β))`.
pub fn kappa_c(beta: f64) -> Result<f64> {
    if !(beta >= 1.0) {
        return Err(Error::BetaBelowOne(beta));
    }
    Ok((0.5 * (1.0 - 1.0 / beta)).sqrt())
}

/// Periodic 5-point Laplacian on an `N×N` grid, diagonalised by FFT.
struct Poisson {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    eig: Vec<f64>,
}

impl Poisson {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let eig = (0..n * n)
            .map(|i| {
                let (p, q) = ((i % n) as f64, (i / n) as f64);
                4.0 - 2.0 * (2.0 * PI * p / n as f64).cos() - 2.0 * (2.0 * PI * q / n as f64).cos()
            })
            .collect();
        Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n), eig }
    }

    fn fft2(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        for row in data.chunks_mut(n) {
            fft.process(row);
        }
        let mut col = vec![c(0.0, 0.0); n];
        for j in 0..n {
            for k in 0..n {
                col[k] = data[k * n + j];
            }
            fft.process(&mut col);
            for k in 0..n {
                data[k * n + j] = col[k];
            }
        }
    }

    /// `L^{−power}` on the mean-free part of `rhs`.
    fn solve(&self, rhs: &[f64], power: i32) -> Vec<f64> {
        let mut d: Vec<Complex64> = rhs.iter().map(|&x| c(x, 0.0)).collect();
        self.fft2(&mut d, &self.fwd);
        for (z, &l) in d.iter_mut().zip(&self.eig) {
            *z = if l.abs() < 1e-12 { c(0.0, 0.0) } else { *z / l.powi(power) };
        }
        self.fft2(&mut d, &self.inv);
        let s = 1.0 / (self.n * self.n) as f64;
        d.iter().map(|z| z.re * s).collect()
    }
}

/// Link and plaquette calculus on the rectangular grid (edge types `1`, `τ`).
struct Calculus {
    grid: TorusGrid,
    poisson: Poisson,
}

impl Calculus {
    fn new(grid: TorusGrid) -> Result<Self> {
        if !grid.is_rectangular() {
            return Err(Error::UnsupportedLattice(format!(
                "the bifurcation solver needs a rectangular lattice, got τ = {}",
                grid.tau
            )));
        }
        Ok(Self { grid, poisson: Poisson::new(grid.n) })
    }

    fn at(&self, v: usize, dj: isize, dk: isize) -> usize {
        let n = self.grid.n as isize;
        let (j, k) = self.grid.site(v);
        self.grid.index((j as isize + dj).rem_euclid(n) as usize, (k as isize + dk).rem_euclid(n) as usize)
    }

    fn grad(&self, chi: &[f64]) -> Vec<[f64; 2]> {
        (0..chi.len()).map(|v| [chi[self.at(v, 1, 0)] - chi[v], chi[self.at(v, 0, 1)] - chi[v]]).collect()
    }

    fn div(&self, a: &[[f64; 2]]) -> Vec<f64> {
        (0..a.len()).map(|v| -a[v][0] + a[self.at(v, -1, 0)][0] - a[v][1] + a[self.at(v, 0, -1)][1]).collect()
    }

    fn curl(&self, a: &[[f64; 2]]) -> Vec<f64> {
        (0..a.len()).map(|v| a[v][0] + a[self.at(v, 1, 0)][1] - a[self.at(v, 0, 1)][0] - a[v][1]).collect()
    }

    fn curl_t(&self, phi: &[f64]) -> Vec<[f64; 2]> {
        (0..phi.len()).map(|v| [phi[v] - phi[self.at(v, 0, -1)], phi[self.at(v, -1, 0)] - phi[v]]).collect()
    }

    /// Removes the exact part: `g − d(Δ⁻¹ d*g)`.
    fn project_coclosed(&self, g: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let chi = self.poisson.solve(&self.div(g), 1);
        let dg = self.grad(&chi);
        g.iter().zip(dg).map(|(x, y)| [x[0] - y[0], x[1] - y[1]]).collect()
    }
}

fn to_links(a: &[[f64; 2]]) -> LinkField {
    LinkField { values: a.iter().map(|x| [x[0], x[1], 0.0]).collect() }
}

fn from_links(a: &LinkField) -> Vec<[f64; 2]> {
    a.values.iter().map(|x| [x[0], x[1]]).collect()
}

/// Supercurrent `J_e = w Im(ψ̄_v U e^{−ia} ψ_w)` on the `1`- and `τ`-links.
fn current(op: &MagneticOperator, psi: &[Complex64]) -> Vec<[f64; 2]> {
    (0..psi.len())
        .map(|v| {
            let mut out = [0.0; 2];
            for (t, o) in out.iter_mut().enumerate() {
                let (w, u) = op.link(v, t);
                *o = op.weights[t] * (psi[v].conj() * u * psi[w]).im;
            }
            out
        })
        .collect()
}

/// Discrete residual pair of the field equations.
#[derive(Debug, Clone)]
pub struct ResidualPair {
    /// `−Δ_{A+a}ψ + κ²(|ψ|² − r)ψ`
    pub psi: TorusField,
    /// Co-closed projection of `curl*curl a/A − J`
    pub a: Vec<[f64; 2]>,
    /// `⟨|·|²⟩^{1/2}` of each component.
    pub psi_norm: f64,
    pub a_norm: f64,
}

fn mean_sq(a: &[[f64; 2]]) -> f64 {
    a.iter().map(|x| x[0] * x[0] + x[1] * x[1]).sum::<f64>() / a.len() as f64
}

fn residual_with(
    calc: &Calculus,
    op: &MagneticOperator,
    psi: &TorusField,
    a: &[[f64; 2]],
    kappa: f64,
) -> ResidualPair {
    let r = calc.grid.r;
    let mut rp = vec![c(0.0, 0.0); psi.data.len()];
    op.apply(&psi.data, &mut rp);
    for (x, p) in rp.iter_mut().zip(&psi.data) {
        *x += *p * (kappa * kappa * (p.norm_sqr() - r));
    }
    let area = calc.grid.cell_area();
    let phi = calc.curl(a);
    let cc = calc.curl_t(&phi);
    let j = current(op, &psi.data);
    let g: Vec<[f64; 2]> = cc.iter().zip(&j).map(|(x, y)| [x[0] / area - y[0], x[1] / area - y[1]]).collect();
    let pg = calc.project_coclosed(&g);
    let psi_res = TorusField { grid: psi.grid, flux_quanta: psi.flux_quanta, data: rp };
    let psi_norm = psi_res.average(|z| z.norm_sqr()).sqrt();
    let a_norm = mean_sq(&pg).sqrt();
    ResidualPair { psi: psi_res, a: pg, psi_norm, a_norm }
}

/// Residual of the discrete field equations at `(ψ, a)` for background flux
/// `flux_quanta`; the metric scale is taken from `psi.grid`.
pub fn assemble_residual(psi: &TorusField, a: &LinkField, kappa: f64, flux_quanta: i64) -> Result<ResidualPair> {
    psi.check_sector(flux_quanta)?;
    let calc = Calculus::new(psi.grid)?;
    let op = MagneticOperator::new(&psi.grid, flux_quanta, Some(a))?;
    Ok(residual_with(&calc, &op, psi, &from_links(a), kappa))
}

/// Hodge Laplacian `dd* + d*d` on link fields.
struct OneFormLaplacian<'a> {
    calc: &'a Calculus,
}

impl OneFormLaplacian<'_> {
    fn apply_real(&self, a: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let dd = self.calc.grad(&self.calc.div(a));
        let cc = self.calc.curl_t(&self.calc.curl(a));
        dd.iter().zip(cc).map(|(x, y)| [x[0] + y[0], x[1] + y[1]]).collect()
    }
}

impl HermitianOperator for OneFormLaplacian<'_> {
    fn dim(&self) -> usize {
        2 * self.calc.grid.len()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.calc.grid.len();
        let re: Vec<[f64; 2]> = (0..n).map(|v| [x[2 * v].re, x[2 * v + 1].re]).collect();
        let im: Vec<[f64; 2]> = (0..n).map(|v| [x[2 * v].im, x[2 * v + 1].im]).collect();
        let (lr, li) = (self.apply_real(&re), self.apply_real(&im));
        for v in 0..n {
            y[2 * v] = c(lr[v][0], li[v][0]);
            y[2 * v + 1] = c(lr[v][1], li[v][1]);
        }
    }

    fn upper_bound(&self) -> f64 {
        16.0
    }
}

/// Kernel data at `r = 1`: the lowest mode `ξ` of the symmetric sector, the
/// Galerkin complement and the harmonic link fields.
#[derive(Debug, Clone, Serialize)]
pub struct NullSpaceData {
    pub grid: TorusGrid,
    pub flux_quanta: i64,
    /// Lowest sector eigenvalue at `r = 1`.
    pub lambda0: f64,
    /// `⟨|ξ|²⟩ = 1`.
    pub xi: TorusField,
    pub modes: Vec<TorusField>,
    pub mode_values: Vec<f64>,
    pub beta: f64,
    pub omega_dim: usize,
    #[serde(skip)]
    pub harmonic: Vec<Vec<[f64; 2]>>,
    /// `max(‖d h‖, ‖d*h‖)` over the harmonic basis.
    pub harmonic_defect: f64,
    /// Lowest eigenvalues of the link-field Hodge Laplacian.
    pub hodge_spectrum: Vec<f64>,
}

pub fn null_space(n: usize, tau: Complex64, flux_quanta: i64, galerkin_modes: usize, opts: &EigenOptions) -> Result<NullSpaceData> {
    let grid = TorusGrid::new(n, tau, 1.0)?;
    let calc = Calculus::new(grid)?;
    let op = MagneticOperator::new(&grid, flux_quanta, None)?;
    let proj = op.even_sector_projector()?;
    let pairs = chfsi(&op, galerkin_modes + 1, opts, Some(proj))?;
    let fields: Vec<TorusField> = (0..=galerkin_modes)
        .map(|j| {
            TorusField { grid, flux_quanta, data: pairs.vectors.column(j).as_slice().to_vec() }.normalized()
        })
        .collect();
    let xi = fields[0].clone();
    let beta = beta_constant(&xi);

    let hodge = OneFormLaplacian { calc: &calc };
    let hopts = EigenOptions { degree: 60, tol: 1e-10, ..*opts };
    let hp = chfsi(&hodge, 4, &hopts, None::<fn(&mut [Complex64])>)?;
    let zero: Vec<usize> = (0..hp.values.len()).filter(|&i| hp.values[i].abs() < 1e-8).collect();
    let mut harmonic: Vec<Vec<[f64; 2]>> = Vec::new();
    for &i in &zero {
        for part in 0..2 {
            let col = hp.vectors.column(i);
            let mut h: Vec<[f64; 2]> = (0..grid.len())
                .map(|v| {
                    let (x, y) = (col[2 * v], col[2 * v + 1]);
                    if part == 0 { [x.re, y.re] } else { [x.im, y.im] }
                })
                .collect();
            for b in &harmonic {
                let d: f64 = h.iter().zip(b).map(|(x, y)| x[0] * y[0] + x[1] * y[1]).sum();
                for (x, y) in h.iter_mut().zip(b) {
                    x[0] -= d * y[0];
                    x[1] -= d * y[1];
                }
            }
            let nrm = h.iter().map(|x| x[0] * x[0] + x[1] * x[1]).sum::<f64>().sqrt();
            if nrm > 1e-6 && harmonic.len() < zero.len() {
                harmonic.push(h.iter().map(|x| [x[0] / nrm, x[1] / nrm]).collect());
            }
        }
    }
    let harmonic_defect = harmonic
        .iter()
        .map(|h| {
            let cu = calc.curl(h).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let dv = calc.div(h).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            cu.max(dv)
        })
        .fold(0.0, f64::max);
    Ok(NullSpaceData {
        grid,
        flux_quanta,
        lambda0: pairs.values[0],
        xi,
        modes: fields[1..].to_vec(),
        mode_values: pairs.values[1..].to_vec(),
        beta,
        omega_dim: zero.len(),
        harmonic,
        harmonic_defect,
        hodge_spectrum: hp.values,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_newton: usize,
    pub max_outer: usize,
    /// Phase of the kernel direction and seed of the initial complement guess.
    pub restart_seed: Option<u64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_newton: 30, max_outer: 60, restart_seed: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    pub kappa: f64,
    pub r: f64,
    /// Lowest sector eigenvalue `λ₀/r` at this `r`.
    pub lambda0_r: f64,
    /// `κ²r − λ₀/r`, the detuning of the discrete problem.
    pub detuning: f64,
    /// `κ²r − b/r` with `b = 2πn/Area` at `r = 1`.
    pub flux_detuning: f64,
    pub beta: f64,
    pub kappa_c: f64,
    pub sign_condition: bool,
    pub trivial: bool,
    /// `⟨ξ, ψ⟩` for `⟨|ξ|²⟩ = 1`.
    pub amplitude: f64,
    /// `⟨|w|²⟩^{1/2}` of the complement component of `ψ`.
    pub w_norm: f64,
    pub a_norm: f64,
    /// Galerkin-projected residual of both equations.
    pub residual: f64,
    /// `Im⟨ξ, R⟩` at the solution.
    pub phase_residual: f64,
    /// Slope `C` in `Re⟨ξ,R⟩/s ≈ −detuning + C s²`.
    pub quartic: f64,
    pub iterations: usize,
}

struct Solver<'a> {
    ns: &'a NullSpaceData,
    calc: Calculus,
    grid: TorusGrid,
    kappa: f64,
    phase: Complex64,
    tol: f64,
    opts: SolveOptions,
}

struct InnerState {
    c: DVector<Complex64>,
    a: Vec<[f64; 2]>,
    iterations: usize,
}

impl Solver<'_> {
    fn psi(&self, s: f64, cv: &DVector<Complex64>) -> TorusField {
        let mut data: Vec<Complex64> = self.ns.xi.data.iter().map(|z| z * self.phase * s).collect();
        for (j, m) in self.ns.modes.iter().enumerate() {
            let cj = cv[j];
            for (d, z) in data.iter_mut().zip(&m.data) {
                *d += cj * z;
            }
        }
        TorusField { grid: self.grid, flux_quanta: self.ns.flux_quanta, data }
    }

    fn project(f: &TorusField, r: &[Complex64]) -> Complex64 {
        f.data.iter().zip(r).map(|(a, b)| a.conj() * b).sum::<Complex64>() / r.len() as f64
    }

    fn op_with(&self, a: &[[f64; 2]]) -> Result<MagneticOperator> {
        MagneticOperator::new(&self.grid, self.ns.flux_quanta, Some(&to_links(a)))
    }

    fn maxwell(&self, op: &MagneticOperator, psi: &TorusField) -> Vec<[f64; 2]> {
        let j = current(op, &psi.data);
        let area = self.grid.cell_area();
        let rhs: Vec<f64> = self.calc.curl(&j).iter().map(|x| x * area).collect();
        let phi = self.calc.poisson.solve(&rhs, 2);
        self.calc.curl_t(&phi)
    }

    /// Solves the complement equations at fixed kernel amplitude `s`.
    fn inner(&self, s: f64, mut st: InnerState) -> Result<InnerState> {
        let m = self.ns.modes.len();
        let k2 = self.kappa * self.kappa;
        let r = self.grid.r;
        let scale = self.ns.lambda0 / r * s.abs().max(1e-300);
        for _ in 0..self.opts.max_outer {
            let op = self.op_with(&st.a)?;
            let mut first = f64::NAN;
            for it in 0..self.opts.max_newton {
                st.iterations += 1;
                let psi = self.psi(s, &st.c);
                let mut rp = vec![c(0.0, 0.0); psi.data.len()];
                op.apply(&psi.data, &mut rp);
                for (x, p) in rp.iter_mut().zip(&psi.data) {
                    *x += *p * (k2 * (p.norm_sqr() - r));
                }
                let f = DVector::from_iterator(m, self.ns.modes.iter().map(|md| Self::project(md, &rp)));
                let fnorm = f.norm();
                if it == 0 {
                    first = fnorm;
                }
                if fnorm <= self.tol * scale {
                    break;
                }
                // Jacobian of the projected equations in (Re c, Im c)
                let lin: Vec<Vec<Complex64>> = self
                    .ns
                    .modes
                    .iter()
                    .map(|md| {
                        let mut y = vec![c(0.0, 0.0); md.data.len()];
                        op.apply(&md.data, &mut y);
                        for ((yv, z), p) in y.iter_mut().zip(&md.data).zip(&psi.data) {
                            *yv += *z * (k2 * (2.0 * p.norm_sqr() - r));
                        }
                        y
                    })
                    .collect();
                let nl: Vec<Vec<Complex64>> = self
                    .ns
                    .modes
                    .iter()
                    .map(|md| md.data.iter().zip(&psi.data).map(|(z, p)| p * p * z.conj() * k2).collect())
                    .collect();
                let mut jac = DMatrix::<f64>::zeros(2 * m, 2 * m);
                for i in 0..m {
                    for j in 0..m {
                        let a1 = Self::project(&self.ns.modes[i], &lin[j]);
                        let a2 = Self::project(&self.ns.modes[i], &nl[j]);
                        let b1 = a1 + a2;
                        let b2 = c(0.0, 1.0) * (a1 - a2);
                        jac[(i, j)] = b1.re;
                        jac[(i + m, j)] = b1.im;
                        jac[(i, j + m)] = b2.re;
                        jac[(i + m, j + m)] = b2.im;
                    }
                }
                let rhs = DVector::from_iterator(2 * m, f.iter().map(|z| -z.re).chain(f.iter().map(|z| -z.im)));
                let dz = jac.lu().solve(&rhs).ok_or_else(|| Error::NewtonDiverged("singular complement Jacobian".into()))?;
                for j in 0..m {
                    st.c[j] += c(dz[j], dz[j + m]);
                }
                if it + 1 == self.opts.max_newton {
                    return Err(Error::NewtonDiverged(format!("complement Newton stalled at |F| = {fnorm:e}")));
                }
            }
            let psi = self.psi(s, &st.c);
            let a_new = self.maxwell(&op, &psi);
            let da = a_new.iter().zip(&st.a).map(|(x, y)| (x[0] - y[0]).abs().max((x[1] - y[1]).abs())).fold(0.0, f64::max);
            st.a = a_new;
            if da <= 1e-15 && first <= self.tol * scale {
                return Ok(st);
            }
        }
        Err(Error::NewtonDiverged("field/complement alternation did not settle".into()))
    }

    /// `Re⟨ξ,R⟩/s` and `Im⟨ξ,R⟩/s` after the complement solve.
    fn reduced(&self, s: f64, st: InnerState) -> Result<(f64, f64, InnerState)> {
        let st = self.inner(s, st)?;
        let op = self.op_with(&st.a)?;
        let psi = self.psi(s, &st.c);
        let mut rp = vec![c(0.0, 0.0); psi.data.len()];
        op.apply(&psi.data, &mut rp);
        let k2 = self.kappa * self.kappa;
        for (x, p) in rp.iter_mut().zip(&psi.data) {
            *x += *p * (k2 * (p.norm_sqr() - self.grid.r));
        }
        let g = Self::project(&self.ns.xi, &rp) * self.phase.conj() / s;
        Ok((g.re, g.im, st))
    }
}

/// Solves the reduced bifurcation equation at `(κ, r)`.
///
/// Returns [`Error::NoBifurcation`] when the quartic coefficient of the
/// reduced equation has the opposite sign to the detuning.
pub fn lyapunov_schmidt_solve(ns: &NullSpaceData, kappa: f64, r: f64, opts: &SolveOptions) -> Result<BranchPoint> {
    if !(kappa > 0.0) || !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("need κ > 0 and r > 0, got κ = {kappa}, r = {r}")));
    }
    let grid = TorusGrid { r, ..ns.grid };
    let calc = Calculus::new(grid)?;
    let lambda0_r = ns.lambda0 / r;
    let k2 = kappa * kappa;
    let detuning = k2 * r - lambda0_r;
    let b = 2.0 * PI * ns.flux_quanta as f64 / ns.grid.area();
    let kc = kappa_c(ns.beta)?;
    let sign_condition = detuning * (kappa - kc) > 0.0;
    let m = ns.modes.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.restart_seed.unwrap_or(0));
    let phase = match opts.restart_seed {
        Some(_) => c(0.0, rng.random_range(0.0..2.0 * PI)).exp(),
        None => c(1.0, 0.0),
    };
    let base = BranchPoint {
        kappa,
        r,
        lambda0_r,
        detuning,
        flux_detuning: k2 * r - b / r,
        beta: ns.beta,
        kappa_c: kc,
        sign_condition,
        trivial: true,
        amplitude: 0.0,
        w_norm: 0.0,
        a_norm: 0.0,
        residual: 0.0,
        phase_residual: 0.0,
        quartic: f64::NAN,
        iterations: 0,
    };
    // below this the reduced equation is dominated by roundoff in λ₀
    if detuning.abs() <= 1e-12 * lambda0_r || k2 * r == b / r {
        return Ok(base);
    }
    let solver = Solver { ns, calc, grid, kappa, phase, tol: opts.tol, opts: *opts };
    let init = |rng: &mut ChaCha8Rng, s: f64| InnerState {
        c: DVector::from_fn(m, |_, _| {
            if opts.restart_seed.is_some() {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * (1e-3 * s)
            } else {
                c(0.0, 0.0)
            }
        }),
        a: vec![[0.0; 2]; grid.len()],
        iterations: 0,
    };
    // leading-order guess from the continuum reduced energy
    let quartic_guess = (k2 * ns.beta - 0.5 * (ns.beta - 1.0)).abs().max(1e-3);
    let sigma_probe = (detuning.abs() / quartic_guess).min(0.25 * r);
    let (h_probe, _, st) = solver.reduced(sigma_probe.sqrt(), init(&mut rng, sigma_probe.sqrt()))?;
    let quartic = (h_probe + detuning) / sigma_probe;
    let sigma_root = detuning / quartic;
    if !(sigma_root > 0.0) {
        return Err(Error::NoBifurcation { detuning, quartic });
    }
    // secant in σ = s², where the reduced function is nearly affine
    let (mut s0, mut h0) = (sigma_probe, h_probe);
    let mut s1 = sigma_root;
    let (mut h1, mut im1, mut st1) = solver.reduced(s1.sqrt(), st)?;
    let mut iterations = 1;
    let htol = opts.tol * lambda0_r.max(1.0);
    while h1.abs() > htol {
        iterations += 1;
        if iterations > 60 {
            return Err(Error::NewtonDiverged(format!("reduced secant stalled at {h1:e}")));
        }
        let s2 = s1 - h1 * (s1 - s0) / (h1 - h0);
        if !(s2 > 0.0) {
            return Err(Error::NewtonDiverged("reduced secant left σ > 0".into()));
        }
        (s0, h0) = (s1, h1);
        s1 = s2;
        (h1, im1, st1) = solver.reduced(s1.sqrt(), st1)?;
        if (s1 - s0).abs() <= 1e-15 * s1 {
            break;
        }
    }
    let s = s1.sqrt();
    let op = solver.op_with(&st1.a)?;
    let psi = solver.psi(s, &st1.c);
    let res = residual_with(&solver.calc, &op, &psi, &st1.a, kappa);
    let mut gal = Solver::project(&ns.xi, &res.psi.data).norm_sqr();
    for md in &ns.modes {
        gal += Solver::project(md, &res.psi.data).norm_sqr();
    }
    let residual = (gal + res.a_norm * res.a_norm).sqrt();
    Ok(BranchPoint {
        trivial: false,
        amplitude: s,
        w_norm: st1.c.norm(),
        a_norm: mean_sq(&st1.a).sqrt(),
        residual,
        phase_residual: im1 * s,
        quartic,
        iterations: iterations + st1.iterations,
        ..base
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub r: f64,
    pub kappa_c: f64,
    pub amplitude: f64,
    pub residual: f64,
    pub detuning: f64,
    pub status: String,
}

/// Solves on `steps` equispaced values of `r` (in parallel).
pub fn scan(ns: &NullSpaceData, kappa: f64, r_min: f64, r_max: f64, steps: usize, opts: &SolveOptions) -> Result<Vec<ScanRow>> {
    if steps == 0 || !(r_max >= r_min) {
        return Err(Error::InvalidArgument("scan needs steps ≥ 1 and r_max ≥ r_min".into()));
    }
    let kc = kappa_c(ns.beta)?;
    (0..steps)
        .into_par_iter()
        .map(|i| {
            let r = if steps == 1 { r_min } else { r_min + (r_max - r_min) * i as f64 / (steps - 1) as f64 };
            match lyapunov_schmidt_solve(ns, kappa, r, opts) {
                Ok(bp) => Ok(ScanRow {
                    r,
                    kappa_c: kc,
                    amplitude: bp.amplitude,
                    residual: bp.residual,
                    detuning: bp.detuning,
                    status: if bp.trivial { "trivial" } else { "branch" }.into(),
                }),
                Err(Error::NoBifurcation { detuning, .. }) => {
                    Ok(ScanRow { r, kappa_c: kc, amplitude: 0.0, residual: 0.0, detuning, status: "no_bifurcation".into() })
                }
                Err(e) => Err(e),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn ns() -> &'static NullSpaceData {
        static NS: OnceLock<NullSpaceData> = OnceLock::new();
        NS.get_or_init(|| null_space(32, c(0.0, 1.0), 2, 40, &EigenOptions::default()).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn beta_at_least_one(seed in 0u64..1000) {
            let g = TorusGrid::new(16, c(0.0, 1.0), 1.0).unwrap();
            let f = crate::spectral::weitzenbock::smooth_random_section(g, 2, seed);
            prop_assert!(beta_constant(&f) >= 1.0 - 1e-14);
        }
    }

    #[test]
    fn kappa_c_values() {
        assert_eq!(kappa_c(1.0).unwrap(), 0.0);
        assert!((kappa_c(2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((kappa_c(1e15).unwrap() - 0.5f64.sqrt()).abs() < 1e-7);
        assert!(matches!(kappa_c(0.9), Err(Error::BetaBelowOne(_))));
    }

    #[test]
    fn beta_of_constant_is_one() {
        let g = TorusGrid::new(16, c(0.0, 1.0), 1.0).unwrap();
        let f = TorusField::from_fn(g, 0, |s, _| c(0.0, 2.0 * PI * s).exp());
        assert!((beta_constant(&f) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn poisson_inverts_laplacian() {
        let p = Poisson::new(16);
        let rhs: Vec<f64> = (0..256).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
        let mean = rhs.iter().sum::<f64>() / 256.0;
        let x = p.solve(&rhs, 1);
        let g = TorusGrid::new(16, c(0.0, 1.0), 1.0).unwrap();
        let calc = Calculus::new(g).unwrap();
        let lx = calc.div(&calc.grad(&x));
        for (a, b) in lx.iter().zip(&rhs) {
            assert!((a - (b - mean)).abs() < 1e-10);
        }
    }

    #[test]
    fn oblique_lattice_rejected() {
        let g = TorusGrid::new(16, c(0.2, 1.0), 1.0).unwrap();
        let psi = TorusField::zeros(g, 2);
        assert!(matches!(assemble_residual(&psi, &LinkField::zeros(&g), 1.0, 2), Err(Error::UnsupportedLattice(_))));
    }

    #[test]
    fn normal_state_residual_vanishes() {
        let g = TorusGrid::new(16, c(0.0, 1.0), 1.0).unwrap();
        let res = assemble_residual(&TorusField::zeros(g, 2), &LinkField::zeros(&g), 1.0, 2).unwrap();
        assert_eq!(res.psi_norm, 0.0);
        assert_eq!(res.a_norm, 0.0);
        assert!(matches!(
            assemble_residual(&TorusField::zeros(g, 1), &LinkField::zeros(&g), 1.0, 2),
            Err(Error::FluxSectorMismatch { expected: 2 })
        ));
    }

    #[test]
    fn pure_gauge_field_projects_to_zero() {
        let g = TorusGrid::new(16, c(0.0, 1.0), 1.0).unwrap();
        let calc = Calculus::new(g).unwrap();
        let chi: Vec<f64> = (0..256).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = to_links(&calc.grad(&chi));
        let res = assemble_residual(&TorusField::zeros(g, 2), &a, 1.0, 2).unwrap();
        assert!(res.a_norm < 1e-12);
    }

    #[test]
    fn residual_is_gauge_invariant() {
        let g = TorusGrid::new(16, c(0.0, 1.0), 1.0).unwrap();
        let calc = Calculus::new(g).unwrap();
        let psi = crate::spectral::weitzenbock::smooth_random_section(g, 2, 3);
        let a0: Vec<[f64; 2]> = (0..256).map(|i| [0.01 * (i as f64).cos(), 0.02 * (i as f64 * 0.3).sin()]).collect();
        let r0 = assemble_residual(&psi, &to_links(&a0), 1.3, 2).unwrap();
        let chi: Vec<f64> = (0..256).map(|i| (i as f64 * 1.7).sin() * 3.0).collect();
        let dchi = calc.grad(&chi);
        let a1: Vec<[f64; 2]> = a0.iter().zip(&dchi).map(|(x, y)| [x[0] + y[0], x[1] + y[1]]).collect();
        let psi1 = TorusField { data: psi.data.iter().zip(&chi).map(|(z, x)| z * c(0.0, *x).exp()).collect(), ..psi.clone() };
        let r1 = assemble_residual(&psi1, &to_links(&a1), 1.3, 2).unwrap();
        assert!((r0.psi_norm - r1.psi_norm).abs() < 1e-8 * r0.psi_norm);
        assert!((r0.a_norm - r1.a_norm).abs() < 1e-8 * r0.a_norm.max(1e-12));
    }

    #[test]
    fn null_space_structure() {
        let ns = ns();
        assert_eq!(ns.omega_dim, 2);
        assert!(ns.harmonic_defect < 1e-8);
        assert!(ns.beta >= 1.0);
        assert!((ns.lambda0 - 4.0 * PI).abs() / (4.0 * PI) < 1e-2);
        // next sector level near 3b
        assert!((ns.mode_values[0] / ns.lambda0 - 3.0).abs() < 3e-2);
    }

    #[test]
    fn at_bifurcation_point_is_trivial() {
        let ns = ns();
        let kappa = ns.lambda0.sqrt();
        let bp = lyapunov_schmidt_solve(ns, kappa, 1.0, &SolveOptions::default()).unwrap();
        assert!(bp.trivial && bp.amplitude == 0.0);
    }

    #[test]
    fn supercritical_branch_and_wrong_side() {
        let ns = ns();
        let kc = kappa_c(ns.beta).unwrap();
        let r = 1.0;
        let kappa = ((ns.lambda0 + 1e-2) / r).sqrt();
        assert!(kappa > kc);
        let bp = lyapunov_schmidt_solve(ns, kappa, r, &SolveOptions::default()).unwrap();
        assert!(!bp.trivial && bp.amplitude > 0.0);
        assert!(bp.residual < 1e-6, "{bp:?}");
        let kappa_bad = ((ns.lambda0 - 1e-2) / r).sqrt();
        assert!(matches!(lyapunov_schmidt_solve(ns, kappa_bad, r, &SolveOptions::default()), Err(Error::NoBifurcation { .. })));
    }

    #[test]
    fn beta_converges_with_grid() {
        let fine = null_space(48, c(0.0, 1.0), 2, 1, &EigenOptions::default()).unwrap();
        assert!((fine.beta - ns().beta).abs() < 1e-3, "{} {}", fine.beta, ns().beta);
    }

    #[test]
    fn restarts_agree() {
        let ns = ns();
        let kappa = (ns.lambda0 + 1e-2).sqrt();
        let amps: Vec<f64> = [None, Some(1), Some(7)]
            .into_iter()
            .map(|seed| {
                let opts = SolveOptions { restart_seed: seed, ..Default::default() };
                lyapunov_schmidt_solve(ns, kappa, 1.0, &opts).unwrap().amplitude
            })
            .collect();
        assert!(amps.iter().all(|a| (a - amps[0]).abs() < 1e-8), "{amps:?}");
    }

    #[test]
    fn pitchfork_scaling() {
        let ns = ns();
        let amp = |mu: f64| lyapunov_schmidt_solve(ns, (ns.lambda0 + mu).sqrt(), 1.0, &SolveOptions::default()).unwrap().amplitude;
        let slope = (amp(1e-2).powi(2) / amp(1e-3).powi(2)).log10();
        assert!((slope - 1.0).abs() < 0.1, "{slope}");
    }

    #[test]
    fn type_one_branch_is_subcritical() {
        let ns = ns();
        let kappa = 0.3;
        assert!(kappa < kappa_c(ns.beta).unwrap());
        let r_of = |d: f64| ((ns.lambda0 + d) / (kappa * kappa)).sqrt();
        let bp = lyapunov_schmidt_solve(ns, kappa, r_of(-1e-2), &SolveOptions::default()).unwrap();
        assert!(bp.detuning < 0.0 && bp.sign_condition && bp.residual < 1e-6);
        assert!(matches!(lyapunov_schmidt_solve(ns, kappa, r_of(1e-2), &SolveOptions::default()), Err(Error::NoBifurcation { .. })));
    }

    #[test]
    fn scan_is_ordered_and_classified() {
        let ns = ns();
        let kappa = 2.0;
        let r0 = ns.lambda0.sqrt() / kappa;
        let rows = scan(ns, kappa, r0 * 0.999, r0 * 1.001, 3, &SolveOptions::default()).unwrap();
        assert_eq!(rows[0].status, "no_bifurcation");
        assert_eq!(rows[2].status, "branch");
        assert!(rows.windows(2).all(|w| w[0].r < w[1].r));
    }
}
