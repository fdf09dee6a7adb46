//! Rank-2 Fuchsian systems `dY/dz = (Σ A_k/(z−z_k) + t(z))·Y`, integrated
//! along polylines. This module knows nothing about theta functions and is
//! used as the independent oracle for [`crate::rh`].
//!
//! Paths are composed left to right, so with `Y0 = I` the monodromy of a
//! concatenation `γ₁γ₂` is `M₂·M₁`.

use crate::linalg::{self, c};
use crate::ode::{Dopri5, Stats};
use crate::{quadrature, Complex64, Error, Mat2, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Scalar term added to the coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Twist {
    #[default]
    None,
    /// `z̄ / (1 + |z|²)`
    FubiniStudy,
}

impl Twist {
    pub fn eval(self, z: Complex64) -> Complex64 {
        match self {
            Twist::None => c(0.0, 0.0),
            Twist::FubiniStudy => z.conj() / (1.0 + z.norm_sqr()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuchsianSystem {
    pub poles: Vec<Complex64>,
    pub residues: Vec<Mat2>,
    #[serde(default)]
    pub twist: Twist,
}

impl FuchsianSystem {
    pub fn new(poles: Vec<Complex64>, residues: Vec<Mat2>) -> Result<Self> {
        if poles.len() != residues.len() {
            return Err(Error::InvalidArgument("one residue matrix per pole".into()));
        }
        Ok(Self { poles, residues, twist: Twist::None })
    }

    pub fn with_twist(mut self, twist: Twist) -> Self {
        self.twist = twist;
        self
    }

    pub fn coefficient(&self, z: Complex64) -> Mat2 {
        let mut a = Mat2::identity() * self.twist.eval(z);
        for (p, r) in self.poles.iter().zip(&self.residues) {
            a += r / (z - p);
        }
        a
    }

    /// Residue at `∞`, `−Σ A_k` (the `t` term is ignored).
    pub fn residue_at_infinity(&self) -> Mat2 {
        -self.residues.iter().fold(Mat2::zeros(), |s, r| s + r)
    }

    /// Eigenvalue pairs of the residues, followed by the pair at `∞`.
    pub fn exponents(&self) -> Vec<(Complex64, Complex64)> {
        let mut v: Vec<_> = self.residues.iter().map(linalg::eigenvalues).collect();
        v.push(linalg::eigenvalues(&self.residue_at_infinity()));
        v
    }

    /// Smallest distance between two poles.
    pub fn min_pole_distance(&self) -> f64 {
        let mut d = f64::MAX;
        for i in 0..self.poles.len() {
            for j in 0..i {
                d = d.min((self.poles[i] - self.poles[j]).norm());
            }
        }
        d
    }

    /// `0.1 ×` the smallest pole separation.
    pub fn default_guard(&self) -> f64 {
        0.1 * self.min_pole_distance()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationPath {
    pub vertices: Vec<Complex64>,
    pub guard_radius: f64,
}

impl ContinuationPath {
    pub fn new(vertices: Vec<Complex64>, guard_radius: f64) -> Self {
        Self { vertices, guard_radius }
    }

    /// Checks that every segment keeps `guard_radius` from every pole.
    pub fn validate(&self, poles: &[Complex64]) -> Result<()> {
        if self.vertices.len() < 2 {
            return Err(Error::InvalidArgument("path needs at least two vertices".into()));
        }
        for w in self.vertices.windows(2) {
            for &p in poles {
                let d = crate::elliptic::dist_segment(p, w[0], w[1]);
                if d < self.guard_radius {
                    return Err(Error::PathThroughSingularity { point: p, distance: d });
                }
            }
        }
        Ok(())
    }

    pub fn start(&self) -> Complex64 {
        self.vertices[0]
    }

    pub fn end(&self) -> Complex64 {
        *self.vertices.last().expect("validated path")
    }

    /// Path followed by `other` (which must start where this one ends).
    pub fn then(&self, other: &ContinuationPath) -> ContinuationPath {
        let mut v = self.vertices.clone();
        v.extend_from_slice(&other.vertices[1..]);
        ContinuationPath::new(v, self.guard_radius.min(other.guard_radius))
    }

    pub fn reversed(&self) -> ContinuationPath {
        let mut v = self.vertices.clone();
        v.reverse();
        ContinuationPath::new(v, self.guard_radius)
    }
}

/// Result of one integration.
#[derive(Debug, Clone, Copy)]
pub struct Integration {
    pub y: Mat2,
    /// `|det Y(end) − det Y0·exp∫tr| / |det Y0·exp∫tr|`
    pub wronskian_defect: f64,
    pub stats: Stats,
}

fn pack(y: &Mat2, l: Complex64) -> [Complex64; 5] {
    [y[(0, 0)], y[(0, 1)], y[(1, 0)], y[(1, 1)], l]
}

fn unpack(s: &[Complex64; 5]) -> (Mat2, Complex64) {
    (Mat2::new(s[0], s[1], s[2], s[3]), s[4])
}

/// Integrates along `path` from `y0`, with local error per step `≤ tol`.
pub fn integrate(sys: &FuchsianSystem, path: &ContinuationPath, y0: Mat2, tol: f64) -> Result<Mat2> {
    Ok(integrate_with_report(sys, path, y0, tol)?.y)
}

pub fn integrate_with_report(
    sys: &FuchsianSystem,
    path: &ContinuationPath,
    y0: Mat2,
    tol: f64,
) -> Result<Integration> {
    path.validate(&sys.poles)?;
    let solver = Dopri5::new(tol);
    let mut state = pack(&y0, c(0.0, 0.0));
    let mut stats = Stats::default();
    for w in path.vertices.windows(2) {
        let (a, b) = (w[0], w[1]);
        let d = b - a;
        let (s, st) = solver.solve(
            |t, st: &[Complex64; 5]| {
                let z = a + d * t;
                let (y, _) = unpack(st);
                let m = sys.coefficient(z) * d;
                Ok(pack(&(m * y), linalg::trace(&m)))
            },
            0.0,
            1.0,
            state,
            |t| a + d * t,
        )?;
        state = s;
        stats.accepted += st.accepted;
        stats.rejected += st.rejected;
    }
    let (y, l) = unpack(&state);
    let expect = linalg::det(&y0) * l.exp();
    let wronskian_defect = (linalg::det(&y) - expect).norm() / expect.norm().max(1e-300);
    Ok(Integration { y, wronskian_defect, stats })
}

/// Polygonal circle of `n` vertices around `center`, starting and ending at
/// `center + r·dir`; counter-clockwise when `ccw`.
pub fn circle(center: Complex64, r: f64, dir: Complex64, n: usize, ccw: bool) -> Vec<Complex64> {
    let s = if ccw { 1.0 } else { -1.0 };
    (0..=n)
        .map(|k| center + dir * r * c(0.0, s * 2.0 * PI * k as f64 / n as f64).exp())
        .collect()
}

/// Loop based at `base`: straight tail to a circle of radius `r` around
/// `center`, one turn, straight back.
pub fn lasso(base: Complex64, center: Complex64, r: f64, n: usize, ccw: bool, guard: f64) -> ContinuationPath {
    let dir = (base - center) / (base - center).norm();
    let mut v = vec![base];
    v.extend(circle(center, r, dir, n, ccw));
    v.push(base);
    ContinuationPath::new(v, guard)
}

/// Standard generators: ccw lassos around each finite pole (radius
/// `3·guard`) and a large clockwise circle around all of them, which
/// encircles `∞` positively.
pub fn standard_loops(sys: &FuchsianSystem, base: Complex64, n: usize) -> Result<Vec<ContinuationPath>> {
    let g = sys.default_guard();
    let mut loops = Vec::new();
    for &p in &sys.poles {
        let l = lasso(base, p, 3.0 * g, n, true, g);
        l.validate(&sys.poles)?;
        loops.push(l);
    }
    let m = sys.poles.iter().sum::<Complex64>() / sys.poles.len() as f64;
    let reach = sys.poles.iter().chain(std::iter::once(&base)).map(|p| (p - m).norm()).fold(0.0, f64::max);
    let r = 2.0 * reach + 1.0;
    // leave the base radially outward, go once around clockwise, come back
    let dir = if (base - m).norm() > 0.0 { (base - m) / (base - m).norm() } else { c(1.0, 0.0) };
    let mut v = vec![base];
    v.extend(circle(m, r, dir, 4 * n, false));
    v.push(base);
    let l = ContinuationPath::new(v, g);
    l.validate(&sys.poles)?;
    loops.push(l);
    Ok(loops)
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationDiagnostics {
    /// `min ‖ρ_{σ1}ρ_{σ2}ρ_{σ3}ρ_4 ∓ I‖` over the two product orders and both signs.
    pub product_defect: f64,
    /// `+1` when the product is `I`, `−1` when it is `−I`.
    pub product_sign: i8,
    /// Order in which the generators were multiplied (indices into `rho`).
    pub product_order: [usize; 4],
    /// `‖ρ_i² + I‖`.
    pub square_defects: [f64; 4],
    /// `|det ρ_i − 1|`.
    pub det_defects: [f64; 4],
    /// Largest `‖[W, W']‖` over the even words `ρ_iρ_j`.
    pub even_commutator_defect: f64,
    /// `‖ρ_4 − (ρ_{σ1}ρ_{σ2}ρ_{σ3})^{-1}‖` (derived vs measured, up to the sign).
    pub rho4_consistency: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonodromyRep {
    pub rho: [Mat2; 4],
    pub basepoint: Complex64,
    /// `ρ_4` derived from the other three and the relation.
    pub rho4_derived: Mat2,
    pub diagnostics: RelationDiagnostics,
}

/// Monodromy of the four loops; `Y0 = I` at the basepoint.
pub fn monodromy_generators(
    sys: &FuchsianSystem,
    basepoint: Complex64,
    loops: &[ContinuationPath],
    tol: f64,
) -> Result<MonodromyRep> {
    if loops.len() != 4 {
        return Err(Error::InvalidArgument("exactly four loops expected".into()));
    }
    let mut rho = [Mat2::identity(); 4];
    for (k, l) in loops.iter().enumerate() {
        if (l.start() - basepoint).norm() > 1e-12 || (l.end() - basepoint).norm() > 1e-12 {
            return Err(Error::InvalidArgument(format!("loop {k} is not based at the basepoint")));
        }
        rho[k] = integrate(sys, l, Mat2::identity(), tol)?;
    }
    Ok(rep_from_matrices(rho, basepoint, loops))
}

/// Builds the relation diagnostics for given generator matrices; loops fix
/// the tail order (pass an empty slice for the identity order).
pub fn rep_from_matrices(rho: [Mat2; 4], basepoint: Complex64, loops: &[ContinuationPath]) -> MonodromyRep {
    // order of the finite loops by the angle of their first tail
    let mut order = [0usize, 1, 2];
    if loops.len() == 4 {
        let ang = |k: usize| {
            let v = loops[k].vertices[1] - basepoint;
            v.arg()
        };
        order.sort_by(|&a, &b| ang(a).total_cmp(&ang(b)));
    }
    let id = Mat2::identity();
    let prod3 = |o: &[usize]| rho[o[0]] * rho[o[1]] * rho[o[2]];
    let rev = [order[2], order[1], order[0]];
    let mut best = (f64::MAX, 1i8, [0usize; 4], Mat2::identity());
    for o in [order, rev] {
        let p3 = prod3(&o);
        for (s, sign) in [(1.0, 1i8), (-1.0, -1i8)] {
            for p in [p3 * rho[3], rho[3] * p3] {
                let d = linalg::norm(&(p - id * c(s, 0.0)));
                if d < best.0 {
                    best = (d, sign, [o[0], o[1], o[2], 3], p3);
                }
            }
        }
    }
    let p3inv = linalg::inverse(&best.3, 1e-300).unwrap_or(Mat2::zeros());
    let rho4_derived = p3inv * c(f64::from(best.1), 0.0);
    let square_defects = rho.map(|r| linalg::norm(&(r * r + id)));
    let det_defects = rho.map(|r| (linalg::det(&r) - 1.0).norm());
    let words = [rho[0] * rho[1], rho[1] * rho[2], rho[0] * rho[2], rho[0] * rho[3]];
    let mut comm: f64 = 0.0;
    for i in 0..words.len() {
        for j in 0..i {
            comm = comm.max(linalg::norm(&(words[i] * words[j] - words[j] * words[i])));
        }
    }
    let diagnostics = RelationDiagnostics {
        product_defect: best.0,
        product_sign: best.1,
        product_order: best.2,
        square_defects,
        det_defects,
        even_commutator_defect: comm,
        rho4_consistency: linalg::norm(&(rho[3] - rho4_derived)),
    };
    MonodromyRep { rho, basepoint, rho4_derived, diagnostics }
}

/// Source of a fundamental matrix and its `z`-derivative.
pub trait SolutionSampler {
    fn sample(&self, z: Complex64) -> Result<(Mat2, Mat2)>;
}

impl<F> SolutionSampler for F
where
    F: Fn(Complex64) -> Result<(Mat2, Mat2)>,
{
    fn sample(&self, z: Complex64) -> Result<(Mat2, Mat2)> {
        self(z)
    }
}

/// `(1/2πi)∮ Y'Y⁻¹ dz` over the circle `|z − pole| = radius` with `n` nodes.
pub fn residues_from_solution<S: SolutionSampler + ?Sized>(
    sampler: &S,
    pole: Complex64,
    radius: f64,
    n: usize,
) -> Result<Mat2> {
    let mut sum = Mat2::zeros();
    let h = 2.0 * PI / n as f64;
    for j in 0..n {
        let e = c(0.0, h * j as f64).exp();
        let z = pole + radius * e;
        let (y, yp) = sampler.sample(z)?;
        let yi = linalg::inverse(&y, 1e-12).ok_or(Error::SingularSolutionMatrix(z))?;
        sum += yp * yi * (c(0.0, 1.0) * radius * e);
    }
    Ok(sum * c(h, 0.0) / c(0.0, 2.0 * PI))
}

/// Scalar residue `(1/2πi)∮ f'/f dz` of a sampled scalar function, by
/// adaptive quadrature (used for log-derivative winding numbers).
pub fn scalar_residue<F>(f: F, pole: Complex64, radius: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<(Complex64, Complex64)>,
{
    let v = quadrature::integrate(
        |t| {
            let e = c(0.0, t).exp();
            let (g, gp) = f(pole + radius * e)?;
            Ok(gp / g * c(0.0, 1.0) * radius * e)
        },
        0.0,
        2.0 * PI,
        1e-12,
    )?;
    Ok(v / c(0.0, 2.0 * PI))
}

#[derive(Debug, Clone, Serialize)]
pub enum NonparabolicDiagnostic {
    /// Even words diagonalise simultaneously; generators are antidiagonal there.
    Nonparabolic {
        conjugator: Mat2,
        /// largest off-diagonal entry of `P⁻¹WP` over the even words
        diagonal_defect: f64,
        /// largest diagonal entry of `P⁻¹ρ_iP`
        antidiagonal_defect: f64,
        /// largest `|m₀₁·m₁₀ + 1|`, i.e. distance from the form `[[0,a],[−a⁻¹,0]]`
        form_defect: f64,
    },
    /// Some even word has a repeated eigenvalue but is not `±I`.
    Parabolic { word_trace: Complex64 },
    /// Every even word is `±I`.
    Degenerate,
}

impl NonparabolicDiagnostic {
    pub fn is_nonparabolic(&self) -> bool {
        matches!(self, Self::Nonparabolic { .. })
    }
}

/// Conjugates the even-word images to diagonal form and measures how far
/// the generators are from the antidiagonal form.
pub fn check_nonparabolic_form(rep: &MonodromyRep) -> NonparabolicDiagnostic {
    let r = &rep.rho;
    let id = Mat2::identity();
    let words = [r[0] * r[1], r[1] * r[2], r[0] * r[2]];
    let dist_pm = |w: &Mat2| linalg::norm(&(w - id)).min(linalg::norm(&(w + id)));
    let (wi, far) = words
        .iter()
        .enumerate()
        .map(|(i, w)| (i, dist_pm(w)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("three words");
    if far < 1e-6 {
        return NonparabolicDiagnostic::Degenerate;
    }
    let w = words[wi];
    let Some((p, _, _)) = linalg::eigenvectors(&w, 1e-6) else {
        return NonparabolicDiagnostic::Parabolic { word_trace: linalg::trace(&w) };
    };
    let Some(pi) = linalg::inverse(&p, 1e-12) else {
        return NonparabolicDiagnostic::Parabolic { word_trace: linalg::trace(&w) };
    };
    let mut diagonal_defect: f64 = 0.0;
    for w in &words {
        let d = pi * w * p;
        diagonal_defect = diagonal_defect.max(d[(0, 1)].norm()).max(d[(1, 0)].norm());
    }
    let mut antidiagonal_defect: f64 = 0.0;
    let mut form_defect: f64 = 0.0;
    for g in r {
        let d = pi * g * p;
        antidiagonal_defect = antidiagonal_defect.max(d[(0, 0)].norm()).max(d[(1, 1)].norm());
        form_defect = form_defect.max((d[(0, 1)] * d[(1, 0)] + 1.0).norm());
    }
    NonparabolicDiagnostic::Nonparabolic { conjugator: p, diagonal_defect, antidiagonal_defect, form_defect }
}
