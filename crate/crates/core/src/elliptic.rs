//! The elliptic double cover `C : y² = (z−z1)(z−z2)(z−z3)` of the sphere,
//! branched over `z1, z2, z3, ∞`.
//!
//! Square and fourth roots branch along `ℒ = [z1, z2] ∪ [z3, ∞)`, the second
//! piece being the ray from `z3` pointing away from the midpoint of `z1, z2`.
//! The a-cycle encircles `{z1, z2}` and the b-cycle `{z2, z3}`.
//!
//! With `u` normalised so the lattice is `{1, τ}`, the covering map is
//! `z(u) = 4℘(u)/ω₁² + (z1+z2+z3)/3` and the half periods land on
//!
//! | `u`        | `z`  |
//! |------------|------|
//! | `0`        | `∞`  |
//! | `1/2`      | `z3` |
//! | `τ/2`      | `z1` |
//! | `(1+τ)/2`  | `z2` |

use crate::theta::{self, ThetaCharacteristics};
use crate::{quadrature, Complex64, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const SEED_GRID: usize = 24;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `v^{1/k}` with the branch cut along the ray `v ∈ d·ℝ₊`.
pub fn root_cut(v: Complex64, d: Complex64, k: f64) -> Complex64 {
    (-d).powf(1.0 / k) * (v / (-d)).powf(1.0 / k)
}

/// Distance from `z` to the segment `[a, b]`.
pub fn dist_segment(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let t = ((z - a) * ab.conj()).re / ab.norm_sqr();
    (z - (a + ab * t.clamp(0.0, 1.0))).norm()
}

/// Distance from `z` to the ray `{a + t·d : t ≥ 0}` with `|d| = 1`.
pub fn dist_ray(z: Complex64, a: Complex64, d: Complex64) -> f64 {
    let t = ((z - a) * d.conj()).re.max(0.0);
    (z - (a + d * t)).norm()
}

/// Chordal distance on the Riemann sphere.
pub fn chordal(a: Complex64, b: Complex64) -> f64 {
    if !a.is_finite() || !b.is_finite() {
        let f = if a.is_finite() { a } else { b };
        if !f.is_finite() {
            return 0.0;
        }
        return 1.0 / (1.0 + f.norm_sqr()).sqrt();
    }
    (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt()
}

/// Finite branch points; the fourth is `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoints {
    pub z1: Complex64,
    pub z2: Complex64,
    pub z3: Complex64,
}

impl BranchPoints {
    pub fn new(z1: Complex64, z2: Complex64, z3: Complex64) -> Result<Self> {
        let bp = Self { z1, z2, z3 };
        bp.validate()?;
        Ok(bp)
    }

    /// `{−1, 0, 1}`, whose lattice is square.
    pub fn lemniscatic() -> Self {
        Self { z1: c(-1.0, 0.0), z2: c(0.0, 0.0), z3: c(1.0, 0.0) }
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.as_array();
        if a.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidBranchPoints("branch points must be finite".into()));
        }
        let s = self.min_separation();
        let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if s <= 1e-10 * scale {
            return Err(Error::InvalidBranchPoints(format!("branch points not distinct (separation {s:e})")));
        }
        // the ray must point away from the first cut
        let m = 0.5 * (self.z1 + self.z2);
        if (self.z3 - m).norm() == 0.0 {
            return Err(Error::InvalidBranchPoints("z3 coincides with the midpoint of z1, z2".into()));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [Complex64; 3] {
        [self.z1, self.z2, self.z3]
    }

    pub fn min_separation(&self) -> f64 {
        let a = self.as_array();
        (a[0] - a[1]).norm().min((a[1] - a[2]).norm()).min((a[0] - a[2]).norm())
    }

    /// Unit direction of the cut `[z3, ∞)`.
    pub fn ray_direction(&self) -> Complex64 {
        let v = self.z3 - 0.5 * (self.z1 + self.z2);
        v / v.norm()
    }

    /// Distance to the cut set `ℒ`.
    pub fn dist_to_cut(&self, z: Complex64) -> f64 {
        dist_segment(z, self.z1, self.z2).min(dist_ray(z, self.z3, self.ray_direction()))
    }

    /// `(z−z1)(z−z2)(z−z3)`.
    pub fn cubic(&self, z: Complex64) -> Complex64 {
        (z - self.z1) * (z - self.z2) * (z - self.z3)
    }

    /// A generic point off `ℒ`, used as the default basepoint `z0`.
    pub fn default_basepoint(&self) -> Complex64 {
        let a = self.as_array();
        let m = (a[0] + a[1] + a[2]) / 3.0;
        let s = a.iter().map(|z| (z - m).norm()).fold(0.0, f64::max);
        let sep = self.min_separation();
        let mut best = m + s * c(0.3, 0.7);
        let mut score = f64::NEG_INFINITY;
        for k in 0..16 {
            let cand = m + s * (0.5 + 0.05 * k as f64) * (I * (1.17 + 0.39 * k as f64)).exp();
            let d = self.dist_to_cut(cand).min(a.iter().map(|z| (cand - z).norm()).fold(f64::MAX, f64::min));
            if d > 0.25 * sep {
                return cand;
            }
            if d > score {
                score = d;
                best = cand;
            }
        }
        best
    }
}

/// Sheet label: sheet 1 carries `y1`, sheet 2 carries `−y1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sheet {
    One,
    Two,
}

impl Sheet {
    pub fn sign(self) -> f64 {
        match self {
            Sheet::One => 1.0,
            Sheet::Two => -1.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Sheet::One => Sheet::Two,
            Sheet::Two => Sheet::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Sheet::One => 0,
            Sheet::Two => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub z: Complex64,
    pub sheet: Sheet,
}

impl CurvePoint {
    pub fn new(z: Complex64, sheet: Sheet) -> Self {
        Self { z, sheet }
    }

    /// Image under the involution `ι : y ↦ −y`.
    pub fn involution(self) -> Self {
        Self { z: self.z, sheet: self.sheet.other() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodLattice {
    pub omega1: Complex64,
    pub omega2: Complex64,
    pub tau: Complex64,
}

impl PeriodLattice {
    /// Real coordinates `(a, b)` of `u = a + bτ`.
    pub fn coords(&self, u: Complex64) -> (f64, f64) {
        theta::lattice_coords(u, self.tau)
    }

    /// Representative of `u` in the cell `[0,1) + [0,1)τ`.
    pub fn reduce(&self, u: Complex64) -> Complex64 {
        theta::reduce_to_cell(u, self.tau)
    }

    /// Nearest lattice vector `m + nτ`.
    pub fn nearest(&self, u: Complex64) -> (i64, i64) {
        let (a, b) = self.coords(u);
        let (mut bm, mut bn, mut bd) = (0, 0, f64::MAX);
        for dn in -1..=1 {
            for dm in -1..=1 {
                let n = b.round() as i64 + dn;
                let m = (a.round() as i64) + dm;
                let d = (u - m as f64 - n as f64 * self.tau).norm();
                if d < bd {
                    (bm, bn, bd) = (m, n, d);
                }
            }
        }
        (bm, bn)
    }

    /// Distance from `u` to the lattice `{1, τ}`.
    pub fn defect(&self, u: Complex64) -> f64 {
        let (m, n) = self.nearest(u);
        (u - m as f64 - n as f64 * self.tau).norm()
    }

    /// Distance from `u` to the half-lattice `½{1, τ}`.
    pub fn half_defect(&self, u: Complex64) -> f64 {
        let h = PeriodLattice { omega1: self.omega1, omega2: self.omega2, tau: self.tau };
        let (m, n) = h.nearest(2.0 * u);
        (u - 0.5 * (m as f64 + n as f64 * self.tau)).norm()
    }

    /// Area of the normalised cell `{1, τ}`.
    pub fn normalized_area(&self) -> f64 {
        (self.omega1.conj() * self.omega2).im.abs() / self.omega1.norm_sqr()
    }
}

/// Scale data for the flat metric `h_r = r·|du|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricScale {
    pub r: f64,
    pub area_c: f64,
    pub area_sigma: f64,
}

impl MetricScale {
    pub fn new(lat: &PeriodLattice, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("metric scale r must be positive, got {r}")));
        }
        let area_c = r * lat.normalized_area();
        Ok(Self { r, area_c, area_sigma: area_c / 2.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormType {
    Du,
    Dubar,
}

/// Unit factor of the Hodge star on `du`, `dū` for the flat metric.
pub fn hodge_star(form: FormType) -> Complex64 {
    match form {
        FormType::Du => -I,
        FormType::Dubar => I,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cycle {
    A,
    B,
}

/// Period of `dz/y` over an elliptical contour with foci `a, b`.
///
/// `eta_frac ∈ (0, 1)` selects the ellipse `z = m + c·cos(t + iη)` with
/// `η = eta_frac·η_o`, where `η_o` is the ellipse through the third point `o`.
/// Returns the integral and one sample `(z, y)` of the branch used.
fn ellipse_period(
    a: Complex64,
    b: Complex64,
    o: Complex64,
    eta_frac: f64,
    tol: f64,
) -> Result<(Complex64, Complex64, Complex64)> {
    let m = 0.5 * (a + b);
    let cc = 0.5 * (b - a);
    let eta_o = ((o - m) / cc).acos().im.abs();
    let eta = eta_frac * eta_o;
    let d = (o - m) / (o - m).norm();
    let y_at = |t: f64| {
        let w = c(t, eta);
        let z = m + cc * w.cos();
        (z, I * cc * w.sin() * root_cut(z - o, d, 2.0))
    };
    let val = quadrature::integrate(
        |t| {
            let w = c(t, eta);
            let (_, y) = y_at(t);
            Ok(-cc * w.sin() / y)
        },
        0.0,
        2.0 * PI,
        tol,
    )?;
    let (zs, ys) = y_at(0.3);
    Ok((val, zs, ys))
}

/// Periods of `φ = dz/y`, with `Im τ > 0` enforced by negating `ω₂`.
pub fn compute_periods(bp: &BranchPoints, quad_tol: f64) -> Result<PeriodLattice> {
    EllipticCurve::new(*bp, None, quad_tol).map(|c| c.lat)
}

/// Curve data with a fixed basepoint `z0` and the branch `y1` of `y`.
#[derive(Debug, Clone)]
pub struct EllipticCurve {
    pub bp: BranchPoints,
    pub z0: Complex64,
    pub lat: PeriodLattice,
    /// Paths must keep this distance from the branch points.
    pub guard: f64,
    y0: Complex64,
    gamma_norm: Complex64,
    wp_shift: Complex64,
    seeds: Vec<(Complex64, Complex64)>,
    quad_tol: f64,
}

impl EllipticCurve {
    /// Builds the curve; `z0 = None` picks [`BranchPoints::default_basepoint`].
    pub fn new(bp: BranchPoints, z0: Option<Complex64>, quad_tol: f64) -> Result<Self> {
        bp.validate()?;
        if !(quad_tol > 0.0) {
            return Err(Error::InvalidArgument("quad_tol must be positive".into()));
        }
        let z0 = z0.unwrap_or_else(|| bp.default_basepoint());
        let sep = bp.min_separation();
        if bp.dist_to_cut(z0) < 1e-3 * sep {
            return Err(Error::OnCut(z0));
        }
        let y0 = bp.cubic(z0).sqrt();
        let mut curve = Self {
            bp,
            z0,
            lat: PeriodLattice { omega1: c(1.0, 0.0), omega2: I, tau: I },
            guard: 1e-3 * sep,
            y0,
            gamma_norm: c(1.0, 0.0),
            wp_shift: c(0.0, 0.0),
            seeds: Vec::new(),
            quad_tol,
        };
        curve.gamma_norm = 1.0 / curve.gamma_raw(z0);

        let (w1, zs, ys) = ellipse_period(bp.z1, bp.z2, bp.z3, 0.5, quad_tol)?;
        let y1s = curve.y1(zs);
        let w1 = if (ys - y1s).norm() < (ys + y1s).norm() { w1 } else { -w1 };
        let (mut w2, _, _) = ellipse_period(bp.z2, bp.z3, bp.z1, 0.5, quad_tol)?;
        let mut tau = w2 / w1;
        if tau.im.abs() < 1e-12 {
            return Err(Error::DegenerateLattice(tau.im));
        }
        if tau.im < 0.0 {
            w2 = -w2;
            tau = -tau;
        }
        curve.lat = PeriodLattice { omega1: w1, omega2: w2, tau };

        let d = theta::theta_derivs::<4>(c(0.0, 0.0), tau, ThetaCharacteristics::ODD, theta::DEFAULT_TOL)?;
        curve.wp_shift = d[3] / (3.0 * d[1]);

        let g = SEED_GRID as f64;
        for i in 0..SEED_GRID {
            for j in 0..SEED_GRID {
                let u = (i as f64 + 0.5) / g + (j as f64 + 0.5) / g * tau;
                let (z, _) = curve.covering_map_with_derivative(u)?;
                curve.seeds.push((u, z));
            }
        }
        Ok(curve)
    }

    pub fn lemniscatic() -> Result<Self> {
        Self::new(BranchPoints::lemniscatic(), None, 1e-13)
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    /// Period over a deformed representative of a cycle (`eta_frac ∈ (0,1)`),
    /// with the same orientation conventions as [`Self::lat`].
    pub fn cycle_period(&self, cycle: Cycle, eta_frac: f64) -> Result<Complex64> {
        let bp = &self.bp;
        match cycle {
            Cycle::A => {
                let (w, zs, ys) = ellipse_period(bp.z1, bp.z2, bp.z3, eta_frac, self.quad_tol)?;
                let y1s = self.y1(zs);
                Ok(if (ys - y1s).norm() < (ys + y1s).norm() { w } else { -w })
            }
            Cycle::B => {
                let (w, _, _) = ellipse_period(bp.z2, bp.z3, bp.z1, eta_frac, self.quad_tol)?;
                // same orientation as the stored ω₂
                let w0 = ellipse_period(bp.z2, bp.z3, bp.z1, 0.5, self.quad_tol)?.0;
                Ok(if (w0 - self.lat.omega2).norm() < (w0 + self.lat.omega2).norm() { w } else { -w })
            }
        }
    }

    fn gamma_raw(&self, z: Complex64) -> Complex64 {
        let w = (z - self.bp.z1) / (z - self.bp.z2);
        w.powf(0.25) * ((z - self.bp.z3) / (-self.bp.ray_direction())).powf(0.25)
    }

    /// Fourth root `γ` of `(z−z1)(z−z3)(z0−z2) / ((z0−z1)(z0−z3)(z−z2))`,
    /// analytic off `ℒ` with `γ(z0) = 1`.
    pub fn gamma(&self, z: Complex64) -> Complex64 {
        self.gamma_raw(z) * self.gamma_norm
    }

    /// `dγ/dz`.
    pub fn dgamma(&self, z: Complex64) -> Complex64 {
        let b = &self.bp;
        let l = 1.0 / (z - b.z1) - 1.0 / (z - b.z2) + 1.0 / (z - b.z3);
        self.gamma(z) * l / 4.0
    }

    /// Sheet-1 branch of `y`, analytic off `ℒ`, equal to the principal root at `z0`.
    pub fn y1(&self, z: Complex64) -> Complex64 {
        let g = self.gamma(z);
        g * g * self.y0 * (z - self.bp.z2) / (self.z0 - self.bp.z2)
    }

    pub fn y(&self, p: CurvePoint) -> Complex64 {
        self.y1(p.z) * p.sheet.sign()
    }

    /// Weierstrass `℘(u; 1, τ)` and `℘'(u)` from `θ[½,½]`.
    pub fn wp(&self, u: Complex64) -> Result<(Complex64, Complex64)> {
        let t = theta::theta_derivs::<4>(u, self.lat.tau, ThetaCharacteristics::ODD, theta::DEFAULT_TOL)?;
        let l2 = (t[2] * t[0] - t[1] * t[1]) / (t[0] * t[0]);
        let l3 = (t[3] * t[0] * t[0] - 3.0 * t[2] * t[1] * t[0] + 2.0 * t[1] * t[1] * t[1]) / (t[0] * t[0] * t[0]);
        Ok((-l2 + self.wp_shift, -l3))
    }

    /// `z(u)` and `dz/du`; lattice points map to an infinite value.
    pub fn covering_map_with_derivative(&self, u: Complex64) -> Result<(Complex64, Complex64)> {
        if self.lat.defect(u) < 1e-300 {
            return Ok((c(f64::INFINITY, 0.0), c(f64::INFINITY, 0.0)));
        }
        let (p, dp) = self.wp(u)?;
        let w2 = self.lat.omega1 * self.lat.omega1;
        let s = (self.bp.z1 + self.bp.z2 + self.bp.z3) / 3.0;
        Ok((4.0 * p / w2 + s, 4.0 * dp / w2))
    }

    pub fn covering_map(&self, u: Complex64) -> Result<Complex64> {
        Ok(self.covering_map_with_derivative(u)?.0)
    }

    /// `(u, z)` pairs: the three finite half periods and their images in the
    /// documented order `1/2 → z3, τ/2 → z1, (1+τ)/2 → z2`.
    pub fn half_periods(&self) -> [(Complex64, Complex64); 3] {
        let t = self.lat.tau;
        [(c(0.5, 0.0), self.bp.z3), (0.5 * t, self.bp.z1), (0.5 * (1.0 + t), self.bp.z2)]
    }

    /// Newton solve of `z(u) = z` from `u`.
    fn newton(&self, z: Complex64, mut u: Complex64) -> Result<Complex64> {
        let scale = 1.0 + z.norm();
        for _ in 0..80 {
            let (zz, dz) = self.covering_map_with_derivative(u)?;
            if !zz.is_finite() || !dz.is_finite() || dz.norm() == 0.0 {
                break;
            }
            let step = (zz - z) / dz;
            let step = if step.norm() > 0.25 { step * (0.25 / step.norm()) } else { step };
            u -= step;
            if step.norm() < 1e-15 {
                break;
            }
        }
        let zz = self.covering_map(u)?;
        if (zz - z).norm() <= 1e-10 * scale * scale {
            Ok(u)
        } else {
            Err(Error::NewtonDiverged(format!("Abel inversion at z = {z}: |z(u) − z| = {:e}", (zz - z).norm())))
        }
    }

    /// Canonical Abel coordinate of the sheet-1 point over `z`: the solution
    /// `u` of `z(u) = z` in the fundamental cell with `dz/du = ω₁·y1(z)`.
    /// The sheet-2 point has coordinate `−u`.
    pub fn abel_canonical(&self, z: Complex64) -> Result<Complex64> {
        let mut order: Vec<usize> = (0..self.seeds.len()).collect();
        order.sort_by(|&i, &j| chordal(self.seeds[i].1, z).total_cmp(&chordal(self.seeds[j].1, z)));
        let mut last = None;
        let s = (self.bp.z1 + self.bp.z2 + self.bp.z3) / 3.0;
        let reach = self.bp.as_array().iter().map(|e| (e - s).norm()).fold(0.0, f64::max);
        if (z - s).norm() > 4.0 * reach {
            // near ∞, z ≈ s + 4/(ω₁u)²
            let u = 2.0 / (self.lat.omega1 * (z - s).sqrt());
            match self.newton(z, u) {
                Ok(u) => return self.orient(z, u),
                Err(e) => last = Some(e),
            }
        }
        for &k in order.iter().take(6) {
            match self.newton(z, self.seeds[k].0) {
                Ok(u) => return self.orient(z, u),
                Err(e) => last = Some(e),
            }
        }
        Err(last.expect("seed table non-empty"))
    }

    fn orient(&self, z: Complex64, u: Complex64) -> Result<Complex64> {
        let (_, dz) = self.covering_map_with_derivative(u)?;
        let target = self.lat.omega1 * self.y1(z);
        let u = if (dz - target).norm() > (dz + target).norm() { -u } else { u };
        Ok(self.lat.reduce(u))
    }

    pub fn abel_point(&self, p: CurvePoint) -> Result<Complex64> {
        Ok(self.abel_canonical(p.z)? * p.sheet.sign())
    }

    /// Continues `u` to a nearby `z` by Newton from `u_prev` (no reduction).
    pub fn abel_continue(&self, z: Complex64, u_prev: Complex64) -> Result<Complex64> {
        self.newton(z, u_prev)
    }

    fn check_path_point(&self, z: Complex64) -> Result<()> {
        for e in self.bp.as_array() {
            let d = (z - e).norm();
            if d < self.guard {
                return Err(Error::PathThroughSingularity { point: z, distance: d });
            }
        }
        Ok(())
    }

    fn nearest_branch(&self, z: Complex64) -> (Complex64, f64) {
        self.bp
            .as_array()
            .into_iter()
            .map(|e| (e, (z - e).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("three branch points")
    }

    /// Abel map `∫ φ / ω₁` from `basepoint` along the polyline `path`
    /// (first vertex `basepoint.z`, last vertex `p.z`), with `y` continued
    /// along the path. Interior points must stay `guard` away from branch
    /// points; the endpoint may be a branch point. Fails if the continued
    /// branch ends on the other sheet from `p`.
    pub fn abel_map(&self, p: CurvePoint, basepoint: CurvePoint, path: &[Complex64]) -> Result<Complex64> {
        let (val, end_y) = self.abel_along(basepoint, path)?;
        let last = *path.last().unwrap_or(&basepoint.z);
        if (last - p.z).norm() > 1e-12 * (1.0 + p.z.norm()) {
            return Err(Error::InvalidArgument("path does not end at the target point".into()));
        }
        let (_, d) = self.nearest_branch(p.z);
        if d > self.guard {
            let yp = self.y(p);
            if (end_y - yp).norm() > (end_y + yp).norm() {
                return Err(Error::InvalidArgument("path ends on the other sheet".into()));
            }
        }
        Ok(val)
    }

    /// Integral of `φ/ω₁` along a polyline starting at `basepoint`, returning
    /// the value and the continued `y` at the end.
    pub fn abel_along(&self, basepoint: CurvePoint, path: &[Complex64]) -> Result<(Complex64, Complex64)> {
        let mut total = c(0.0, 0.0);
        let mut zc = basepoint.z;
        if let Some(&first) = path.first() {
            if (first - zc).norm() > 1e-12 * (1.0 + zc.norm()) {
                return Err(Error::InvalidArgument("path must start at the basepoint".into()));
            }
        }
        self.check_path_point(zc)?;
        let mut yc = self.y(basepoint);
        let nseg = path.len().saturating_sub(1);
        for (k, w) in path.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let (e, end_d) = self.nearest_branch(b);
            let into = k + 1 == nseg && end_d < self.guard;
            // stop short of a branch endpoint and finish with the square-root substitution
            let stop = if into {
                let rs = (0.25 * self.bp.min_separation()).min((a - e).norm());
                e + (a - e) * (rs / (a - e).norm())
            } else {
                b
            };
            let len = (stop - a).norm();
            let mut s = 0.0;
            while len > 0.0 && s < 1.0 {
                let (_, d) = self.nearest_branch(zc);
                let ds = ((0.2 * d) / len).min(1.0 - s);
                let zn = if s + ds >= 1.0 { stop } else { a + (stop - a) * (s + ds) };
                self.check_path_point(zn)?;
                let (v, yn) = self.short_step(zc, yc, zn)?;
                total += v;
                zc = zn;
                yc = yn;
                s += ds;
            }
            if into {
                total += self.into_branch(zc, yc, e)?;
                zc = b;
                yc = c(0.0, 0.0);
            }
        }
        Ok((total / self.lat.omega1, yc))
    }

    /// `∫ dz/y` over a short straight step on which `pq(z)/pq(za)` stays near 1.
    fn short_step(&self, za: Complex64, ya: Complex64, zb: Complex64) -> Result<(Complex64, Complex64)> {
        let fa = self.bp.cubic(za);
        let y_at = |z: Complex64| ya * (self.bp.cubic(z) / fa).sqrt();
        let v = quadrature::integrate(|t| Ok((zb - za) / y_at(za + (zb - za) * t)), 0.0, 1.0, 1e-15)?;
        Ok((v, y_at(zb)))
    }

    /// `∫ dz/y` from `za` straight into the branch point `e`, via `z = e + (za−e)s²`.
    fn into_branch(&self, za: Complex64, ya: Complex64, e: Complex64) -> Result<Complex64> {
        let reg = |z: Complex64| self.bp.cubic(z) / (z - e);
        let ra = reg(za);
        let delta = za - e;
        // y(s) = ya · s · sqrt(reg(z)/reg(za)),  dz = 2Δs ds
        let v = quadrature::integrate(
            |s| {
                let z = e + delta * s * s;
                Ok(2.0 * delta / (ya * (reg(z) / ra).sqrt()))
            },
            0.0,
            1.0,
            1e-15,
        )?;
        Ok(-v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Arithmetic–geometric mean.
    fn agm(mut a: f64, mut b: f64) -> f64 {
        for _ in 0..60 {
            let (an, bn) = (0.5 * (a + b), (a * b).sqrt());
            a = an;
            b = bn;
        }
        a
    }

    #[test]
    fn lemniscatic_tau_is_i() {
        let cv = EllipticCurve::lemniscatic().unwrap();
        assert!((cv.lat.tau - I).norm() < 1e-12, "{}", cv.lat.tau);
        // |ω₁| = 2∫_0^1 dx/√(x−x³)... the real period of y² = x³ − x is 2π/AGM(√2, 1)
        let real_period = 2.0 * PI / agm(2f64.sqrt(), 1.0);
        assert!((cv.lat.omega1.norm() - real_period).abs() < 1e-11, "{}", cv.lat.omega1.norm());
    }

    #[test]
    fn homology_invariance() {
        let cv = EllipticCurve::lemniscatic().unwrap();
        for f in [0.2, 0.5, 0.8] {
            let a = cv.cycle_period(Cycle::A, f).unwrap();
            let b = cv.cycle_period(Cycle::B, f).unwrap();
            assert!((b / a - cv.lat.tau).norm() < 1e-9);
            assert!((a - cv.lat.omega1).norm() < 10.0 * 1e-13 * a.norm().max(1.0) + 1e-12);
        }
    }

    #[test]
    fn half_periods_hit_branch_points() {
        let cv = EllipticCurve::lemniscatic().unwrap();
        for (u, z) in cv.half_periods() {
            assert!((cv.covering_map(u).unwrap() - z).norm() < 1e-8);
        }
        assert!(!cv.covering_map(c(0.0, 0.0)).unwrap().is_finite());
    }

    #[test]
    fn y1_squares_to_cubic_and_matches_at_basepoint() {
        let cv = EllipticCurve::lemniscatic().unwrap();
        for z in [c(0.4, -0.9), c(-2.0, 0.3), c(3.0, 3.0)] {
            let y = cv.y1(z);
            assert!((y * y - cv.bp.cubic(z)).norm() < 1e-12 * (1.0 + y.norm_sqr()));
        }
        assert!((cv.y1(cv.z0) - cv.bp.cubic(cv.z0).sqrt()).norm() < 1e-14);
        assert!((cv.gamma(cv.z0) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn covering_derivative_is_omega_y() {
        let cv = EllipticCurve::lemniscatic().unwrap();
        let z = c(0.7, 0.4);
        let u = cv.abel_canonical(z).unwrap();
        let (zz, dz) = cv.covering_map_with_derivative(u).unwrap();
        assert!((zz - z).norm() < 1e-12);
        assert!((dz - cv.lat.omega1 * cv.y1(z)).norm() < 1e-10);
    }

    #[test]
    fn abel_map_trivial_path() {
        let cv = EllipticCurve::lemniscatic().unwrap();
        let p0 = CurvePoint::new(cv.z0, Sheet::One);
        assert_eq!(cv.abel_map(p0, p0, &[cv.z0]).unwrap(), c(0.0, 0.0));
    }

    fn circle_loop(center: Complex64, start: Complex64, r: f64, n: usize) -> Vec<Complex64> {
        // tail from start to the circle, one ccw turn, back
        let dir = (start - center) / (start - center).norm();
        let entry = center + dir * r;
        let mut v = vec![start, entry];
        for k in 1..=n {
            v.push(center + dir * r * (I * 2.0 * PI * k as f64 / n as f64).exp());
        }
        v.push(start);
        v
    }

    #[test]
    fn a_cycle_closes_in_lattice() {
        let cv = EllipticCurve::lemniscatic().unwrap();
        let p0 = CurvePoint::new(cv.z0, Sheet::One);
        // loop around both z1 and z2
        let path = circle_loop(c(-0.5, 0.0), cv.z0, 0.8, 64);
        let v = cv.abel_map(p0, p0, &path).unwrap();
        assert!(cv.lat.defect(v) < 1e-9, "{v}");
        assert!(v.norm() > 0.5);
    }

    #[test]
    fn loop_around_z1_reaches_other_sheet() {
        let cv = EllipticCurve::lemniscatic().unwrap();
        let p0 = CurvePoint::new(cv.z0, Sheet::One);
        let path = circle_loop(cv.bp.z1, cv.z0, 0.3, 48);
        let u0 = cv.abel_point(p0).unwrap();
        let v = cv.abel_map(p0.involution(), p0, &path).unwrap();
        // P0 ↦ ιP0 goes u0 → −u0
        assert!(cv.lat.defect(v + 2.0 * u0) < 1e-9);
        // ending at the branch point itself lands on a half period
        let w = cv.abel_map(CurvePoint::new(cv.bp.z1, Sheet::One), p0, &[cv.z0, cv.bp.z1]).unwrap();
        assert!(cv.lat.half_defect(w + u0) < 1e-9, "{}", w + u0);
        assert!(cv.lat.defect(w + u0) > 0.1);
    }

    #[test]
    fn path_through_branch_point_rejected() {
        let cv = EllipticCurve::lemniscatic().unwrap();
        let p0 = CurvePoint::new(cv.z0, Sheet::One);
        let r = cv.abel_map(p0, p0, &[cv.z0, c(0.0, 0.0), c(0.5, -0.5), cv.z0]);
        assert!(matches!(r, Err(Error::PathThroughSingularity { .. })));
    }

    #[test]
    fn hodge_star_factors() {
        assert_eq!(hodge_star(FormType::Du), -I);
        assert_eq!(hodge_star(FormType::Dubar), I);
        for f in [FormType::Du, FormType::Dubar] {
            assert_eq!(hodge_star(f) * hodge_star(f), c(-1.0, 0.0));
        }
    }

    #[test]
    fn metric_scale_areas() {
        let cv = EllipticCurve::lemniscatic().unwrap();
        let m1 = MetricScale::new(&cv.lat, 1.0).unwrap();
        let m3 = MetricScale::new(&cv.lat, 3.0).unwrap();
        assert!((m1.area_c - 1.0).abs() < 1e-12);
        assert!((m3.area_c - 3.0 * m1.area_c).abs() < 1e-12);
        assert_eq!(m3.area_sigma, m3.area_c / 2.0);
    }

    #[test]
    fn invalid_branch_points() {
        assert!(matches!(
            BranchPoints::new(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)),
            Err(Error::InvalidBranchPoints(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn generic_curves(a in -1.0..1.0f64, b in -1.0..1.0f64, lr in -2.0..2.0f64, li in 0.2..2.0f64,
                          ur in 0.05..0.45f64, ui in 0.05..0.45f64) {
            let bp = BranchPoints::new(c(a, b), c(0.0, 0.0) + c(1.5, -0.3), c(lr, li) + c(0.0, 0.5)).unwrap();
            let cv = EllipticCurve::new(bp, None, 1e-12).unwrap();
            prop_assert!(cv.lat.tau.im > 0.0);
            for (u, z) in cv.half_periods() {
                prop_assert!((cv.covering_map(u).unwrap() - z).norm() < 1e-8);
            }
            let u = c(ur, 0.0) + ui * cv.lat.tau + c(0.0, 0.01);
            let z = cv.covering_map(u).unwrap();
            prop_assert!((cv.covering_map(-u).unwrap() - z).norm() < 1e-8 * (1.0 + z.norm()));
            prop_assert!((cv.covering_map(u + 1.0).unwrap() - z).norm() < 1e-8 * (1.0 + z.norm()));
            prop_assert!((cv.covering_map(u + cv.lat.tau).unwrap() - z).norm() < 1e-8 * (1.0 + z.norm()));
            let v = cv.abel_canonical(z).unwrap();
            prop_assert!(cv.lat.defect(v - u).min(cv.lat.defect(v + u)) < 1e-8);
        }
    }
}
