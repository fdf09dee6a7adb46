//! Explicit fundamental solution of the rank-2 Fuchsian system with
//! exponents `±1/4` at `z1, z2, z3, ∞`:
//!
//! ```text
//! Y_rs(z) = X_rs(z) · θ[δ,ε](A_rs)/θ(A_rs) · θ(0)/θ[δ,ε](0),
//! A_rs = u^{(s)} − v_r,   u^{(1)} = u(z),  u^{(2)} = −u(z),  v_1 = u0,  v_2 = −u0,
//! ```
//!
//! where `u(z)` is the Abel coordinate of the sheet-1 point over `z` and
//! `X = ½[[γ+γ⁻¹, −i(γ−γ⁻¹)], [i(γ−γ⁻¹), γ+γ⁻¹]]`, `γ` the fourth root of
//! `(z−z1)(z−z3)(z0−z2) / ((z0−z1)(z0−z3)(z−z2))` with `γ(z0) = 1`.
//! `det X = det Y = 1`, `Y(z0) = I` and across `ℒ` (from the left side `+`
//! to the right side `−`) `Y₋ = Y₊·J`, `J = [[0,1],[−1,0]]`.
//!
//! The theta quotients are single-valued only up to the characters
//! `e^{2πi(mδ − nε)}` of the lattice, so [`ExplicitSolution::eval_y`] uses the
//! Abel coordinate reduced to the fundamental cell; values continued along a
//! path are produced by [`ExplicitSolution::track`].

use crate::elliptic::{CurvePoint, EllipticCurve, Sheet};
use crate::fuchsian::{self, FuchsianSystem};
use crate::linalg::{self, c};
use crate::theta::{self, ThetaCharacteristics};
use crate::{Complex64, Error, Mat2, Result};
use serde::Serialize;
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Algebraic factor `X` as a function of `γ`.
pub fn x_of_gamma(g: Complex64) -> Mat2 {
    let gi = 1.0 / g;
    let a = 0.5 * (g + gi);
    let b = 0.5 * (g - gi);
    Mat2::new(a, -I * b, I * b, a)
}

/// `dX/dγ`.
fn dx_dgamma(g: Complex64) -> Mat2 {
    let gi2 = 1.0 / (g * g);
    let a = 0.5 * (1.0 - gi2);
    let b = 0.5 * (1.0 + gi2);
    Mat2::new(a, -I * b, I * b, a)
}

/// Branch data of the algebraic prefactor.
#[derive(Debug, Clone, Copy)]
pub struct AlgebraicPrefactor<'a> {
    pub curve: &'a EllipticCurve,
    /// Points closer than this to `ℒ` are rejected by [`Self::eval`].
    pub cut_guard: f64,
}

impl<'a> AlgebraicPrefactor<'a> {
    pub fn new(curve: &'a EllipticCurve) -> Self {
        Self { curve, cut_guard: 1e-12 * (1.0 + curve.bp.min_separation()) }
    }

    pub fn eval(&self, z: Complex64, sheet: Sheet) -> Result<Mat2> {
        if self.curve.bp.dist_to_cut(z) < self.cut_guard {
            return Err(Error::OnCut(z));
        }
        let x = x_of_gamma(self.curve.gamma(z));
        Ok(match sheet {
            Sheet::One => x,
            Sheet::Two => x * linalg::jump(),
        })
    }

    pub fn derivative(&self, z: Complex64) -> Mat2 {
        dx_dgamma(self.curve.gamma(z)) * self.curve.dgamma(z)
    }
}

/// State carried along a continuation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tracked {
    pub z: Complex64,
    /// Abel coordinate of the continued sheet-1 point
    pub u: Complex64,
    /// Continued fourth root
    pub gamma: Complex64,
}

#[derive(Debug, Clone)]
pub struct ExplicitSolution {
    pub curve: EllipticCurve,
    pub ch: ThetaCharacteristics,
    /// Abel coordinate of `P0^{(1)}`; `P0^{(2)}` sits at `−u0`.
    pub u0: Complex64,
    norm: Complex64,
    tol: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct JumpReport {
    /// `max ‖Y₋ − Y₊·J‖`
    pub max_defect: f64,
    /// `max ‖X₋ − X₊·J‖`
    pub max_x_defect: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub enum LoopKind {
    A,
    B,
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnMonodromy {
    pub kind: LoopKind,
    /// Diagonal of `Y(z0)⁻¹·Y_continued(z0)`.
    pub measured: [Complex64; 2],
    /// Off-diagonal leakage `max |M₀₁|, |M₁₀|`.
    pub leakage: f64,
    /// Lattice vector `(m, n)` swept by `u` along the loop.
    pub lattice_shift: (i64, i64),
    /// `e^{±2πi(mδ − nε)}`
    pub predicted: [Complex64; 2],
    /// The form `(−1)^i e^{2πiδ}` (a-loop) or `(−1)^i e^{2πiε}` (b-loop).
    pub alternative: [Complex64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeReport {
    /// Residues of the induced connection on the line spanned by `Y_1`,
    /// in the local coordinate `t` at `w1, w2, w3, w∞`.
    pub residues: [f64; 4],
    /// `−Σ residues`
    pub degree: f64,
}

impl ExplicitSolution {
    pub fn new(curve: EllipticCurve, ch: ThetaCharacteristics) -> Result<Self> {
        let tol = theta::DEFAULT_TOL;
        let tau = curve.lat.tau;
        let tn = theta::theta(c(0.0, 0.0), tau, ch, tol)?;
        if tn.norm() < 1e-12 {
            return Err(Error::CharacteristicNullZero);
        }
        let t0 = theta::theta(c(0.0, 0.0), tau, ThetaCharacteristics::ZERO, tol)?;
        let u0 = curve.abel_canonical(curve.z0)?;
        Ok(Self { curve, ch, u0, norm: t0 / tn, tol })
    }

    pub fn prefactor(&self) -> AlgebraicPrefactor<'_> {
        AlgebraicPrefactor::new(&self.curve)
    }

    pub fn eval_x(&self, z: Complex64, sheet: Sheet) -> Result<Mat2> {
        self.prefactor().eval(z, sheet)
    }

    /// Theta-quotient matrix `Θ_rs` and, if `du` is given, its `z`-derivative.
    fn theta_matrix(&self, u: Complex64, du: Option<Complex64>) -> Result<(Mat2, Mat2)> {
        let tau = self.curve.lat.tau;
        let us = [u, -u];
        let ds = du.map(|d| [d, -d]);
        let vs = [self.u0, -self.u0];
        let mut th = Mat2::zeros();
        let mut dth = Mat2::zeros();
        for r in 0..2 {
            for s in 0..2 {
                let a = us[s] - vs[r];
                let [n, dn] = theta::theta_derivs::<2>(a, tau, self.ch, self.tol)?;
                let [d, dd] = theta::theta_derivs::<2>(a, tau, ThetaCharacteristics::ZERO, self.tol)?;
                if d.norm() < 1e-13 * (1.0 + n.norm()) {
                    return Err(Error::ThetaDenominatorZero(a));
                }
                th[(r, s)] = self.norm * n / d;
                if let Some(ds) = ds {
                    dth[(r, s)] = self.norm * (dn * d - n * dd) / (d * d) * ds[s];
                }
            }
        }
        Ok((th, dth))
    }

    fn assemble(x: &Mat2, th: &Mat2) -> Mat2 {
        x.component_mul(th)
    }

    /// `(z, sheet, Y)` at the cover point with Abel coordinate `u`, evaluated
    /// from `u` itself without cell reduction. The sheet is read off
    /// `dz/du = ω₁·y`; on sheet 2 the fourth root is `i·γ`.
    pub fn eval_on_cover(&self, u: Complex64) -> Result<(Complex64, Sheet, Mat2)> {
        let (z, dz) = self.curve.covering_map_with_derivative(u)?;
        if !z.is_finite() || self.curve.bp.as_array().iter().any(|b| (z - b).norm() < self.curve.guard) {
            return Err(Error::SamplingNearSingularity(u));
        }
        let ratio = dz / (self.curve.lat.omega1 * self.curve.y1(z));
        let sheet = if (ratio - 1.0).norm() < (ratio + 1.0).norm() { Sheet::One } else { Sheet::Two };
        let g = match sheet {
            Sheet::One => self.curve.gamma(z),
            Sheet::Two => self.curve.gamma(z) * c(0.0, 1.0),
        };
        let (th, _) = self.theta_matrix(u, None)?;
        Ok((z, sheet, Self::assemble(&x_of_gamma(g), &th)))
    }

    /// `Y(z)` on the given sheet, with the Abel coordinate reduced to the cell.
    pub fn eval_y(&self, z: Complex64, sheet: Sheet) -> Result<Mat2> {
        let x = self.eval_x(z, Sheet::One)?;
        let u = self.curve.abel_canonical(z)?;
        let (th, _) = self.theta_matrix(u, None)?;
        let y = Self::assemble(&x, &th);
        Ok(match sheet {
            Sheet::One => y,
            Sheet::Two => y * linalg::jump(),
        })
    }

    /// `(Y, dY/dz)` on sheet 1 with analytic derivative.
    pub fn eval_y_with_derivative(&self, z: Complex64) -> Result<(Mat2, Mat2)> {
        let u = self.curve.abel_canonical(z)?;
        self.y_and_derivative_at(z, u, self.curve.gamma(z))
    }

    fn y_and_derivative_at(&self, z: Complex64, u: Complex64, g: Complex64) -> Result<(Mat2, Mat2)> {
        let x = x_of_gamma(g);
        // dγ/dz follows γ's own branch
        let b = &self.curve.bp;
        let dg = g * (1.0 / (z - b.z1) - 1.0 / (z - b.z2) + 1.0 / (z - b.z3)) / 4.0;
        let dx = dx_dgamma(g) * dg;
        // du/dz for the continued point: dz/du = ω₁·y with y = γ²·y1/γ_canon²
        let gc = self.curve.gamma(z);
        let y = self.curve.y1(z) * (g * g) / (gc * gc);
        let du = 1.0 / (self.curve.lat.omega1 * y);
        let (th, dth) = self.theta_matrix(u, Some(du))?;
        Ok((Self::assemble(&x, &th), Self::assemble(&dx, &th) + Self::assemble(&x, &dth)))
    }

    /// `Y` from a continued state.
    pub fn y_tracked(&self, t: &Tracked) -> Result<Mat2> {
        let (th, _) = self.theta_matrix(t.u, None)?;
        Ok(Self::assemble(&x_of_gamma(t.gamma), &th))
    }

    /// Starting state at `z0`, where `Y = I`.
    pub fn start(&self) -> Tracked {
        Tracked { z: self.curve.z0, u: self.u0, gamma: c(1.0, 0.0) }
    }

    /// Reduced-cell state at `z`, the starting point for local continuation.
    pub fn local_branch(&self, z: Complex64) -> Result<Tracked> {
        Ok(Tracked { z, u: self.curve.abel_canonical(z)?, gamma: self.curve.gamma(z) })
    }

    /// Continues `(u, γ)` along the polyline `path` (first vertex = `from.z`).
    pub fn track(&self, from: Tracked, path: &[Complex64]) -> Result<Tracked> {
        let mut cur = from;
        let guard = self.curve.guard;
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = (b - a).norm();
            let mut s = 0.0;
            while s < 1.0 && len > 0.0 {
                let d = self.curve.bp.as_array().iter().map(|e| (cur.z - e).norm()).fold(f64::MAX, f64::min);
                if d < guard {
                    return Err(Error::PathThroughSingularity { point: cur.z, distance: d });
                }
                let ds = (0.1 * d / len).min(1.0 - s);
                let zn = if s + ds >= 1.0 { b } else { a + (b - a) * (s + ds) };
                cur = self.step(cur, zn)?;
                s += ds;
            }
        }
        Ok(cur)
    }

    fn step(&self, cur: Tracked, zn: Complex64) -> Result<Tracked> {
        let gc = self.curve.gamma(zn);
        let mut best = gc;
        let mut bd = f64::MAX;
        for k in 0..4 {
            let cand = gc * I.powi(k);
            let d = (cand - cur.gamma).norm();
            if d < bd {
                bd = d;
                best = cand;
            }
        }
        // predictor: du = dz / (ω₁ y) with the continued y
        let gcur = self.curve.gamma(cur.z);
        let ycur = self.curve.y1(cur.z) * (cur.gamma * cur.gamma) / (gcur * gcur);
        let guess = cur.u + (zn - cur.z) / (self.curve.lat.omega1 * ycur);
        let u = self.curve.abel_continue(zn, guess)?;
        Ok(Tracked { z: zn, u, gamma: best })
    }

    /// `max ‖Y₋ − Y₊J‖` over points strictly inside the cuts. `Y₊` is the
    /// reduced-cell value just left of the cut; `Y₋` continues `u` across.
    pub fn verify_jump(&self, points_on_l: &[Complex64]) -> Result<JumpReport> {
        let bp = &self.curve.bp;
        let scale = 1.0 + bp.min_separation();
        let eta = 1e-10 * scale;
        let j = linalg::jump();
        let mut rep = JumpReport { max_defect: 0.0, max_x_defect: 0.0, points: points_on_l.len() };
        for &z in points_on_l {
            let on_seg = crate::elliptic::dist_segment(z, bp.z1, bp.z2) < 1e-9 * scale;
            let dir = if on_seg { (bp.z2 - bp.z1) / (bp.z2 - bp.z1).norm() } else { bp.ray_direction() };
            if !on_seg && crate::elliptic::dist_ray(z, bp.z3, dir) > 1e-9 * scale {
                return Err(Error::InvalidArgument(format!("{z} is not on the cut set")));
            }
            let n = I * dir;
            let (zp, zm) = (z + eta * n, z - eta * n);
            let up = self.curve.abel_canonical(zp)?;
            let um = self.curve.abel_continue(zm, -up)?;
            let xp = x_of_gamma(self.curve.gamma(zp));
            let xm = x_of_gamma(self.curve.gamma(zm));
            let yp = Self::assemble(&xp, &self.theta_matrix(up, None)?.0);
            let ym = Self::assemble(&xm, &self.theta_matrix(um, None)?.0);
            rep.max_defect = rep.max_defect.max(linalg::norm(&(ym - yp * j)));
            rep.max_x_defect = rep.max_x_defect.max(linalg::norm(&(xm - xp * j)));
        }
        Ok(rep)
    }

    /// `n` interior points on each piece of `ℒ` (the ray is sampled up to
    /// twice the diameter of the branch points).
    pub fn cut_points(&self, n: usize) -> Vec<Complex64> {
        let bp = &self.curve.bp;
        let d = bp.ray_direction();
        let len = 2.0 * ((bp.z1 - bp.z3).norm().max((bp.z2 - bp.z3).norm()));
        let mut v = Vec::with_capacity(2 * n);
        for k in 0..n {
            let t = (k as f64 + 0.5) / n as f64;
            v.push(bp.z1 + (bp.z2 - bp.z1) * t);
            v.push(bp.z3 + d * (len * t));
        }
        v
    }

    /// Closed loop based at `z0` around the pair of branch points of the
    /// given cycle: straight tail to an ellipse with those foci, one turn, back.
    pub fn loop_path(&self, kind: LoopKind, n: usize) -> Vec<Complex64> {
        let bp = &self.curve.bp;
        let (a, b, o) = match kind {
            LoopKind::A => (bp.z1, bp.z2, bp.z3),
            LoopKind::B => (bp.z2, bp.z3, bp.z1),
        };
        let m = 0.5 * (a + b);
        let cc = 0.5 * (b - a);
        let eta = 0.5 * ((o - m) / cc).acos().im.abs();
        let ell: Vec<Complex64> = (0..=n).map(|k| m + cc * c(2.0 * PI * k as f64 / n as f64, eta).cos()).collect();
        let z0 = self.curve.z0;
        let (k0, _) = ell
            .iter()
            .enumerate()
            .map(|(k, z)| (k, (z - z0).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("ellipse sampled");
        let mut v = vec![z0];
        for k in 0..=n {
            v.push(ell[(k0 + k) % n]);
        }
        v.push(z0);
        v
    }

    /// Continues `Y` around the a- or b-loop and reads off column multipliers.
    pub fn column_monodromy(&self, kind: LoopKind) -> Result<ColumnMonodromy> {
        let path = self.loop_path(kind, 256);
        let end = self.track(self.start(), &path)?;
        let m = self.y_tracked(&end)?;
        let leakage = m[(0, 1)].norm().max(m[(1, 0)].norm());
        let (lm, ln) = self.curve.lat.nearest(end.u - self.u0);
        let phase = 2.0 * PI * (lm as f64 * self.ch.delta - ln as f64 * self.ch.epsilon);
        let f = c(0.0, phase).exp();
        let alt_base = match kind {
            LoopKind::A => c(0.0, 2.0 * PI * self.ch.delta).exp(),
            LoopKind::B => c(0.0, 2.0 * PI * self.ch.epsilon).exp(),
        };
        let out = ColumnMonodromy {
            kind,
            measured: [m[(0, 0)], m[(1, 1)]],
            leakage,
            lattice_shift: (lm, ln),
            predicted: [f, 1.0 / f],
            alternative: [-alt_base, alt_base],
        };
        if leakage > 1e-6 {
            return Err(Error::NotEigenvector { column: if m[(1, 0)].norm() > m[(0, 1)].norm() { 0 } else { 1 }, leakage });
        }
        Ok(out)
    }

    /// Residue matrices of `Y'Y⁻¹` at `z1, z2, z3` by trapezoidal quadrature.
    pub fn extract_residues(&self, n: usize) -> Result<Vec<Mat2>> {
        let r = 0.3 * self.curve.bp.min_separation();
        let sampler = |z: Complex64| self.eval_y_with_derivative(z);
        self.curve
            .bp
            .as_array()
            .iter()
            .map(|&p| fuchsian::residues_from_solution(&sampler, p, r, n))
            .collect()
    }

    /// Fuchsian system with the residues read off `Y`.
    pub fn fuchsian_system(&self, n: usize) -> Result<FuchsianSystem> {
        FuchsianSystem::new(self.curve.bp.as_array().to_vec(), self.extract_residues(n)?)
    }

    /// Residues of the connection induced on the line spanned by the first
    /// column, measured by continuing `ℓ·Y_1` twice around each branch point
    /// (once around the local coordinate `t`) and reading off the winding.
    ///
    /// A zero of `ℓ·Y_1` inside the loop lowers the reading by one, and the
    /// leading direction of `Y_1` at a branch point can lie in `ker ℓ`, so
    /// the largest reading over three functionals is kept.
    pub fn line_subbundle_residues(&self) -> Result<DegreeReport> {
        let bp = self.curve.bp;
        let ells = [[c(1.0, 0.0), c(0.37, 0.21)], [c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
        let r = 0.1 * bp.min_separation();
        let mut residues = [0.0; 4];
        let m = (bp.z1 + bp.z2 + bp.z3) / 3.0;
        let big = 3.0 * bp.as_array().iter().map(|z| (z - m).norm()).fold(0.0, f64::max)
            + (self.curve.z0 - m).norm();
        let centers = [(bp.z1, r, true), (bp.z2, r, true), (bp.z3, r, true), (m, big, false)];
        for (k, &(center, rad, ccw)) in centers.iter().enumerate() {
            let dir = (self.curve.z0 - center) / (self.curve.z0 - center).norm();
            let mut path = vec![self.curve.z0];
            let turn = fuchsian::circle(center, rad, dir, 128, ccw);
            path.extend(turn.iter().copied());
            path.extend(turn.iter().skip(1).copied());
            let entry = self.track(self.start(), &path[..2])?;
            let mut best = f64::NEG_INFINITY;
            for ell in &ells {
                let f = |t: &Tracked| -> Result<Complex64> {
                    let y = self.y_tracked(t)?;
                    Ok(ell[0] * y[(0, 0)] + ell[1] * y[(1, 0)])
                };
                let mut cur = entry;
                let mut prev = f(&cur)?;
                let mut wind = 0.0;
                for w in path[1..].windows(2) {
                    // fine sub-steps so the phase increment stays below π
                    let sub = 8;
                    for s in 1..=sub {
                        let z = w[0] + (w[1] - w[0]) * (s as f64 / sub as f64);
                        cur = self.track(cur, &[cur.z, z])?;
                        let v = f(&cur)?;
                        wind += (v / prev).arg();
                        prev = v;
                    }
                }
                best = best.max(-wind / (2.0 * PI));
            }
            residues[k] = best;
        }
        Ok(DegreeReport { residues, degree: -residues.iter().sum::<f64>() })
    }

    /// Log-log slope of `‖Y_s‖` against `|t|` at a branch point, with
    /// `|t| = ρ^{1/2}` (finite points) or `|z|^{-1/2}` (at `∞`).
    pub fn local_exponent(&self, branch: Option<usize>, column: usize) -> Result<f64> {
        let bp = self.curve.bp.as_array();
        let pts: Vec<(f64, f64)> = [1e-3, 1e-4, 1e-5, 1e-6]
            .iter()
            .map(|&rho: &f64| -> Result<(f64, f64)> {
                let (z, t) = match branch {
                    Some(k) => (bp[k] + rho * c(0.6, 0.8), rho.sqrt()),
                    None => (c(0.6, 0.8) / rho, rho.sqrt()),
                };
                let y = self.eval_y(z, Sheet::One)?;
                let n = (y[(0, column)].norm_sqr() + y[(1, column)].norm_sqr()).sqrt();
                Ok((t.ln(), n.ln()))
            })
            .collect::<Result<_>>()?;
        let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (mx / pts.len() as f64, my / pts.len() as f64);
        let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2)));
        Ok(sxy / sxx)
    }

    /// Abel coordinate of a point on the given sheet.
    pub fn abel(&self, p: CurvePoint) -> Result<Complex64> {
        self.curve.abel_point(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::BranchPoints;

    fn lemniscatic() -> ExplicitSolution {
        ExplicitSolution::new(EllipticCurve::lemniscatic().unwrap(), ThetaCharacteristics::new(0.21, 0.13)).unwrap()
    }

    fn generic() -> ExplicitSolution {
        let bp = BranchPoints::new(c(-0.7, 0.2), c(0.1, -0.3), c(1.1, 0.4)).unwrap();
        let cv = EllipticCurve::new(bp, Some(c(0.3, 0.7)), 1e-13).unwrap();
        ExplicitSolution::new(cv, ThetaCharacteristics::new(0.21, 0.13)).unwrap()
    }

    #[test]
    fn identity_at_basepoint() {
        for s in [lemniscatic(), generic()] {
            let y = s.eval_y(s.curve.z0, Sheet::One).unwrap();
            assert!(linalg::norm(&(y - Mat2::identity())) < 1e-12);
            assert!(linalg::norm(&(s.eval_x(s.curve.z0, Sheet::One).unwrap() - Mat2::identity())) < 1e-15);
        }
    }

    #[test]
    fn cover_evaluation_matches_both_sheets() {
        let s = generic();
        for z in [c(0.5, 0.5), c(-0.3, -0.9)] {
            let u = s.curve.abel_canonical(z).unwrap();
            let (z1, sh1, y1) = s.eval_on_cover(u).unwrap();
            assert!((z1 - z).norm() < 1e-9 && sh1 == Sheet::One);
            assert!(linalg::norm(&(y1 - s.eval_y(z, Sheet::One).unwrap())) < 1e-9);
            let (_, sh2, y2) = s.eval_on_cover(-u).unwrap();
            assert_eq!(sh2, Sheet::Two);
            assert!(linalg::norm(&(y2 - s.eval_y(z, Sheet::Two).unwrap())) < 1e-9);
        }
    }

    #[test]
    fn unimodular() {
        let s = generic();
        for z in [c(0.5, 0.5), c(-0.3, -0.9), c(2.0, 1.0)] {
            let y = s.eval_y(z, Sheet::One).unwrap();
            assert!((linalg::det(&y) - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn x_is_holomorphic() {
        let s = generic();
        let z = c(0.6, -0.8);
        let h = 1e-5;
        let x = |z| s.eval_x(z, Sheet::One).unwrap();
        let dx = (x(z + h) - x(z - h)) / c(2.0 * h, 0.0);
        let dy = (x(z + c(0.0, h)) - x(z - c(0.0, h))) / c(0.0, 2.0 * h);
        assert!(linalg::norm(&(dx - dy)) < 1e-6);
        assert!(linalg::norm(&(dx - s.prefactor().derivative(z))) < 1e-6);
    }

    #[test]
    fn analytic_derivative_matches_difference() {
        let s = generic();
        let z = c(0.6, -0.8);
        let (_, dy) = s.eval_y_with_derivative(z).unwrap();
        let h = 1e-5;
        let fd = (s.eval_y(z + h, Sheet::One).unwrap() - s.eval_y(z - h, Sheet::One).unwrap()) / c(2.0 * h, 0.0);
        assert!(linalg::norm(&(fd - dy)) < 1e-6);
    }

    #[test]
    fn jump_on_cuts() {
        for s in [lemniscatic(), generic()] {
            let rep = s.verify_jump(&s.cut_points(10)).unwrap();
            assert!(rep.max_defect < 1e-7, "{rep:?}");
            assert!(rep.max_x_defect < 1e-7);
        }
    }

    #[test]
    fn residue_eigenvalues_quarter() {
        let s = generic();
        for r in s.extract_residues(64).unwrap() {
            let (a, b) = linalg::eigenvalues(&r);
            let (hi, lo) = if a.re > b.re { (a, b) } else { (b, a) };
            assert!((hi - 0.25).norm() < 1e-8 && (lo + 0.25).norm() < 1e-8, "{hi} {lo}");
        }
    }

    #[test]
    fn sheet_two_is_right_multiplied_by_j() {
        let s = lemniscatic();
        let z = c(0.4, -0.6);
        let y1 = s.eval_y(z, Sheet::One).unwrap();
        let y2 = s.eval_y(z, Sheet::Two).unwrap();
        assert!(linalg::norm(&(y2 - y1 * linalg::jump())) == 0.0);
        // columns swapped up to sign
        assert!((y2[(0, 0)] + y1[(0, 1)]).norm() == 0.0 && (y2[(0, 1)] - y1[(0, 0)]).norm() == 0.0);
    }

    #[test]
    fn column_multipliers_follow_lattice_shift() {
        let s = generic();
        for kind in [LoopKind::A, LoopKind::B] {
            let cm = s.column_monodromy(kind).unwrap();
            assert!(cm.leakage < 1e-8);
            for i in 0..2 {
                assert!((cm.measured[i] - cm.predicted[i]).norm() < 1e-8, "{cm:?}");
            }
            assert!((cm.measured[0] * cm.measured[1] - 1.0).norm() < 1e-8);
            assert!(cm.lattice_shift != (0, 0));
        }
    }

    #[test]
    fn trivial_characteristics_give_unit_multipliers() {
        let cv = EllipticCurve::lemniscatic().unwrap();
        let s = ExplicitSolution::new(cv, ThetaCharacteristics::ZERO).unwrap();
        let cm = s.column_monodromy(LoopKind::A).unwrap();
        for m in cm.measured {
            assert!((m - 1.0).norm() < 1e-8 || (m + 1.0).norm() < 1e-8);
        }
    }

    #[test]
    fn odd_characteristic_rejected() {
        let cv = EllipticCurve::lemniscatic().unwrap();
        assert!(matches!(
            ExplicitSolution::new(cv, ThetaCharacteristics::ODD),
            Err(Error::CharacteristicNullZero)
        ));
    }

    #[test]
    fn line_subbundle_degree() {
        for s in [generic(), lemniscatic()] {
            let rep = s.line_subbundle_residues().unwrap();
            for r in rep.residues {
                assert!((r - 0.5).abs() < 1e-6, "{rep:?}");
            }
            assert!((rep.degree + 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn local_exponents_half() {
        let s = generic();
        for k in [Some(0), Some(1), Some(2), None] {
            for col in 0..2 {
                let e = s.local_exponent(k, col).unwrap();
                assert!((e + 0.5).abs() < 1e-2, "{k:?} {col}: {e}");
            }
        }
    }

    #[test]
    fn fuchsian_integration_reproduces_y() {
        let s = generic();
        let sys = s.fuchsian_system(64).unwrap();
        let path = vec![s.curve.z0, c(-0.2, 1.3), c(-1.5, 0.1), c(-0.4, -1.0), c(1.8, -0.2)];
        let end = s.track(s.start(), &path).unwrap();
        let y_cont = s.y_tracked(&end).unwrap();
        let cp = fuchsian::ContinuationPath::new(path, sys.default_guard());
        let y_int = fuchsian::integrate(&sys, &cp, Mat2::identity(), 1e-12).unwrap();
        assert!(linalg::norm(&(y_int - y_cont)) < 1e-8 * linalg::norm(&y_cont), "{y_int} {y_cont}");
    }
}
