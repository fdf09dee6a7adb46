//! Riemann theta function with real characteristics,
//!
//! ```text
//! θ[δ,ε](u; τ) = Σ_n exp(πiτ(n+δ)² + 2πi(u+ε)(n+δ)),
//! ```
//!
//! together with its first three `u`-derivatives, the quasi-periodicity
//! diagnostics and a Newton locator for the zero of `θ[0,0]`.

use crate::{quadrature, Complex64, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default relative truncation tolerance for the theta series.
pub const DEFAULT_TOL: f64 = 1e-17;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Real characteristic pair `(δ, ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaCharacteristics {
    pub delta: f64,
    pub epsilon: f64,
}

impl ThetaCharacteristics {
    pub const ZERO: Self = Self { delta: 0.0, epsilon: 0.0 };
    /// The odd characteristic `[½, ½]`.
    pub const ODD: Self = Self { delta: 0.5, epsilon: 0.5 };

    pub fn new(delta: f64, epsilon: f64) -> Self {
        Self { delta, epsilon }
    }

    pub fn negated(self) -> Self {
        Self { delta: -self.delta, epsilon: -self.epsilon }
    }
}

fn check_tau(tau: Complex64) -> Result<()> {
    if !(tau.im > 0.0) || !tau.re.is_finite() {
        return Err(Error::InvalidModulus(tau.im));
    }
    Ok(())
}

/// Summation window `[lo, hi]` of `n`.
///
/// Terms are measured relative to the largest one, which sits at
/// `n + δ ≈ −Im u / Im τ`; the half-width is chosen so the Gaussian
/// envelope, inflated by the `(2πx)³` derivative weight, is below `tol`.
fn window(u: Complex64, tau: Complex64, delta: f64, tol: f64) -> (i64, i64) {
    let xc = -u.im / tau.im;
    let nc = xc - delta;
    let lt = -tol.max(1e-300).ln();
    let r0 = (lt / (PI * tau.im)).sqrt();
    let poly = 3.0 * (2.0 * PI * (xc.abs() + r0 + 2.0)).ln().max(0.0);
    let r = ((lt + poly) / (PI * tau.im)).sqrt() + 2.0;
    ((nc - r).floor() as i64, (nc + r).ceil() as i64)
}

/// `θ[δ,ε](u; τ)` and its derivatives of order `0..=K-1` in `u`.
pub fn theta_derivs<const K: usize>(
    u: Complex64,
    tau: Complex64,
    ch: ThetaCharacteristics,
    tol: f64,
) -> Result<[Complex64; K]> {
    check_tau(tau)?;
    let (lo, hi) = window(u, tau, ch.delta, tol);
    let mut out = [Complex64::new(0.0, 0.0); K];
    let ue = u + ch.epsilon;
    for n in lo..=hi {
        let x = n as f64 + ch.delta;
        let term = (I * PI * tau * x * x + 2.0 * I * PI * ue * x).exp();
        let f = 2.0 * I * PI * x;
        let mut w = Complex64::new(1.0, 0.0);
        for o in out.iter_mut() {
            *o += term * w;
            w *= f;
        }
    }
    Ok(out)
}

/// `θ[δ,ε](u; τ)` truncated with relative tail `tol`.
pub fn theta(u: Complex64, tau: Complex64, ch: ThetaCharacteristics, tol: f64) -> Result<Complex64> {
    Ok(theta_derivs::<1>(u, tau, ch, tol)?[0])
}

/// Multiplier of `θ[δ,ε]` under `u → u + 1`.
pub fn multiplier_one(ch: ThetaCharacteristics) -> Complex64 {
    (2.0 * I * PI * ch.delta).exp()
}

/// Multiplier of `θ[δ,ε]` under `u → u + τ`, obtained by re-indexing the
/// series `n → n − 1`:  `e^{−2πiε} e^{−2πiu} e^{−πiτ}`.
pub fn multiplier_tau(u: Complex64, tau: Complex64, ch: ThetaCharacteristics) -> Complex64 {
    (-2.0 * I * PI * ch.epsilon - 2.0 * I * PI * u - I * PI * tau).exp()
}

/// Quasi-periodicity defects.
///
/// `defect1`, `defect2` are scaled by `max(1, |θ(u)|, |θ(u+shift)|)`, since
/// the series itself is only accurate to a relative rounding error and
/// `|θ|` grows like `exp(π (Im u)²/Im τ)`. The `abs_*` fields are unscaled.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AutomorphyDefects {
    /// `|θ(u+1) − e^{2πiδ}θ(u)|`, scaled
    pub defect1: f64,
    /// `|θ(u+τ) − e^{−2πiε}e^{−2πiu}e^{−πiτ}θ(u)|`, scaled
    pub defect2: f64,
    pub abs_defect1: f64,
    pub abs_defect2: f64,
    /// Scaled `defect2` with the multiplier `e^{−2πiτ}` in place of `e^{−πiτ}`.
    pub defect2_alt_factor: f64,
}

pub fn check_automorphy(
    u: Complex64,
    tau: Complex64,
    ch: ThetaCharacteristics,
    tol: f64,
) -> Result<AutomorphyDefects> {
    let t = theta(u, tau, ch, tol)?;
    let t1 = theta(u + 1.0, tau, ch, tol)?;
    let tt = theta(u + tau, tau, ch, tol)?;
    let alt = (-2.0 * I * PI * ch.epsilon - 2.0 * I * PI * u - 2.0 * I * PI * tau).exp();
    let a1 = (t1 - multiplier_one(ch) * t).norm();
    let a2 = (tt - multiplier_tau(u, tau, ch) * t).norm();
    let s1 = 1f64.max(t.norm()).max(t1.norm());
    let s2 = 1f64.max(t.norm()).max(tt.norm());
    Ok(AutomorphyDefects {
        defect1: a1 / s1,
        defect2: a2 / s2,
        abs_defect1: a1,
        abs_defect2: a2,
        defect2_alt_factor: (tt - alt * t).norm() / s2,
    })
}

/// Zero of `θ[0,0](·; τ)` in the fundamental cell, by Newton from `(1+τ)/2`.
pub fn locate_theta_zero(tau: Complex64) -> Result<Complex64> {
    check_tau(tau)?;
    let mut u = 0.5 * (1.0 + tau);
    for _ in 0..60 {
        let [f, df] = theta_derivs::<2>(u, tau, ThetaCharacteristics::ZERO, DEFAULT_TOL)?;
        if f.norm() < 1e-14 {
            return Ok(reduce_to_cell(u, tau));
        }
        let step = f / df;
        if !step.is_finite() {
            break;
        }
        u -= step;
        if step.norm() < 1e-16 * (1.0 + u.norm()) {
            break;
        }
    }
    let f = theta(u, tau, ThetaCharacteristics::ZERO, DEFAULT_TOL)?;
    if f.norm() < 1e-12 {
        Ok(reduce_to_cell(u, tau))
    } else {
        Err(Error::NewtonDiverged(format!("theta zero search stalled at u = {u}, |θ| = {:e}", f.norm())))
    }
}

/// Representative of `u` modulo `{1, τ}` with lattice coordinates in `[0, 1)`.
pub fn reduce_to_cell(u: Complex64, tau: Complex64) -> Complex64 {
    let (a, b) = lattice_coords(u, tau);
    u - a.floor() - b.floor() * tau
}

/// Real coordinates `(a, b)` with `u = a + b·τ`.
pub fn lattice_coords(u: Complex64, tau: Complex64) -> (f64, f64) {
    let b = u.im / tau.im;
    (u.re - b * tau.re, b)
}

/// Number of zeros of `θ[δ,ε]` inside the parallelogram with corner `corner`
/// and edges `1`, `τ`, by the argument principle.
pub fn count_zeros(tau: Complex64, ch: ThetaCharacteristics, corner: Complex64) -> Result<f64> {
    let verts = [corner, corner + 1.0, corner + 1.0 + tau, corner + tau, corner];
    let mut total = Complex64::new(0.0, 0.0);
    for w in verts.windows(2) {
        let (a, b) = (w[0], w[1]);
        total += quadrature::integrate(
            |s| {
                let [f, df] = theta_derivs::<2>(a + (b - a) * s, tau, ch, DEFAULT_TOL)?;
                Ok(df / f * (b - a))
            },
            0.0,
            1.0,
            1e-12,
        )?;
    }
    Ok((total / (2.0 * I * PI)).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Plain symmetric sum, N = 50, no window logic.
    fn brute(u: Complex64, tau: Complex64, ch: ThetaCharacteristics) -> Complex64 {
        (-50..=50)
            .map(|n| {
                let x = n as f64 + ch.delta;
                (I * PI * tau * x * x + 2.0 * I * PI * (u + ch.epsilon) * x).exp()
            })
            .sum()
    }

    #[test]
    fn jacobi_theta3_null_at_i() {
        let v = theta(c(0.0, 0.0), I, ThetaCharacteristics::ZERO, DEFAULT_TOL).unwrap();
        assert!((v - c(1.086_434_811_213_308, 0.0)).norm() < 1e-14);
        assert!((v - brute(c(0.0, 0.0), I, ThetaCharacteristics::ZERO)).norm() < 1e-15);
    }

    #[test]
    fn odd_null_vanishes() {
        let v = theta(c(0.0, 0.0), c(0.3, 1.1), ThetaCharacteristics::ODD, DEFAULT_TOL).unwrap();
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn invalid_modulus() {
        assert!(matches!(
            theta(c(0.0, 0.0), c(1.0, 0.0), ThetaCharacteristics::ZERO, 1e-12),
            Err(Error::InvalidModulus(_))
        ));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (u, tau, ch) = (c(0.2, 0.3), c(0.1, 0.9), ThetaCharacteristics::new(0.3, 0.1));
        let d = theta_derivs::<4>(u, tau, ch, DEFAULT_TOL).unwrap();
        let h = 1e-4;
        for k in 1..4 {
            let fp = theta_derivs::<4>(u + h, tau, ch, DEFAULT_TOL).unwrap()[k - 1];
            let fm = theta_derivs::<4>(u - h, tau, ch, DEFAULT_TOL).unwrap()[k - 1];
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - d[k]).norm() < 1e-6 * d[k].norm().max(1.0), "order {k}");
        }
    }

    #[test]
    fn multiplier_rederived_from_series() {
        // Term n of θ(u+τ) equals the multiplier times term n+1 of θ(u).
        let (u, tau, ch) = (c(0.31, -0.2), c(0.4, 1.3), ThetaCharacteristics::new(0.25, 1.0 / 3.0));
        let term = |n: i64, u: Complex64| {
            let x = n as f64 + ch.delta;
            (I * PI * tau * x * x + 2.0 * I * PI * (u + ch.epsilon) * x).exp()
        };
        for n in -3..3 {
            let lhs = term(n, u + tau);
            let rhs = multiplier_tau(u, tau, ch) * term(n + 1, u);
            assert!((lhs - rhs).norm() < 1e-13 * lhs.norm());
        }
    }

    #[test]
    fn alternative_factor_fails() {
        let d = check_automorphy(c(0.1, 0.2), I, ThetaCharacteristics::ZERO, DEFAULT_TOL).unwrap();
        assert!(d.defect2 < 1e-12);
        assert!(d.defect2_alt_factor > 1e-2);
    }

    #[test]
    fn automorphy_at_tau_2i() {
        let ch = ThetaCharacteristics::new(0.25, 1.0 / 3.0);
        for u in [c(0.13, 0.4), c(-0.7, -0.3), c(0.5, 1.2)] {
            let d = check_automorphy(u, c(0.0, 2.0), ch, DEFAULT_TOL).unwrap();
            assert!(d.defect1 < 1e-10 && d.defect2 < 1e-10);
            let t = theta(u, c(0.0, 2.0), ch, DEFAULT_TOL).unwrap();
            assert!((t - brute(u, c(0.0, 2.0), ch)).norm() < 1e-13 * t.norm().max(1.0));
        }
    }

    #[test]
    fn zero_at_half_periods() {
        let z = locate_theta_zero(I).unwrap();
        assert!((z - c(0.5, 0.5)).norm() < 1e-12);
        let tau = c(1.0, 2.0);
        let z = locate_theta_zero(tau).unwrap();
        assert!((z - reduce_to_cell(0.5 * (1.0 + tau), tau)).norm() < 1e-12);
    }

    #[test]
    fn one_zero_per_cell() {
        for tau in [I, c(1.0, 2.0), c(-0.3, 0.7)] {
            let n = count_zeros(tau, ThetaCharacteristics::ZERO, c(-0.1, 0.0) - 0.1 * tau).unwrap();
            assert!((n - 1.0).abs() < 1e-8, "{tau}: {n}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn automorphy_random(ur in -1.0..1.0f64, ui in -1.0..1.0f64, tr in -0.5..0.5f64,
                             ti in 0.3..3.0f64, d in -1.0..1.0f64, e in -1.0..1.0f64) {
            let ch = ThetaCharacteristics::new(d, e);
            let r = check_automorphy(c(ur, ui), c(tr, ti), ch, DEFAULT_TOL).unwrap();
            prop_assert!(r.defect1 < 1e-10 && r.defect2 < 1e-10);
        }

        #[test]
        fn reflection(ur in -1.0..1.0f64, ui in -1.0..1.0f64, ti in 0.3..3.0f64,
                      d in -1.0..1.0f64, e in -1.0..1.0f64) {
            let ch = ThetaCharacteristics::new(d, e);
            let tau = c(0.2, ti);
            let a = theta(c(-ur, -ui), tau, ch, DEFAULT_TOL).unwrap();
            let b = theta(c(ur, ui), tau, ch.negated(), DEFAULT_TOL).unwrap();
            prop_assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
        }

        #[test]
        fn shifted_argument_identity(ur in -1.0..1.0f64, ui in -0.5..0.5f64, ti in 0.5..2.0f64,
                                     d in -0.5..0.5f64, e in -0.5..0.5f64) {
            let (u, tau) = (c(ur, ui), c(-0.1, ti));
            let ch = ThetaCharacteristics::new(d, e);
            let lhs = theta(u, tau, ch, DEFAULT_TOL).unwrap();
            let pre = (I * PI * tau * d * d + 2.0 * I * PI * d * (u + e)).exp();
            let rhs = pre * theta(u + e + d * tau, tau, ThetaCharacteristics::ZERO, DEFAULT_TOL).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-11 * lhs.norm().max(1.0));
        }
    }
}
