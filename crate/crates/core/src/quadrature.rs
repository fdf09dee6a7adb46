//! Adaptive Gauss–Kronrod and periodic trapezoidal rules for complex integrands.

use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

// Kronrod 15-point abscissae and weights (positive half, descending), with the
// embedded 7-point Gauss weights on the odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Single G7/K15 panel: returns (Kronrod estimate, |Kronrod − Gauss|).
fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(Complex64, f64)>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx)? + f(c + dx)?;
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    Ok((k * h, ((k - g) * h).norm()))
}

/// Adaptive Gauss–Kronrod integration of a complex-valued function over `[a, b]`.
///
/// Panels are bisected until the summed error estimate drops below
/// `max(tol, tol·|I|)`; fails with `NonConvergentQuadrature` after `max_panels`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Complex64>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    integrate_with_limit(&mut f, a, b, tol, 4000)
}

pub fn integrate_with_limit<F>(
    f: &mut F,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
) -> Result<Complex64>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let (v, e) = gk15(f, a, b)?;
    let mut panels = vec![(a, b, v, e)];
    loop {
        let total: Complex64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= tol.max(tol * total.norm()) {
            return Ok(total);
        }
        if panels.len() >= max_panels {
            return Err(Error::NonConvergentQuadrature { tol, estimate: err });
        }
        // bisect the worst panel
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (pa, pb, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            return Err(Error::NonConvergentQuadrature { tol, estimate: err });
        }
        let (v1, e1) = gk15(f, pa, mid)?;
        let (v2, e2) = gk15(f, mid, pb)?;
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
}

/// Trapezoidal rule for a 2π-periodic integrand with `n` equispaced nodes.
/// Converges geometrically for analytic integrands.
pub fn periodic_trapezoid<F>(mut f: F, n: usize) -> Result<Complex64>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..n {
        s += f(2.0 * PI * j as f64 / n as f64)?;
    }
    Ok(s * (2.0 * PI / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| Ok(Complex64::new(x.powi(5), 3.0 * x * x)), 0.0, 2.0, 1e-14).unwrap();
        assert!((v.re - 64.0 / 6.0).abs() < 1e-12);
        assert!((v.im - 8.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫_0^1 x^{-1/2} dx = 2
        let v = integrate(|x| Ok(Complex64::new(x.max(1e-300).powf(-0.5), 0.0)), 0.0, 1.0, 1e-9)
            .unwrap();
        assert!((v.re - 2.0).abs() < 1e-7);
    }

    #[test]
    fn trapezoid_geometric() {
        // ∫_0^{2π} e^{cos t} dt = 2π I0(1)
        let exact = 2.0 * PI * 1.266_065_877_752_008_4;
        let v = periodic_trapezoid(|t| Ok(Complex64::new(t.cos().exp(), 0.0)), 24).unwrap();
        assert!((v.re - exact).abs() < 1e-13);
    }
}
