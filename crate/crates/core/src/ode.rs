//! Dormand–Prince 5(4) with PI step control for complex state vectors.

use crate::{Complex64, Error, Result};

type State<const N: usize> = [Complex64; N];

// Butcher tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step-control settings.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, h_min: 1e-14, max_steps: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

fn axpy<const N: usize>(y: &State<N>, terms: &[(f64, &State<N>)], h: f64) -> State<N> {
    let mut out = *y;
    for (a, k) in terms {
        for i in 0..N {
            out[i] += k[i] * (a * h);
        }
    }
    out
}

impl Dopri5 {
    /// Integrates `y' = f(t, y)` from `t0` to `t1` (real parameter).
    ///
    /// `locate(t)` only feeds error messages (e.g. the point in ℂ reached
    /// when a step underflows).
    pub fn solve<const N: usize, F>(
        &self,
        mut f: F,
        t0: f64,
        t1: f64,
        y0: State<N>,
        locate: impl Fn(f64) -> Complex64,
    ) -> Result<(State<N>, Stats)>
    where
        F: FnMut(f64, &State<N>) -> Result<State<N>>,
    {
        let mut stats = Stats::default();
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();
        if span == 0.0 {
            return Ok((y0, stats));
        }
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y)?;
        let mut h = (0.01 * span).min(span);
        let mut err_prev: f64 = 1e-4;
        for _ in 0..self.max_steps {
            if (t1 - t) * dir <= 0.0 {
                return Ok((y, stats));
            }
            if h > (t1 - t).abs() {
                h = (t1 - t).abs();
            }
            let hs = h * dir;
            let k2 = f(t + C2 * hs, &axpy(&y, &[(A21, &k1)], hs))?;
            let k3 = f(t + C3 * hs, &axpy(&y, &[(A31, &k1), (A32, &k2)], hs))?;
            let k4 = f(t + C4 * hs, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs))?;
            let k5 = f(t + C5 * hs, &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs))?;
            let k6 = f(
                t + hs,
                &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], hs),
            )?;
            let y_new = axpy(&y, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], hs);
            let k7 = f(t + hs, &y_new)?;
            let mut err = 0.0;
            for i in 0..N {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * hs;
                let sc = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
                err += (e.norm() / sc).powi(2);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                h *= 0.2;
                stats.rejected += 1;
            } else if err <= 1.0 {
                t += hs;
                y = y_new;
                k1 = k7;
                stats.accepted += 1;
                let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
                h *= fac.clamp(0.2, 5.0);
                err_prev = err.max(1e-4);
            } else {
                stats.rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
            if h < self.h_min * span.max(1.0) {
                return Err(Error::StepUnderflow(locate(t)));
            }
        }
        Err(Error::TolNotMet(format!("step budget of {} exhausted at t = {t}", self.max_steps)))
    }
}
