//! Abrikosov constant, κ_c and the branch leaving the normal state.

use orbifold_ymh::bifurcation::{kappa_c, lyapunov_schmidt_solve, null_space, SolveOptions};
use orbifold_ymh::linalg::c;
use orbifold_ymh::spectral::EigenOptions;

fn main() -> orbifold_ymh::Result<()> {
    let ns = null_space(32, c(0.0, 1.0), 2, 40, &EigenOptions::default())?;
    let kc = kappa_c(ns.beta)?;
    println!("β = {:.8}, κ_c = {kc:.8}, λ0 = {:.8}, harmonic forms: {}", ns.beta, ns.lambda0, ns.omega_dim);
    let kappa = 3.6;
    let r0 = ns.lambda0.sqrt() / kappa;
    println!("{:>10} {:>12} {:>14} {:>10}", "r", "detuning", "amplitude", "residual");
    for k in -3..=3 {
        let r = r0 * (1.0 + 2e-3 * k as f64);
        match lyapunov_schmidt_solve(&ns, kappa, r, &SolveOptions::default()) {
            Ok(bp) => println!("{r:>10.6} {:>12.3e} {:>14.8e} {:>10.1e}", bp.detuning, bp.amplitude, bp.residual),
            Err(e) => println!("{r:>10.6} {e}"),
        }
    }
    Ok(())
}
