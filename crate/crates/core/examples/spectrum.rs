//! Lowest eigenvalues of the flux-2 magnetic Laplacian on the square torus.

use orbifold_ymh::linalg::c;
use orbifold_ymh::spectral::{assemble, lowest_level_state, spectrum_report, weitzenbock_residual, EigenOptions, TorusGrid};

fn main() -> orbifold_ymh::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(64);
    let grid = TorusGrid::new(n, c(0.0, 1.0), 1.0)?;
    let (rep, _) = spectrum_report(&grid, 2, 8, &EigenOptions::default())?;
    println!("N = {n}, b_r = {:.8}", rep.b_r);
    for (l, r) in rep.eigenvalues.iter().zip(&rep.residuals) {
        println!("  λ = {l:.8}  λ/b_r = {:.6}  residual {r:.1e}", l / rep.b_r);
    }
    println!("lowest multiplicity {}, parity-even {}", rep.multiplicity, rep.iota_even);
    let op = assemble(&grid, 2.0)?;
    let psi = lowest_level_state(grid, 2, 0)?;
    println!("Weitzenböck residual on a lowest-level state: {:.3e}", weitzenbock_residual(&op, &psi)?);
    Ok(())
}
