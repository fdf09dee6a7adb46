//! Period lattice of a cubic and the images of the half periods.

use orbifold_ymh::elliptic::{BranchPoints, EllipticCurve};
use orbifold_ymh::linalg::c;

fn main() -> orbifold_ymh::Result<()> {
    for bp in [BranchPoints::lemniscatic(), BranchPoints::new(c(-0.7, 0.2), c(0.1, -0.3), c(1.1, 0.4))?] {
        let curve = EllipticCurve::new(bp, None, 1e-13)?;
        println!("branch points {:.3} {:.3} {:.3}", bp.z1, bp.z2, bp.z3);
        println!("  ω1 = {:.12}  ω2 = {:.12}  τ = {:.12}", curve.lat.omega1, curve.lat.omega2, curve.lat.tau);
        for (u, z) in curve.half_periods() {
            let image = curve.covering_map(u)?;
            println!("  z({u:.4}) = {image:.12}   |error| = {:.1e}", (image - z).norm());
        }
    }
    Ok(())
}
