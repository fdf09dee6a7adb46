//! Evaluates the explicit fundamental solution and checks `Y₋ = Y₊J` on the cuts.

use orbifold_ymh::elliptic::{EllipticCurve, Sheet};
use orbifold_ymh::linalg::{self, c};
use orbifold_ymh::rh::ExplicitSolution;
use orbifold_ymh::theta::ThetaCharacteristics;

fn main() -> orbifold_ymh::Result<()> {
    let sol = ExplicitSolution::new(EllipticCurve::lemniscatic()?, ThetaCharacteristics::new(0.21, 0.13))?;
    let z = c(0.4, 0.9);
    let y = sol.eval_y(z, Sheet::One)?;
    println!("Y({z}) =\n{y:.8}");
    println!("det Y = {:.3e}", linalg::det(&y));
    let rep = sol.verify_jump(&sol.cut_points(20))?;
    println!("jump defect over {} cut points: {:.2e}", rep.points, rep.max_defect);
    for r in sol.extract_residues(64)? {
        let (a, b) = linalg::eigenvalues(&r);
        println!("residue eigenvalues {a:.10} {b:.10}");
    }
    Ok(())
}
