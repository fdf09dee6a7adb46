//! Monodromy of the Fuchsian system read off the explicit solution,
//! integrated independently around the four standard loops.

use orbifold_ymh::elliptic::EllipticCurve;
use orbifold_ymh::fuchsian::{check_nonparabolic_form, monodromy_generators, standard_loops};
use orbifold_ymh::rh::ExplicitSolution;
use orbifold_ymh::theta::ThetaCharacteristics;

fn main() -> orbifold_ymh::Result<()> {
    let sol = ExplicitSolution::new(EllipticCurve::lemniscatic()?, ThetaCharacteristics::new(0.21, 0.13))?;
    let sys = sol.fuchsian_system(64)?;
    let base = sol.curve.z0;
    let loops = standard_loops(&sys, base, 48)?;
    let rep = monodromy_generators(&sys, base, &loops, 1e-12)?;
    for (i, r) in rep.rho.iter().enumerate() {
        println!("ρ{} =\n{r:.8}", i + 1);
    }
    println!("{:#?}", rep.diagnostics);
    println!("{:#?}", check_nonparabolic_form(&rep));
    Ok(())
}
