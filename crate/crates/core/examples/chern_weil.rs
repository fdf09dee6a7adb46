//! Degrees: Fubini–Study, the flat orbifold bundle and its twist.

use orbifold_ymh::connection::{chern_weil, flat_orbifold_degree, flux_constant, fs_curvature_density, Domain, ParabolicData, ScalarConnection};
use orbifold_ymh::elliptic::{EllipticCurve, MetricScale};
use orbifold_ymh::rh::ExplicitSolution;
use orbifold_ymh::theta::ThetaCharacteristics;

fn main() -> orbifold_ymh::Result<()> {
    let fs = chern_weil(fs_curvature_density, Domain::Sphere, 1e-10)?;
    let fd = ScalarConnection::fubini_study().chern_weil_fd(1e-4, 1e-8)?;
    println!("Fubini–Study degree: analytic density {fs:.12}, finite differences {fd:.12}");

    let sol = ExplicitSolution::new(EllipticCurve::lemniscatic()?, ThetaCharacteristics::new(0.21, 0.13))?;
    let res = sol.extract_residues(64)?;
    let flat = flat_orbifold_degree(&res, &sol.curve.bp.as_array(), 1e-10)?;
    println!("flat orbifold: smooth part {:.2e}, weights {:.2e}, par deg {:.2e}", flat.smooth, flat.weights, flat.par_degree);
    println!("twisted par deg = {}", ParabolicData::twisted().par_degree());
    let line = sol.line_subbundle_residues()?;
    println!("line subbundle residues {:?}, degree {:.6}", line.residues, line.degree);

    let metric = MetricScale::new(&sol.curve.lat, 1.0)?;
    let flux = flux_constant(&ParabolicData::twisted(), &metric)?;
    println!("b = {:.12} (4π = {:.12})", flux.b, 4.0 * std::f64::consts::PI);
    Ok(())
}
