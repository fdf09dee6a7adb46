//! Theta with characteristics and its two quasi-periodicity laws.

use orbifold_ymh::linalg::c;
use orbifold_ymh::theta::{check_automorphy, theta, ThetaCharacteristics, DEFAULT_TOL};

fn main() -> orbifold_ymh::Result<()> {
    let tau = c(0.1, 0.8);
    let ch = ThetaCharacteristics::new(0.21, 0.13);
    println!("{:>22} {:>28} {:>10} {:>10}", "u", "θ[δ,ε](u)", "defect 1", "defect τ");
    for k in 0..5 {
        let u = c(0.17 * k as f64, 0.0) + 0.2 * k as f64 * tau;
        let t = theta(u, tau, ch, DEFAULT_TOL)?;
        let d = check_automorphy(u, tau, ch, DEFAULT_TOL)?;
        println!("{u:>22.4} {t:>28.12} {:>10.1e} {:>10.1e}", d.defect1, d.defect2);
    }
    Ok(())
}
