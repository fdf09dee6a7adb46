//! Numerical realisation of the rank-2 Yang–Mills–Higgs bifurcation picture on
//! the Riemann sphere with four conical points.
//!
//! The crate is organised bottom-up:
//!
//! * [`elliptic`] — the elliptic double cover `y² = (z−z1)(z−z2)(z−z3)`, its
//!   period lattice, Abel map and the Weierstrass covering map.
//! * [`theta`] — Riemann theta with real characteristics.
//! * [`fuchsian`] — an independent oracle: adaptive integration of rank-2
//!   Fuchsian systems, monodromy and residue extraction.
//! * [`rh`] — the explicit theta-quotient fundamental solution and its
//!   jump / monodromy diagnostics.
//! * [`connection`] — Fubini–Study twisting, parabolic degree, Chern–Weil and
//!   flux constants.
//! * [`spectral`] — magnetic Laplacian on the flat torus.
//! * [`bifurcation`] — Abrikosov constant, critical κ and the
//!   Lyapunov–Schmidt branch solver.
//! * [`harness`] — config, artifacts and the verification battery used by the
//!   `orbifold` binary.

pub mod bifurcation;
pub mod checks;
pub mod config;
pub mod connection;
pub mod elliptic;
mod error;
pub mod fuchsian;
pub mod harness;
pub mod linalg;
pub mod ode;
pub mod quadrature;
pub mod rh;
pub mod spectral;
pub mod theta;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Fixed-size complex 2×2 matrix used for Fuchsian residues and fundamental solutions.
pub type Mat2 = nalgebra::Matrix2<Complex64>;

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
