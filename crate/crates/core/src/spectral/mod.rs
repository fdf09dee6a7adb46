//! Scalar magnetic Laplacian on the flat torus `(ℂ/{1,τ}, r|du|²)`.

pub mod eigen;
pub mod grid;
pub mod ground_state;
pub mod landau;
pub mod operator;
pub mod weitzenbock;

pub use eigen::{chfsi, lowest_eigenpairs, EigenOptions, Eigenpairs, HermitianOperator};
pub use grid::{TorusField, TorusGrid};
pub use ground_state::{check_explicit_ground_state, spectrum_report, GroundStateReport, SpectrumReport};
pub use landau::{landau_levels, lowest_level_state};
pub use operator::{assemble, LinkField, MagneticOperator};
pub use weitzenbock::weitzenbock_residual;
