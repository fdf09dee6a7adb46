use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid branch points: {0}")]
    InvalidBranchPoints(String),
    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    NonConvergentQuadrature { tol: f64, estimate: f64 },
    #[error("degenerate period lattice: Im tau = {0:e}")]
    DegenerateLattice(f64),
    #[error("path passes within {distance:e} of branch point {point}")]
    PathThroughSingularity { point: Complex64, distance: f64 },
    #[error("invalid modulus: Im tau = {0} must be positive")]
    InvalidModulus(f64),
    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),
    #[error("step size underflow near z = {0}")]
    StepUnderflow(Complex64),
    #[error("integration tolerance not met: {0}")]
    TolNotMet(String),
    #[error("fundamental matrix is singular at z = {0}")]
    SingularSolutionMatrix(Complex64),
    #[error("point {0} lies on the cut set")]
    OnCut(Complex64),
    #[error("theta denominator vanishes at argument {0}")]
    ThetaDenominatorZero(Complex64),
    #[error("theta characteristic null vanishes; characteristics excluded")]
    CharacteristicNullZero,
    #[error("column {column} is not a monodromy eigenvector (leakage {leakage:e})")]
    NotEigenvector { column: usize, leakage: f64 },
    #[error("flux must be an integer number of quanta, got {0}")]
    FluxNotInteger(f64),
    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),
    #[error("sampling too close to a cone point at u = {0}")]
    SamplingNearSingularity(Complex64),
    #[error("beta = {0} is below 1")]
    BetaBelowOne(f64),
    #[error("field does not belong to flux sector {expected}")]
    FluxSectorMismatch { expected: i64 },
    #[error("no bifurcating branch: detuning {detuning:e} and quartic coefficient {quartic:e} have opposite signs")]
    NoBifurcation { detuning: f64, quartic: f64 },
    #[error("unsupported lattice: {0}")]
    UnsupportedLattice(String),
    #[error("invalid configuration at `{path}`: {message}")]
    ConfigInvalid { path: String, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
