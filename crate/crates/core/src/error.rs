use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("negative potential {value} at node {index}")]
    NegativePotential { index: usize, value: f64 },
    #[error("potential has no gradient data (x.grad V is required)")]
    MissingGradient,
    #[error("coulomb potential {value} at node {index} is below the roundoff floor")]
    NegativeCoulomb { index: usize, value: f64 },
    #[error(
        "conjugate gradients stalled after {iterations} iterations \
         (relative residual {residual:.3e}, spectrum estimate [{lambda_min:.3e}, {lambda_max:.3e}])"
    )]
    LinearSolve {
        iterations: usize,
        residual: f64,
        lambda_min: f64,
        lambda_max: f64,
    },
    #[error(
        "line search exhausted at residual {residual:.3e}: \
         <I'(u),u-A(u)> = {derivative:.6e} vs |u-A(u)|^2 = {gap_sq:.6e}"
    )]
    LineSearch {
        residual: f64,
        derivative: f64,
        gap_sq: f64,
    },
    #[error("energy {energy:.3e} fell below the divergence floor {floor:.3e}")]
    EnergyFloor { energy: f64, floor: f64 },
    #[error("u is already a fixed point of A")]
    FixedPoint,
    #[error("obstacle projection did not converge: distance in [{lower:.6e}, {upper:.6e}]")]
    Projection { lower: f64, upper: f64 },
    #[error("no admissible maximum along {0}")]
    NoMaximum(&'static str),
    #[error("every lattice sample was absorbed into the cone neighborhoods")]
    AllAbsorbed,
    #[error("seeds rejected: {0}")]
    InvalidSeeds(String),
    #[error("scaled supports exceed grid capacity at R = {0}")]
    BoxCapacity(f64),
    #[error("empty sample list")]
    EmptySamples,
    #[error("malformed field dump at byte {offset}: {reason}")]
    Dump { offset: u64, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<R, E = Error> = std::result::Result<R, E>;
