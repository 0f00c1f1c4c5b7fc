use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    QuadratureNotConverged { tol: f64, estimate: f64 },
    #[error("parameter outside the admissible domain: {0}")]
    DomainError(String),
    #[error("resonant radial mode l={l}: lambda is a Dirichlet eigenvalue")]
    ResonantMode { l: usize },
    #[error("points too close to the boundary: convergence ratio {ratio}, predicted order {predicted_order}")]
    PointsTooCloseToBoundary { ratio: f64, predicted_order: f64 },
    #[error("coincident points")]
    CoincidentPoints,
    #[error("point {0:?} lies outside the domain")]
    OutsideDomain([f64; 3]),
    #[error("series did not converge: {0}")]
    SeriesNotConverging(String),
    #[error("finite-difference step leaves the admissible range: {0}")]
    StepOutOfRange(String),
    #[error("duplicate concentration points {0} and {1}")]
    DuplicatePoints(usize, usize),
    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("circulant first row is not reflection symmetric (defect {defect:e})")]
    AsymmetricRow { defect: f64 },
    #[error("finite-difference stencil leaves the domain")]
    StencilLeavesDomain,
    #[error("no positive start: min sigma1 at lambda~0 is {min_sigma:e} (annulus inner radius below the empirical threshold)")]
    NoPositiveStart { min_sigma: f64 },
    #[error("radial grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("wrong regime: f_lambda(r) = {f:e} > 0")]
    WrongRegime { f: f64 },
    #[error("degenerate denominator {0:e}")]
    DegenerateDenominator(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("least-squares fit is ill conditioned: {0}")]
    FitIllConditioned(String),
}

pub type Result<T> = std::result::Result<T, Error>;
