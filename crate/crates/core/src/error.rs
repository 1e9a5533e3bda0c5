use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: i64, max: i64 },

    #[error("root polishing failed at E = {root} (residual {residual:e})")]
    RootFindingFailure { root: f64, residual: f64 },

    #[error("energy {energy} lies outside the periodic spectrum")]
    OutsideSpectrum { energy: f64 },

    #[error("density of states diverges at E = {energy} (band edge)")]
    EdgeSingularity { energy: f64 },

    #[error("phase function undefined at E = {energy}: s(E) vanishes")]
    DegenerateS { energy: f64 },

    #[error("E = {energy} is not a recorded band edge")]
    NotAnEdge { energy: f64 },

    #[error("eigenvector computation failed for eigenvalue index {index}")]
    ConvergenceFailure { index: usize },

    #[error("eigenvalue {energy} is within tolerance of two bands")]
    AmbiguousAssignment { energy: f64 },

    #[error("too few points: need {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("E = {energy} lies on the branch cut (-inf, -2] ∪ [2, inf)")]
    OnBranchCut { energy: f64 },

    #[error("E = {energy} hits the eigenvalue pole {pole}")]
    PoleHit { energy: Complex64, pole: f64 },

    #[error("Newton iteration did not converge: last iterate {last}, residual {residual:e}")]
    NoConvergence { last: Complex64, residual: f64 },

    #[error("phase tracking exceeded the adaptive depth near {at}")]
    AdaptiveDepthExceeded { at: Complex64 },

    #[error("contour side at Re E = {x} is too close to eigenvalue {lambda}")]
    EdgeTooCloseToEigenvalue { x: f64, lambda: f64 },

    #[error("edge at E = {energy} is not generic ({class})")]
    NonGenericEdge { energy: f64, class: String },

    #[error("box {n} contains {count} resonances, expected exactly one")]
    UniquenessFailed { n: usize, count: i64 },

    #[error("eigenvalue {lambda} lies inside the interval that must be eigenvalue-free")]
    EigenvalueInInterval { lambda: f64 },

    #[error("sampling region is empty: {0}")]
    EmptyRegion(String),

    #[error("degenerate regression data: {0}")]
    DegenerateData(String),

    #[error("lengths {0:?} do not share one residue modulo the period")]
    MixedResidues(Vec<usize>),

    #[error("out of domain: {0}")]
    OutOfDomain(String),
}

impl Error {
    /// Errors caused by bad input rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidPotential(_)
                | Error::InvalidArgument(_)
                | Error::IndexOutOfRange { .. }
                | Error::NotAnEdge { .. }
                | Error::OutOfDomain(_)
                | Error::MixedResidues(_)
        )
    }
}
