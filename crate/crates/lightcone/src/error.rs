use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Gamma has a pole at {0}")]
    PoleOfGamma(Complex64),
    #[error("Gamma ratio is singular (uncancelled pole)")]
    UncancelledPole,
    #[error("no convergent representation: {0}")]
    NonConvergent(String),
    #[error("integer degeneracy: distance {distance:.3e} from an integer is below {margin:.1e}")]
    IntegerDegeneracy { distance: f64, margin: f64 },
    #[error("invalid hypergeometric parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("Frobenius series does not reach tail tolerance at radius {radius}")]
    RadiusTooSmall { radius: f64 },
    #[error("step size collapsed to {step:.3e} at theta = {theta}")]
    StiffnessFailure { theta: f64, step: f64 },
    #[error("connection fit is ill-conditioned (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },
    #[error("resolvent pole: singular coefficient {value:.3e} vanishes")]
    ResolventPole { value: f64 },
    #[error("global pole: linear system is singular (pivot {pivot:.3e})")]
    GlobalPole { pivot: f64 },
    #[error("operation requires the exact profile")]
    ExactOnly,
    #[error("finite-difference convergence order {order:.2} is too low")]
    StepTooCoarse { order: f64 },
    #[error("contour passes through a zero near {0}")]
    ContourThroughZero(Complex64),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
