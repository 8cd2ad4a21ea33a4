use thiserror::Error;

/// Errors raised by model construction, geometry, sampling and verification.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be >= 2, got {0}")]
    InvalidDimension(usize),
    #[error("alpha must lie in the open interval (0, 2), got {0}")]
    InvalidAlpha(f64),
    #[error("spectral density out of bounds: {0}")]
    SpectralBound(String),
    #[error("alpha = 1 requires a centered spherical density: |∫ ξ η(dξ)| = {norm:.3e} exceeds {tol:.3e}")]
    CenteringViolated { norm: f64, tol: f64 },
    #[error("drift gamma must be zero unless alpha = 1")]
    DriftOutsideAlphaOne,
    #[error("operation requires a truncated-stable kind, got {0}")]
    NotTruncated(&'static str),
    #[error("diffusion matrix must be symmetric")]
    NonSymmetricDiffusion,
    #[error("diffusion matrix must be positive semidefinite (eigenvalue {0:.3e} < 0)")]
    IndefiniteDiffusion(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Levy density is undefined at x = 0")]
    DensityAtOrigin,
    #[error("quadrature did not converge: achieved tolerance {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("start point lies outside the domain")]
    StartOutsideDomain,
    #[error("censoring floor {target:.1e} unreachable within resource cap (achieved {achieved:.3e})")]
    CensoringFloorUnreachable { target: f64, achieved: f64 },
    #[error("resource cap exceeded during {stage}")]
    ResourceCapExceeded { stage: &'static str },
    #[error("kappa_fat must lie in (0, 1/2], got {0}")]
    KappaFatRange(f64),
    #[error("A4(a) ball closure B(x0, 2 r0) is not contained in the domain")]
    InnerBallNotContained,
    #[error("A4(b) requires a passing fat certificate")]
    FatCertificateRequired,
    #[error("A4(b) with a truncated model requires R <= R0/2 = {max:.3}, got R = {got:.3}")]
    FatRadiusTooLarge { got: f64, max: f64 },
    #[error("inner set B0 is empty")]
    EmptyInnerSet,
    #[error("degenerate grid resolution: only {cells} cell(s) fit (need >= 10)")]
    DegenerateResolution { cells: usize },
    #[error("operation requires matrices on the same grid")]
    GridMismatch,
    #[error("time mismatch: {0}")]
    TimeMismatch(String),
    #[error(
        "transition matrix is not strictly positive after {tried} burn-in powers; \
         for truncated kinds this signals a domain that is not roughly connected"
    )]
    NonPositiveMatrix { tried: usize },
    #[error("power iteration did not converge within {max_iter} iterations (residual {residual:.3e})")]
    PowerIterationDiverged { max_iter: usize, residual: f64 },
    #[error("no killing observed: top eigenvalue is not below 1, lambda0 would not be negative")]
    NoKilling,
    #[error("h-transform requires strictly positive h (entry {index} is {value:.3e})")]
    NonPositiveH { index: usize, value: f64 },
    #[error("h-transformed chain has spectral radius {rho:.6} >= 1: inconsistent normalization")]
    UnstableTransform { rho: f64 },
    #[error("linear solve failed: matrix is singular at pivot {0}")]
    SingularMatrix(usize),
    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
