//! Error type shared by all modules.

use thiserror::Error;

/// Everything that can go wrong while building or probing the discrete
/// generator.
#[derive(Debug, Error)]
pub enum Error {
    /// Model parameters outside the admissible ranges (`d >= 3`,
    /// `-d < gamma <= d-2`, `ell_b > 0`, weight parameters in range).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A kernel evaluation was requested on the diagonal `v = w`, where
    /// `k_gamma` is singular.
    #[error("kernel evaluated at zero separation (diagonal singularity)")]
    DiagonalSingularity,

    /// A `KernelPoint` violating the triangle constraint
    /// `||v|-|w|| <= |v-w| <= |v|+|w|`.
    #[error("infeasible kernel point: |v|={v_mag}, |w|={w_mag}, |v-w|={dist}")]
    InfeasiblePoint { v_mag: f64, w_mag: f64, dist: f64 },

    /// Doubling the quadrature order moved the value by more than the
    /// configured tolerance.
    #[error("quadrature for {what} did not converge: refinement moved the value by {defect:.3e} (tolerance {tol:.3e})")]
    QuadratureNonConvergence { what: String, defect: f64, tol: f64 },

    /// The radial grid is under-resolved: too few nodes requested, or the
    /// Maxwellian-mass check failed.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    /// A precondition of an operation was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Matrix assembly produced data inconsistent with the continuum
    /// identities it is supposed to reproduce.
    #[error("discretization inconsistent: {0}")]
    DiscretizationInconsistent(String),

    /// More than one eigenvalue within the zero-mode tolerance.
    #[error("degenerate zero eigenvalue: {count} eigenvalues within {tol:.1e} of 0")]
    DegenerateZero { count: usize, tol: f64 },

    /// The dissipativity inequality admits no feasible radius.
    #[error("no dissipativity radius up to r_max = {r_max}: margin {margin:.3e} > 0 at r = {at}")]
    Infeasible { r_max: f64, margin: f64, at: f64 },

    /// Resolvent requested at a point where the shifted matrix is singular.
    #[error("singular resolvent at alpha = {0}")]
    SingularResolvent(f64),

    /// Argument outside the attainable range of an inverse function.
    #[error("value {value:.6e} outside the attained range [{lo:.6e}, {hi:.6e}]")]
    RangeError { value: f64, lo: f64, hi: f64 },

    /// A trajectory lost mass beyond the conservation tolerance.
    #[error("mass drift {drift:.3e} exceeds tolerance {tol:.1e}")]
    MassDrift { drift: f64, tol: f64 },

    /// A trajectory developed negative components beyond the allowance.
    #[error("positivity violated at t = {t}: min component {min:.3e} below -{tol:.1e} * norm")]
    PositivityViolation { t: f64, min: f64, tol: f64 },

    /// Decay-fit window contains unusable data.
    #[error("fit window unusable: {0}")]
    WindowError(String),

    /// Serialization / deserialization problems.
    #[error("serialization: {0}")]
    Serialization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
