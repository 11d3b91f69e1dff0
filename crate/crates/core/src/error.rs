//! Error type shared by all solver and diagnostics operations.

use thiserror::Error;

/// Errors raised by grid construction, spectral operations, integration,
/// and diagnostics.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter fails a structural requirement (grid size, dt, a-value).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Two fields built on different torus configurations were combined.
    #[error("incompatible grids: {0}")]
    ConfigMismatch(String),

    /// A physical field carries a mean beyond tolerance in strict mode.
    #[error("field mean {mean:.3e} exceeds {tol:.1e} of field magnitude")]
    MeanNotZero { mean: f64, tol: f64 },

    /// A weighted norm was requested on a field with energy at |k|^2 <= 1,
    /// where the weight 1 - 1/|k|^2 vanishes or turns negative.
    #[error("mode ({j},{m}) with |k|^2 = {k_sq:.6} carries |c| = {magnitude:.3e}; weighted norm undefined")]
    DegenerateMode {
        j: i64,
        m: i64,
        k_sq: f64,
        magnitude: f64,
    },

    /// A projection restricted to x-dependent modes received a field with
    /// energy in the x-average.
    #[error("x-averaged modes carry |c| = {magnitude:.3e}, field is not x-mean-free")]
    NotInX { magnitude: f64 },

    /// An operation requiring a specific aspect ratio received another.
    #[error("operation requires alpha = {required}, grid has alpha = {actual}")]
    WrongAspect { required: f64, actual: f64 },

    /// A sweep requires aspect ratio strictly above one.
    #[error("sweep requires alpha > 1, got alpha = {actual}")]
    AspectTooSmall { actual: f64 },

    /// The state stopped being finite during time integration.
    #[error("non-finite state at t = {t:.6}")]
    NonFinite { t: f64 },

    /// An exact solution cannot be represented on the requested grid.
    #[error("incompatible domain: {0}")]
    IncompatibleDomain(String),

    /// A resonance condition between mode indices fails.
    #[error("resonance violated: {0}")]
    ResonanceViolated(String),

    /// A log-linear fit window contains a value that is zero or negative.
    #[error("non-positive value {value:.3e} at t = {t:.6} in fit window")]
    NonPositiveValue { t: f64, value: f64 },

    /// A fit or average window holds fewer samples than required.
    #[error("window holds {got} samples, {required} required")]
    WindowTooSmall { got: usize, required: usize },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
