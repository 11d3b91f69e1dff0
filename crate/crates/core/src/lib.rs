//! Pseudo-spectral solver and verification toolkit for two-dimensional
//! Kolmogorov flow on the flat torus `[0, 2*pi/alpha) x [0, 2*pi/beta)`.
//!
//! The vorticity equation `dw/dt = -J(inv_lap(w), w) + nu*lap(w) - nu*a*cos y`
//! and several of its linearizations around the basic shear `-a cos y -
//! exp(-nu t) cos y` are integrated with an integrating-factor RK4 scheme on
//! a dealiased Fourier grid. Closed-form decaying solutions serve as exact
//! references, and damping experiments measure how fast x-dependent
//! perturbations die compared to the bare diffusive rate.

pub mod diagnostics;
pub mod error;
pub mod exact;
pub mod experiments;
mod fft;
pub mod field;
pub mod grid;
pub mod integrator;
pub mod model;
pub mod norms;
pub mod ops;
pub mod project;

pub use error::{Error, Result};
pub use field::{PhysicalField, SpectralField};
pub use grid::TorusConfig;
pub use model::{ModelSpec, ModelVariant};
