//! Torus geometry and spectral grid layout.
//!
//! The domain is `[0, 2*pi/alpha) x [0, 2*pi/beta)` with physical wavenumbers
//! `(alpha*j, beta*m)` for integer lattice indices `(j, m)`. With the default
//! `beta = 1` the y-period is `2*pi`; smaller `beta` with `1/beta` an integer
//! extends the domain in y while keeping `sin y` and `cos y` on the lattice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RESOLUTION: usize = 128;
pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

/// Geometry plus spectral truncation for one rectangular torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusConfig {
    /// Aspect ratio of the x-direction; the x-period is `2*pi/alpha`.
    pub alpha: f64,
    /// y-direction scale; the y-period is `2*pi/beta` and `1/beta` is an integer.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Number of grid points (and retained lattice columns) in x.
    pub nx: usize,
    /// Number of grid points (and retained lattice rows) in y.
    pub ny: usize,
    /// Fraction of the Nyquist range kept by bilinear operations.
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
}

fn default_beta() -> f64 {
    1.0
}

fn default_dealias() -> f64 {
    DEFAULT_DEALIAS_FRACTION
}

impl TorusConfig {
    /// Square-ish torus with `beta = 1` and the default dealias fraction.
    pub fn new(alpha: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::with_beta(alpha, 1.0, nx, ny)
    }

    /// Default `128 x 128` grid for a given aspect ratio.
    pub fn default_grid(alpha: f64) -> Result<Self> {
        Self::new(alpha, DEFAULT_RESOLUTION, DEFAULT_RESOLUTION)
    }

    /// Torus with an extended y-period `2*pi/beta`.
    pub fn with_beta(alpha: f64, beta: f64, nx: usize, ny: usize) -> Result<Self> {
        let config = Self {
            alpha,
            beta,
            nx,
            ny,
            dealias_fraction: DEFAULT_DEALIAS_FRACTION,
        };
        config.validate()?;
        Ok(config)
    }

    /// Same geometry with a different dealias fraction.
    pub fn with_dealias(mut self, fraction: f64) -> Result<Self> {
        self.dealias_fraction = fraction;
        self.validate()?;
        Ok(self)
    }

    /// Checks positivity, parity, and the `1/beta` integrality requirement.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        let inv_beta = 1.0 / self.beta;
        if (inv_beta - inv_beta.round()).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "1/beta must be an integer, got 1/beta = {inv_beta}"
            )));
        }
        for (name, n) in [("nx", self.nx), ("ny", self.ny)] {
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be even and at least 4, got {n}"
                )));
            }
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "dealias fraction must lie in (0, 1], got {}",
                self.dealias_fraction
            )));
        }
        Ok(())
    }

    /// x-period `2*pi/alpha`.
    pub fn lx(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.alpha
    }

    /// y-period `2*pi/beta`.
    pub fn ly(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.beta
    }

    /// Domain area, the Parseval weight for integral norms.
    pub fn area(&self) -> f64 {
        self.lx() * self.ly()
    }

    /// Smaller grid spacing, used by CFL-style step control.
    pub fn h_min(&self) -> f64 {
        (self.lx() / self.nx as f64).min(self.ly() / self.ny as f64)
    }

    /// Lattice row of `sin y`: the integer `1/beta`.
    pub fn unit_y_mode(&self) -> i64 {
        (1.0 / self.beta).round() as i64
    }

    /// Physical wavenumber pair for lattice indices `(j, m)`.
    pub fn wavenumber(&self, j: i64, m: i64) -> (f64, f64) {
        (self.alpha * j as f64, self.beta * m as f64)
    }

    /// Squared physical wavenumber `(alpha*j)^2 + (beta*m)^2`.
    pub fn k_sq(&self, j: i64, m: i64) -> f64 {
        let (kx, ky) = self.wavenumber(j, m);
        kx * kx + ky * ky
    }

    /// Largest retained |j| under the dealias rule: the retained band of
    /// `2c + 1` modes fits strictly inside `fraction * nx`, so with the
    /// default 2/3 fraction `3c < nx` holds and products of two retained
    /// modes can never alias back into the box (the worst image lands at
    /// distance `nx - 2c > c` from zero).
    pub fn cutoff_x(&self) -> i64 {
        Self::cutoff(self.nx, self.dealias_fraction)
    }

    /// Largest retained |m| under the dealias rule; see `cutoff_x`.
    pub fn cutoff_y(&self) -> i64 {
        Self::cutoff(self.ny, self.dealias_fraction)
    }

    fn cutoff(n: usize, fraction: f64) -> i64 {
        (((n as f64 * fraction) - 1.0) / 2.0).floor() as i64
    }

    /// Whether `(j, m)` survives dealias truncation.
    pub fn in_dealias_box(&self, j: i64, m: i64) -> bool {
        j.abs() <= self.cutoff_x() && m.abs() <= self.cutoff_y()
    }

    /// Whether `(j, m)` is representable at all (inside the Nyquist box).
    pub fn in_nyquist_box(&self, j: i64, m: i64) -> bool {
        let (hx, hy) = (self.nx as i64 / 2, self.ny as i64 / 2);
        (-hx..hx).contains(&j) && (-hy..hy).contains(&m)
    }

    /// Storage row for lattice index `j` in FFT ordering.
    pub fn row(&self, j: i64) -> usize {
        debug_assert!(self.in_nyquist_box(j, 0));
        j.rem_euclid(self.nx as i64) as usize
    }

    /// Storage column for lattice index `m` in FFT ordering.
    pub fn col(&self, m: i64) -> usize {
        debug_assert!(self.in_nyquist_box(0, m));
        m.rem_euclid(self.ny as i64) as usize
    }

    /// Lattice index `j` for storage row `r`.
    pub fn j_of_row(&self, r: usize) -> i64 {
        let n = self.nx as i64;
        let r = r as i64;
        if r < n / 2 {
            r
        } else {
            r - n
        }
    }

    /// Lattice index `m` for storage column `c`.
    pub fn m_of_col(&self, c: usize) -> i64 {
        let n = self.ny as i64;
        let c = c as i64;
        if c < n / 2 {
            c
        } else {
            c - n
        }
    }

    /// Grid node coordinates `(x_p, y_q)`.
    pub fn node(&self, p: usize, q: usize) -> (f64, f64) {
        (
            self.lx() * p as f64 / self.nx as f64,
            self.ly() * q as f64 / self.ny as f64,
        )
    }

    /// Equality of geometry and truncation, the compatibility test for
    /// binary field operations.
    pub fn matches(&self, other: &Self) -> bool {
        self == other
    }

    /// Error unless `other` matches `self`.
    pub fn ensure_matches(&self, other: &Self) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::ConfigMismatch(format!(
                "({}x{}, alpha={}, beta={}, dealias={}) vs ({}x{}, alpha={}, beta={}, dealias={})",
                self.nx,
                self.ny,
                self.alpha,
                self.beta,
                self.dealias_fraction,
                other.nx,
                other.ny,
                other.alpha,
                other.beta,
                other.dealias_fraction
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_tiny_grids() {
        assert!(TorusConfig::new(1.0, 5, 8).is_err());
        assert!(TorusConfig::new(1.0, 2, 8).is_err());
        assert!(TorusConfig::new(1.0, 128, 127).is_err());
    }

    #[test]
    fn rejects_non_integer_inverse_beta() {
        assert!(TorusConfig::with_beta(1.0, 0.4, 16, 16).is_err());
        assert!(TorusConfig::with_beta(1.0, 0.5, 16, 16).is_ok());
        assert!(TorusConfig::with_beta(1.0, 1.5, 16, 16).is_err());
    }

    #[test]
    fn dealias_cutoff_clears_the_aliasing_band() {
        let g = TorusConfig::new(1.0, 128, 128).unwrap();
        assert_eq!(g.cutoff_x(), 42);
        // Products of retained modes alias to |k| >= nx - 2*cutoff > cutoff.
        assert!(g.nx as i64 - 2 * g.cutoff_x() > g.cutoff_x());
    }

    #[test]
    fn index_maps_round_trip() {
        let g = TorusConfig::new(2.0, 16, 8).unwrap();
        for j in -8..8i64 {
            assert_eq!(g.j_of_row(g.row(j)), j);
        }
        for m in -4..4i64 {
            assert_eq!(g.m_of_col(g.col(m)), m);
        }
    }

    #[test]
    fn extended_domain_keeps_unit_y_mode_on_lattice() {
        let g = TorusConfig::with_beta(0.75f64.sqrt(), 0.5, 128, 128).unwrap();
        assert_eq!(g.unit_y_mode(), 2);
        let (_, ky) = g.wavenumber(0, g.unit_y_mode());
        assert_eq!(ky, 1.0);
    }
}
