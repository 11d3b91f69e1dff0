//! Integral norms of spectral fields.
//!
//! All norms carry the domain area as Parseval weight, so `l2_norm` matches
//! `sqrt(integral of w^2)`. The weighted norms use the multiplier
//! `1 - 1/|k|^2` of the operator `1 + inv_lap`; they are defined only on
//! fields with no energy at `|k|^2 <= 1`, where the multiplier would vanish
//! or turn negative.

use crate::error::{Error, Result};
use crate::field::SpectralField;

/// Coefficients at degenerate wavenumbers must stay below this fraction of
/// the largest coefficient for the weighted norms to be defined.
pub const DEGENERATE_TOLERANCE: f64 = 1e-14;

/// Half-width of the band around `|k|^2 = 1` treated as degenerate.
const UNIT_BAND: f64 = 1e-9;

/// `sqrt(area * sum |c_k|^2)`, the L2 norm of the field.
pub fn l2_norm(w: &SpectralField) -> f64 {
    let area = w.config().area();
    let sum: f64 = w.iter_modes().map(|(_, _, c)| c.norm_sqr()).sum();
    (area * sum).sqrt()
}

/// `sqrt(area * sum (1 - 1/|k|^2) |c_k|^2)`.
///
/// Errors with `DegenerateMode` if any mode with `|k|^2 <= 1` carries more
/// than `DEGENERATE_TOLERANCE` of the largest coefficient.
pub fn x_norm(w: &SpectralField) -> Result<f64> {
    weighted_sum(w, |k_sq| 1.0 - 1.0 / k_sq).map(|s| (w.config().area() * s).sqrt())
}

/// `area * sum (|k|^2 - 1) |c_k|^2`, the dissipation functional paired with
/// `x_norm` in the energy identity.
pub fn grad_x_norm_sq(w: &SpectralField) -> Result<f64> {
    weighted_sum(w, |k_sq| k_sq - 1.0).map(|s| w.config().area() * s)
}

fn weighted_sum(w: &SpectralField, weight: impl Fn(f64) -> f64) -> Result<f64> {
    let config = w.config();
    let scale = w.linf_coeff();
    let mut sum = 0.0;
    for (j, m, c) in w.iter_modes() {
        if j == 0 && m == 0 {
            continue;
        }
        let k_sq = config.k_sq(j, m);
        if k_sq <= 1.0 + UNIT_BAND {
            if c.norm() > DEGENERATE_TOLERANCE * scale {
                return Err(Error::DegenerateMode {
                    j,
                    m,
                    k_sq,
                    magnitude: c.norm(),
                });
            }
            continue;
        }
        sum += weight(k_sq) * c.norm_sqr();
    }
    Ok(sum)
}
