//! Orthogonal spectral projections used by the damping diagnostics.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::norms::DEGENERATE_TOLERANCE;

/// Removes the x-average: every mode with `j = 0` is zeroed.
///
/// The result lies in the space of x-dependent fields on which the shear
/// operator acts.
pub fn remove_x_average(w: &SpectralField) -> SpectralField {
    let mut out = w.clone();
    let config = out.config().clone();
    for m in -(config.ny as i64) / 2..config.ny as i64 / 2 {
        out.set_coeff(0, m, Complex64::default())
            .expect("j = 0 column is always representable");
    }
    out
}

/// Keeps only the unit shear pair `span{cos y, sin y}`.
pub fn project_unit_shear(w: &SpectralField) -> SpectralField {
    let config = w.config().clone();
    let q = config.unit_y_mode();
    let mut out = SpectralField::zeros(&config);
    out.set_coeff(0, q, w.coeff(0, q)).expect("unit mode fits");
    out.set_coeff(0, -q, w.coeff(0, -q)).expect("unit mode fits");
    out
}

/// Keeps only `span{cos x, sin x}`, the modes `(+-1, 0)`.
///
/// Meaningful only on the square torus; errors with `WrongAspect` unless
/// `alpha = 1`.
pub fn project_unit_column(w: &SpectralField) -> Result<SpectralField> {
    let config = w.config().clone();
    if (config.alpha - 1.0).abs() > 1e-12 {
        return Err(Error::WrongAspect {
            required: 1.0,
            actual: config.alpha,
        });
    }
    let mut out = SpectralField::zeros(&config);
    out.set_coeff(1, 0, w.coeff(1, 0))?;
    out.set_coeff(-1, 0, w.coeff(-1, 0))?;
    Ok(out)
}

/// Keeps x-dependent modes with `|k|^2 <= lambda_cut`.
///
/// Requires the input to be x-mean-free already; errors with `NotInX` if the
/// `j = 0` column carries more than `DEGENERATE_TOLERANCE` of the largest
/// coefficient.
pub fn project_low_modes(w: &SpectralField, lambda_cut: f64) -> Result<SpectralField> {
    let config = w.config().clone();
    let scale = w.linf_coeff();
    let mut worst = 0.0f64;
    for m in -(config.ny as i64) / 2..config.ny as i64 / 2 {
        worst = worst.max(w.coeff(0, m).norm());
    }
    if worst > DEGENERATE_TOLERANCE * scale {
        return Err(Error::NotInX { magnitude: worst });
    }
    let mut out = SpectralField::zeros(&config);
    for (j, m, c) in w.iter_modes() {
        if j != 0 && config.k_sq(j, m) <= lambda_cut {
            out.set_coeff(j, m, c)?;
        }
    }
    Ok(out)
}
