//! Decay-rate estimation and discrete invariant residuals.

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::norms::x_norm;

/// Minimum number of in-window samples `fit_decay_rate` accepts.
pub const FIT_MIN_SAMPLES: usize = 10;

/// Result of a log-linear fit to a decaying scalar series.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecayFit {
    /// Fitted exponential rate: `value ~ C e^{-rate t}`.
    pub rate: f64,
    /// The `(t_lo, t_hi)` window the fit used.
    pub window: (f64, f64),
    /// Largest absolute misfit of `log(value)` against the fitted line.
    pub residual: f64,
    /// Provenance label for reports.
    pub series_id: String,
}

/// Least-squares fit of `log(value)` against `t` over the window, negated
/// into a decay rate. Samples outside `[t_lo, t_hi]` are ignored; the window
/// must hold at least [`FIT_MIN_SAMPLES`] samples, all strictly positive.
pub fn fit_decay_rate(
    series: &[(f64, f64)],
    window: (f64, f64),
    series_id: &str,
) -> Result<DecayFit> {
    let (t_lo, t_hi) = window;
    if !(t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi) {
        return Err(Error::InvalidConfig(format!(
            "fit window must satisfy t_lo < t_hi, got ({t_lo}, {t_hi})"
        )));
    }
    let mut samples = Vec::new();
    for &(t, value) in series {
        if t < t_lo || t > t_hi {
            continue;
        }
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::NonPositiveValue { t, value });
        }
        samples.push((t, value.ln()));
    }
    if samples.len() < FIT_MIN_SAMPLES {
        return Err(Error::WindowTooSmall {
            got: samples.len(),
            required: FIT_MIN_SAMPLES,
        });
    }
    let n = samples.len() as f64;
    let t_mean = samples.iter().map(|(t, _)| t).sum::<f64>() / n;
    let y_mean = samples.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(t, y) in &samples {
        num += (t - t_mean) * (y - y_mean);
        den += (t - t_mean) * (t - t_mean);
    }
    if den == 0.0 {
        return Err(Error::InvalidConfig(
            "fit window samples share a single time value".into(),
        ));
    }
    let slope = num / den;
    let intercept = y_mean - slope * t_mean;
    let residual = samples
        .iter()
        .map(|&(t, y)| (y - (intercept + slope * t)).abs())
        .fold(0.0, f64::max);
    Ok(DecayFit {
        rate: -slope,
        window,
        residual,
        series_id: series_id.to_string(),
    })
}

/// Worst per-step violation of the weighted-energy balance
/// `d/dt x_norm^2 = -2 nu grad_x_norm_sq`, checked with trapezoid quadrature
/// between consecutive track samples and normalized by the initial
/// `x_norm^2`. NaN tracks (states with energy strictly inside the unit
/// circle) surface as a `DegenerateMode` error.
pub fn energy_identity_residual(traj: &Trajectory, nu: f64) -> Result<f64> {
    let tracks = &traj.tracks;
    if tracks.len() < 2 {
        return Err(Error::WindowTooSmall {
            got: tracks.len(),
            required: 2,
        });
    }
    if tracks.x.iter().any(|x| x.is_nan()) || tracks.grad_x_sq.iter().any(|g| g.is_nan()) {
        return Err(degenerate_payload(traj));
    }
    let x0_sq = tracks.x[0] * tracks.x[0];
    if x0_sq == 0.0 {
        return Err(Error::InvalidConfig(
            "energy balance of an initially zero weighted norm is undefined".into(),
        ));
    }
    let mut worst = 0.0f64;
    for i in 0..tracks.len() - 1 {
        let h = tracks.t[i + 1] - tracks.t[i];
        let dx_sq = tracks.x[i + 1] * tracks.x[i + 1] - tracks.x[i] * tracks.x[i];
        let quad = 0.5 * h * (tracks.grad_x_sq[i] + tracks.grad_x_sq[i + 1]);
        worst = worst.max((dx_sq + 2.0 * nu * quad).abs());
    }
    Ok(worst / x0_sq)
}

/// Recovers a mode-level payload for the degeneracy by probing the stored
/// fields; falls back to a generic payload when only unsampled intermediate
/// states were degenerate.
fn degenerate_payload(traj: &Trajectory) -> Error {
    for state in &traj.states {
        if let Err(e @ Error::DegenerateMode { .. }) = x_norm(state) {
            return e;
        }
    }
    Error::DegenerateMode {
        j: 0,
        m: 0,
        k_sq: f64::NAN,
        magnitude: f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SpectralField;
    use crate::grid::TorusConfig;
    use crate::integrator::{integrate, StepperConfig};
    use crate::model::{ModelSpec, ModelVariant};
    use approx::assert_relative_eq;

    #[test]
    fn synthetic_exponential_is_fit_exactly() {
        let series: Vec<(f64, f64)> = (0..100)
            .map(|i| {
                let t = 0.25 * i as f64;
                (t, 3.0 * (-0.1 * t).exp())
            })
            .collect();
        let fit = fit_decay_rate(&series, (5.0, 20.0), "synthetic").unwrap();
        assert_relative_eq!(fit.rate, 0.1, epsilon = 1e-10);
        assert!(fit.residual < 1e-10, "residual {} too large", fit.residual);
        assert_eq!(fit.series_id, "synthetic");
    }

    #[test]
    fn fit_rejects_bad_windows_and_values() {
        let short: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 1.0)).collect();
        assert!(matches!(
            fit_decay_rate(&short, (0.0, 10.0), "s"),
            Err(Error::WindowTooSmall { got: 5, required: 10 })
        ));
        let negative: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, 1.0 - 0.1 * i as f64)).collect();
        assert!(matches!(
            fit_decay_rate(&negative, (0.0, 20.0), "s"),
            Err(Error::NonPositiveValue { .. })
        ));
        assert!(matches!(
            fit_decay_rate(&short, (3.0, 1.0), "s"),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn fit_ignores_samples_outside_window() {
        let mut series: Vec<(f64, f64)> = (0..50)
            .map(|i| {
                let t = i as f64;
                (t, (-0.3 * t).exp())
            })
            .collect();
        series.push((100.0, 1e6)); // far outside the window
        let fit = fit_decay_rate(&series, (10.0, 40.0), "windowed").unwrap();
        assert_relative_eq!(fit.rate, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn pure_diffusion_balances_energy_identity() {
        let g = TorusConfig::new(2.0, 16, 16).unwrap();
        let model = ModelSpec::new(ModelVariant::LinearizedKolmogorov, 0, 0.01).unwrap();
        let mut w = SpectralField::zeros(&g);
        w.add_sin(1, 2, 1.0).unwrap(); // |k|^2 = 8
        let cfg = StepperConfig::to(3.0).with_dt(0.03);
        let traj = integrate(&model, &w, &cfg).unwrap();
        let r = energy_identity_residual(&traj, 0.01).unwrap();
        assert!(r < 1e-8, "trapezoid balance residual {r:.3e} exceeds 1e-8");
    }

    #[test]
    fn degenerate_tracks_surface_as_error() {
        // beta = 1/2 puts the unit shear modes at |k|^2 = 1/4.
        let g = TorusConfig::with_beta(1.0, 0.5, 16, 16).unwrap();
        let model = ModelSpec::new(ModelVariant::NonlinearNs, 0, 0.01).unwrap();
        let mut w = SpectralField::zeros(&g);
        w.add_cos(0, 1, 1.0).unwrap();
        let traj = integrate(&model, &w, &StepperConfig::to(0.1).with_dt(0.05)).unwrap();
        assert!(matches!(
            energy_identity_residual(&traj, 0.01),
            Err(Error::DegenerateMode { .. })
        ));
    }
}
