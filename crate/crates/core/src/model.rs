//! Model variants: the nonlinear vorticity equation, its linearizations
//! around the basic shear, and the perturbed form.
//!
//! Every right-hand side splits as `diffusion + nonstiff` with diagonal
//! diffusion `-nu |k|^2` (zero for the inviscid variant) and a nonstiff part
//! assembled from three ingredients:
//!
//! * a shear term `-c(t) * sin y * dx (1 + inv_lap) w`,
//! * a self-advection term `-sigma * J(inv_lap(w), w)`,
//! * the stationary forcing `-nu * a * cos y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusConfig;
use crate::ops::{self, Tables};

/// Which evolution equation to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// Full vorticity equation with forcing `-nu a cos y`.
    NonlinearNs,
    /// Linearization around the decaying shear `-exp(-nu t) cos y`.
    LinearizedDecaying,
    /// Linearization around the stationary Kolmogorov flow `-a cos y`.
    LinearizedKolmogorov,
    /// Linearization around the combined shear `-(a + exp(-nu t)) cos y`.
    LinearizedCombined,
    /// Combined linearization plus `sigma` times the self-advection term.
    Perturbed { sigma: u8 },
    /// Inviscid linearization with frozen coefficient `a + 1`; the advective
    /// part carries no viscosity and the diffusion symbol is zero.
    LinearizedEuler,
}

impl ModelVariant {
    fn name(&self) -> &'static str {
        match self {
            ModelVariant::NonlinearNs => "nonlinear_ns",
            ModelVariant::LinearizedDecaying => "linearized_decaying",
            ModelVariant::LinearizedKolmogorov => "linearized_kolmogorov",
            ModelVariant::LinearizedCombined => "linearized_combined",
            ModelVariant::Perturbed { .. } => "perturbed",
            ModelVariant::LinearizedEuler => "linearized_euler",
        }
    }
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelVariant::Perturbed { sigma } => write!(f, "perturbed(sigma={sigma})"),
            _ => f.write_str(self.name()),
        }
    }
}

/// One concrete evolution problem: variant, forcing switch, viscosity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: ModelVariant,
    /// Basic-flow switch; 0 or 1 exactly.
    pub a: u8,
    /// Viscosity; must be positive (the inviscid variant simply ignores it).
    pub nu: f64,
}

impl ModelSpec {
    pub fn new(variant: ModelVariant, a: u8, nu: f64) -> Result<Self> {
        let spec = ModelSpec { variant, a, nu };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a > 1 {
            return Err(Error::InvalidConfig(format!(
                "a must be 0 or 1, got {}",
                self.a
            )));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "nu must be positive, got {}",
                self.nu
            )));
        }
        if let ModelVariant::Perturbed { sigma } = self.variant {
            if sigma > 1 {
                return Err(Error::InvalidConfig(format!(
                    "sigma must be 0 or 1, got {sigma}"
                )));
            }
        }
        Ok(())
    }

    /// Per-mode diffusion rate `-nu |k|^2`; identically zero for the
    /// inviscid variant.
    pub fn diffusion_symbol(&self, config: &TorusConfig) -> Vec<f64> {
        let tables = Tables::new(config);
        if matches!(self.variant, ModelVariant::LinearizedEuler) {
            return vec![0.0; tables.k_sq.len()];
        }
        tables.k_sq.iter().map(|k| -self.nu * k).collect()
    }

    /// Time-dependent coefficient of the shear term.
    pub fn shear_coefficient(&self, t: f64) -> f64 {
        let a = self.a as f64;
        match self.variant {
            ModelVariant::NonlinearNs => 0.0,
            ModelVariant::LinearizedDecaying => (-self.nu * t).exp(),
            ModelVariant::LinearizedKolmogorov => a,
            ModelVariant::LinearizedCombined | ModelVariant::Perturbed { .. } => {
                a + (-self.nu * t).exp()
            }
            ModelVariant::LinearizedEuler => a + 1.0,
        }
    }

    /// Coefficient of the self-advection Jacobian.
    pub fn advection_coefficient(&self) -> f64 {
        match self.variant {
            ModelVariant::NonlinearNs => 1.0,
            ModelVariant::Perturbed { sigma } => sigma as f64,
            _ => 0.0,
        }
    }

    /// Amplitude `nu * a` of the forcing `-nu a cos y`.
    pub fn forcing_amplitude(&self) -> f64 {
        match self.variant {
            ModelVariant::NonlinearNs => self.nu * self.a as f64,
            _ => 0.0,
        }
    }

    /// Speed scale of the underlying basic flow at `t = 0`, used by the
    /// CFL-style step control.
    pub fn basic_speed(&self) -> f64 {
        let a = self.a as f64;
        match self.variant {
            ModelVariant::NonlinearNs | ModelVariant::LinearizedKolmogorov => a,
            ModelVariant::LinearizedDecaying => 1.0,
            ModelVariant::LinearizedCombined
            | ModelVariant::Perturbed { .. }
            | ModelVariant::LinearizedEuler => a + 1.0,
        }
    }

    /// Nonstiff part of the right-hand side at time `t`.
    pub fn nonstiff_rhs(&self, t: f64, w: &SpectralField) -> Result<SpectralField> {
        self.validate()?;
        let config = w.config().clone();
        let mut out = SpectralField::zeros(&config);

        let c_shear = self.shear_coefficient(t);
        if c_shear != 0.0 {
            let mut shear = ops::mult_sin_y_dx_oneplus(w);
            shear.scale(-c_shear);
            out.axpy(1.0, &shear)?;
        }
        let c_adv = self.advection_coefficient();
        if c_adv != 0.0 {
            let jac = ops::jacobian(&ops::inv_laplacian(w), w)?;
            out.axpy(-c_adv, &jac)?;
        }
        let f = self.forcing_amplitude();
        if f != 0.0 {
            out.add_cos(0, config.unit_y_mode(), -f)?;
        }
        Ok(out)
    }
}
