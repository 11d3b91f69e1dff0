//! Integrating-factor RK4 time stepping.
//!
//! The diagonal diffusion `-nu |k|^2` is applied through exact exponential
//! factors, so pure decay is reproduced to roundoff regardless of step size;
//! the classical RK4 stages act on the nonstiff remainder, with
//! time-dependent coefficients evaluated at the stage times.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusConfig;
use crate::model::ModelSpec;
use crate::norms::DEGENERATE_TOLERANCE;
use crate::ops::{Engine, ShearOp, Tables};

/// Step size, horizon, and sampling control for one integration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepperConfig {
    /// Time step; the final step is shortened to land exactly on `t_end`.
    pub dt: f64,
    /// Integration horizon.
    pub t_end: f64,
    /// Stride, in steps, between stored full fields. Scalar tracks are
    /// recorded at every step regardless; the initial and final fields are
    /// always stored.
    pub sample_every: usize,
    /// Safety factor of the CFL-style step bound used by `choose_dt`.
    pub cfl_safety: f64,
}

impl StepperConfig {
    /// Default step `0.01` up to `t_end`, storing endpoint fields only.
    pub fn to(t_end: f64) -> Self {
        StepperConfig {
            dt: 0.01,
            t_end,
            sample_every: usize::MAX,
            cfl_safety: 0.5,
        }
    }

    /// Same schedule with a different field-storage stride.
    pub fn sampling(mut self, every: usize) -> Self {
        self.sample_every = every;
        self
    }

    /// Same schedule with a different step.
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(Error::InvalidConfig(format!(
                "t_end must be at least dt, got t_end = {} with dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidConfig("sample_every must be positive".into()));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        Ok(())
    }

    /// Number of steps a run takes: `ceil(t_end / dt)` up to roundoff slack,
    /// with the last step shortened to land on `t_end` exactly.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt - 1e-9).ceil() as usize).max(1)
    }
}

/// Scalar diagnostics recorded at every step boundary.
///
/// `x` holds the weighted norm of the state when defined; on states with
/// energy strictly inside the unit circle `|k|^2 < 1` the weighted forms are
/// undefined and recorded as NaN. Modes exactly on the unit circle carry zero
/// weight and drop out of both forms.
#[derive(Debug, Clone, Default)]
pub struct ScalarTracks {
    pub t: Vec<f64>,
    pub l2: Vec<f64>,
    pub x: Vec<f64>,
    pub grad_x_sq: Vec<f64>,
}

impl ScalarTracks {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Appends the diagnostics row of `w` at time `t`, with the same
    /// semantics as the rows recorded by [`integrate`].
    pub fn record(&mut self, t: f64, w: &SpectralField) {
        let config = w.config();
        let ny = config.ny;
        let (l2, x, grad_x_sq) = scalar_row(
            config.area(),
            |i| config.k_sq(config.j_of_row(i / ny), config.m_of_col(i % ny)),
            w.raw(),
        );
        self.t.push(t);
        self.l2.push(l2);
        self.x.push(x);
        self.grad_x_sq.push(grad_x_sq);
    }
}

/// Result of one integration: sampled fields plus per-step scalar tracks.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub model: ModelSpec,
    /// Times of the stored fields, strictly increasing.
    pub times: Vec<f64>,
    /// Stored fields, aligned with `times`.
    pub states: Vec<SpectralField>,
    pub tracks: ScalarTracks,
}

impl Trajectory {
    pub fn final_state(&self) -> &SpectralField {
        self.states.last().expect("trajectory stores the final state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory stores the final time")
    }
}

/// Nonstiff right-hand-side evaluator with its own scratch storage.
struct RhsOp {
    model: ModelSpec,
    shear: ShearOp,
    engine: Option<Engine>,
    jac_buf: Vec<Complex64>,
    forcing: Option<(usize, usize, f64)>,
}

impl RhsOp {
    fn new(model: ModelSpec, config: &TorusConfig) -> Self {
        let n = config.nx * config.ny;
        let needs_jacobian = model.advection_coefficient() != 0.0;
        let forcing_half = 0.5 * model.forcing_amplitude();
        let forcing = (forcing_half != 0.0).then(|| {
            let q = config.unit_y_mode();
            (
                config.col(q),
                config.col(-q),
                -forcing_half,
            )
        });
        RhsOp {
            model,
            shear: ShearOp::new(config),
            engine: needs_jacobian.then(|| Engine::new(config)),
            jac_buf: if needs_jacobian {
                vec![Complex64::default(); n]
            } else {
                Vec::new()
            },
            forcing,
        }
    }

    fn apply(&mut self, t: f64, w: &[Complex64], out: &mut [Complex64]) {
        let c_shear = self.model.shear_coefficient(t);
        let c_adv = self.model.advection_coefficient();
        match (&mut self.engine, c_shear != 0.0) {
            (None, true) => self.shear.apply_scaled(w, out, -c_shear),
            (None, false) => out.fill(Complex64::default()),
            (Some(engine), false) => engine.self_advection_into(w, out, -c_adv),
            (Some(engine), true) => {
                engine.self_advection_into(w, &mut self.jac_buf, -c_adv);
                self.shear.apply_scaled(w, out, -c_shear);
                for (o, j) in out.iter_mut().zip(&self.jac_buf) {
                    *o += j;
                }
            }
        }
        if let Some((col_plus, col_minus, half)) = self.forcing {
            out[col_plus] += half;
            out[col_minus] += half;
        }
    }
}

/// Reusable integrating-factor RK4 stepper bound to one model and grid.
pub struct Stepper {
    model: ModelSpec,
    config: TorusConfig,
    symbol: Vec<f64>,
    h: f64,
    e_half: Vec<f64>,
    e_full: Vec<f64>,
    rhs: RhsOp,
    k: Vec<Complex64>,
    stage: Vec<Complex64>,
    acc: Vec<Complex64>,
}

impl Stepper {
    pub fn new(model: ModelSpec, config: &TorusConfig, dt: f64) -> Result<Self> {
        model.validate()?;
        config.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let n = config.nx * config.ny;
        let symbol = model.diffusion_symbol(config);
        let mut stepper = Stepper {
            model,
            config: config.clone(),
            symbol,
            h: 0.0,
            e_half: vec![0.0; n],
            e_full: vec![0.0; n],
            rhs: RhsOp::new(model, config),
            k: vec![Complex64::default(); n],
            stage: vec![Complex64::default(); n],
            acc: vec![Complex64::default(); n],
        };
        stepper.set_dt(dt);
        Ok(stepper)
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn config(&self) -> &TorusConfig {
        &self.config
    }

    pub fn dt(&self) -> f64 {
        self.h
    }

    /// Rebuilds the exponential factors for a new step size.
    pub fn set_dt(&mut self, dt: f64) {
        if dt == self.h {
            return;
        }
        self.h = dt;
        for i in 0..self.symbol.len() {
            self.e_half[i] = (self.symbol[i] * 0.5 * dt).exp();
            self.e_full[i] = self.e_half[i] * self.e_half[i];
        }
    }

    /// Advances `w` from `t` by the current step size.
    pub fn step_in_place(&mut self, t: f64, w: &mut SpectralField) -> Result<()> {
        self.config.ensure_matches(w.config())?;
        self.step_raw(t, w.raw_mut())
    }

    fn step_raw(&mut self, t: f64, w: &mut [Complex64]) -> Result<()> {
        let h = self.h;
        // k1 = N(w, t)
        self.rhs.apply(t, w, &mut self.k);
        for i in 0..w.len() {
            self.acc[i] = self.e_full[i] * (w[i] + (h / 6.0) * self.k[i]);
            self.stage[i] = self.e_half[i] * (w[i] + (h / 2.0) * self.k[i]);
        }
        // k2 = N(E_half (w + h/2 k1), t + h/2)
        self.rhs.apply(t + 0.5 * h, &self.stage, &mut self.k);
        for i in 0..w.len() {
            self.acc[i] += (h / 3.0) * self.e_half[i] * self.k[i];
            self.stage[i] = self.e_half[i] * w[i] + (h / 2.0) * self.k[i];
        }
        // k3 = N(E_half w + h/2 k2, t + h/2)
        self.rhs.apply(t + 0.5 * h, &self.stage, &mut self.k);
        for i in 0..w.len() {
            self.acc[i] += (h / 3.0) * self.e_half[i] * self.k[i];
            self.stage[i] = self.e_full[i] * w[i] + h * self.e_half[i] * self.k[i];
        }
        // k4 = N(E w + h E_half k3, t + h)
        self.rhs.apply(t + h, &self.stage, &mut self.k);
        let mut probe = 0.0;
        for i in 0..w.len() {
            w[i] = self.acc[i] + (h / 6.0) * self.k[i];
            probe += w[i].re + w[i].im;
        }
        if !probe.is_finite() {
            return Err(Error::NonFinite { t: t + h });
        }
        Ok(())
    }

}

/// Fused scalar diagnostics of a raw state: `(l2, x, grad_x_sq)` with the
/// weighted entries NaN when undefined (energy strictly inside the unit
/// circle). Modes exactly on the circle carry zero weight in both forms.
fn scalar_row(area: f64, k_sq: impl Fn(usize) -> f64, w: &[Complex64]) -> (f64, f64, f64) {
    let mut l2_sum = 0.0;
    let mut x_sum = 0.0;
    let mut grad_sum = 0.0;
    let mut max_sq = 0.0f64;
    let mut max_interior_sq = 0.0f64;
    for (i, c) in w.iter().enumerate() {
        if i == 0 {
            continue;
        }
        let c2 = c.norm_sqr();
        l2_sum += c2;
        max_sq = max_sq.max(c2);
        let ks = k_sq(i);
        if ks <= 1.0 + 1e-9 {
            if ks < 1.0 - 1e-9 {
                max_interior_sq = max_interior_sq.max(c2);
            }
            continue;
        }
        x_sum += (1.0 - 1.0 / ks) * c2;
        grad_sum += (ks - 1.0) * c2;
    }
    let defined = max_interior_sq <= DEGENERATE_TOLERANCE * DEGENERATE_TOLERANCE * max_sq;
    let l2 = (area * l2_sum).sqrt();
    if defined {
        (l2, (area * x_sum).sqrt(), area * grad_sum)
    } else {
        (l2, f64::NAN, f64::NAN)
    }
}

/// `min(cfg.dt, cfl_safety * h_min / u_max)` with `u_max` the largest
/// pointwise speed of the velocity recovered from `w0` plus the basic-flow
/// speed of the model; returns `cfg.dt` when `u_max` vanishes.
pub fn choose_dt(model: &ModelSpec, w0: &SpectralField, cfg: &StepperConfig) -> f64 {
    let mut engine = Engine::new(w0.config());
    let u_max = engine.max_speed(w0.raw()) + model.basic_speed();
    if u_max == 0.0 {
        return cfg.dt;
    }
    cfg.dt.min(cfg.cfl_safety * w0.config().h_min() / u_max)
}

/// Single integrating-factor RK4 step, returning the advanced state.
pub fn step(model: &ModelSpec, t: f64, dt: f64, w: &SpectralField) -> Result<SpectralField> {
    let mut stepper = Stepper::new(*model, w.config(), dt)?;
    let mut next = w.clone();
    stepper.step_in_place(t, &mut next)?;
    Ok(next)
}

/// Integrates from `w0` to `cfg.t_end`, calling `observe(step, t, state)` at
/// the initial state and after every step. Returns the final state.
pub fn integrate_observed(
    model: &ModelSpec,
    w0: &SpectralField,
    cfg: &StepperConfig,
    mut observe: impl FnMut(usize, f64, &SpectralField) -> Result<()>,
) -> Result<SpectralField> {
    cfg.validate()?;
    if w0.coeff(0, 0).norm() > DEGENERATE_TOLERANCE * w0.linf_coeff().max(1e-300) {
        return Err(Error::MeanNotZero {
            mean: w0.coeff(0, 0).norm(),
            tol: DEGENERATE_TOLERANCE,
        });
    }
    let mut stepper = Stepper::new(*model, w0.config(), cfg.dt)?;
    let mut w = w0.clone();
    observe(0, 0.0, &w)?;
    let n_steps = cfg.steps();
    for i in 0..n_steps {
        let t = i as f64 * cfg.dt;
        let is_last = i + 1 == n_steps;
        let h = if is_last { cfg.t_end - t } else { cfg.dt };
        stepper.set_dt(h);
        stepper.step_in_place(t, &mut w)?;
        let t_next = if is_last { cfg.t_end } else { (i + 1) as f64 * cfg.dt };
        observe(i + 1, t_next, &w)?;
    }
    Ok(w)
}

/// Integrates from `w0` to `cfg.t_end`, recording scalar tracks at every
/// step and full fields every `cfg.sample_every` steps (endpoints always).
pub fn integrate(model: &ModelSpec, w0: &SpectralField, cfg: &StepperConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let tables = Tables::new(w0.config());
    let area = w0.config().area();
    let n_steps = cfg.steps();
    let mut tracks = ScalarTracks::default();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let final_state = integrate_observed(model, w0, cfg, |step, t, w| {
        let (l2, x, grad_x_sq) = scalar_row(area, |i| tables.k_sq[i], w.raw());
        tracks.t.push(t);
        tracks.l2.push(l2);
        tracks.x.push(x);
        tracks.grad_x_sq.push(grad_x_sq);
        if step % cfg.sample_every == 0 && step != n_steps {
            times.push(t);
            states.push(w.clone());
        }
        Ok(())
    })?;
    times.push(cfg.t_end);
    states.push(final_state);
    Ok(Trajectory {
        model: *model,
        times,
        states,
        tracks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelVariant;
    use approx::assert_relative_eq;

    fn grid() -> TorusConfig {
        TorusConfig::new(2.0, 16, 16).unwrap()
    }

    #[test]
    fn pure_diffusion_is_exact_per_mode() {
        // With a = 0 the Kolmogorov linearization is bare diffusion, which
        // the integrating factor reproduces to roundoff at any step size.
        let g = grid();
        let model = ModelSpec::new(ModelVariant::LinearizedKolmogorov, 0, 0.3).unwrap();
        let mut w = SpectralField::zeros(&g);
        w.add_sin(1, 2, 1.0).unwrap(); // |k|^2 = 8
        let cfg = StepperConfig::to(2.0).with_dt(0.25);
        let out = integrate(&model, &w, &cfg).unwrap();
        let expected = (-0.3 * 8.0 * 2.0f64).exp();
        let c = out.final_state().coeff(1, 2);
        assert_relative_eq!(c.im, -0.5 * expected, max_relative = 1e-14);
        assert_relative_eq!(
            out.tracks.l2.last().unwrap() / out.tracks.l2[0],
            expected,
            max_relative = 1e-13
        );
    }

    #[test]
    fn final_step_lands_exactly_on_t_end() {
        let g = grid();
        let model = ModelSpec::new(ModelVariant::LinearizedCombined, 1, 0.01).unwrap();
        let mut w = SpectralField::zeros(&g);
        w.add_sin(1, 0, 1.0).unwrap();
        let cfg = StepperConfig::to(0.25).with_dt(0.1).sampling(1);
        let traj = integrate(&model, &w, &cfg).unwrap();
        assert_eq!(traj.times.len(), traj.states.len());
        assert_eq!(traj.final_time(), 0.25);
        assert!(traj.times.windows(2).all(|p| p[0] < p[1]));
        assert_eq!(traj.tracks.len(), 4);
    }

    #[test]
    fn choose_dt_returns_default_for_zero_speed() {
        let g = grid();
        let w = SpectralField::zeros(&g);
        let cfg = StepperConfig::to(1.0);
        let quiet = ModelSpec::new(ModelVariant::NonlinearNs, 0, 0.01).unwrap();
        assert_eq!(choose_dt(&quiet, &w, &cfg), 0.01);
        // With forcing the basic-flow speed bounds the step.
        let forced = ModelSpec::new(ModelVariant::NonlinearNs, 1, 0.01).unwrap();
        let wide = StepperConfig::to(1.0).with_dt(0.5);
        let expect = 0.5 * g.h_min();
        assert!(expect < 0.5, "test must exercise the CFL bound");
        assert_relative_eq!(choose_dt(&forced, &w, &wide), expect);
    }

    #[test]
    fn integrate_rejects_nonzero_mean_state() {
        let g = grid();
        let mut w = SpectralField::zeros(&g);
        w.set_coeff(0, 0, num_complex::Complex64::new(1.0, 0.0)).unwrap();
        let model = ModelSpec::new(ModelVariant::LinearizedCombined, 0, 0.01).unwrap();
        assert!(matches!(
            integrate(&model, &w, &StepperConfig::to(1.0)),
            Err(Error::MeanNotZero { .. })
        ));
    }

    #[test]
    fn stepper_rejects_mismatched_grid() {
        let model = ModelSpec::new(ModelVariant::LinearizedCombined, 0, 0.01).unwrap();
        let mut stepper = Stepper::new(model, &grid(), 0.01).unwrap();
        let other = TorusConfig::new(1.0, 16, 16).unwrap();
        let mut w = SpectralField::zeros(&other);
        assert!(matches!(
            stepper.step_in_place(0.0, &mut w),
            Err(Error::ConfigMismatch(_))
        ));
    }

    #[test]
    fn tracks_skip_unit_circle_modes_with_zero_weight() {
        let g = TorusConfig::new(1.0, 16, 16).unwrap();
        let model = ModelSpec::new(ModelVariant::NonlinearNs, 0, 0.01).unwrap();
        let mut w = SpectralField::zeros(&g);
        w.add_cos(0, 1, 1.0).unwrap(); // |k|^2 = 1: zero weight in both forms
        w.add_sin(1, 1, 2.0).unwrap(); // |k|^2 = 2
        let traj = integrate(&model, &w, &StepperConfig::to(0.1).with_dt(0.05)).unwrap();
        let area = g.area();
        // Each real mode of amplitude A contributes 2 (A/2)^2 = A^2/2 to the
        // coefficient sum; only the |k|^2 = 2 mode carries weight.
        assert_relative_eq!(
            traj.tracks.x[0],
            (area * 0.5 * 2.0f64).sqrt(),
            max_relative = 1e-13
        );
        assert_relative_eq!(traj.tracks.grad_x_sq[0], area * 2.0, max_relative = 1e-13);
    }

    #[test]
    fn x_track_is_nan_when_weighted_norm_undefined() {
        // On the extended domain the unit shear modes sit at |k|^2 = 1/4.
        let g = TorusConfig::with_beta(1.0, 0.5, 16, 16).unwrap();
        let model = ModelSpec::new(ModelVariant::NonlinearNs, 0, 0.01).unwrap();
        let mut w = SpectralField::zeros(&g);
        w.add_cos(0, 1, 1.0).unwrap();
        let traj = integrate(&model, &w, &StepperConfig::to(0.1).with_dt(0.05)).unwrap();
        assert!(traj.tracks.x[0].is_nan());
        assert!(traj.tracks.l2[0].is_finite());
    }
}
