//! One entry point per subcommand. Each writes its outputs plus a
//! `manifest.json` under the chosen output root and returns a [`CliError`]
//! whose exit code the binary propagates.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use kolmo_core::exact::{self, ExactSpec};
use kolmo_core::experiments::{counterexample_check, enhanced_damping_sweep, rage_time_average};
use kolmo_core::integrator::{choose_dt, integrate_observed, ScalarTracks};
use kolmo_core::norms::{l2_norm, x_norm};
use kolmo_core::ops::{inv_laplacian, jacobian};
use kolmo_core::{Error, ModelSpec, ModelVariant, PhysicalField, SpectralField, TorusConfig};

use crate::config::{
    parse_json, read_config_bytes, RageConfig, SimulateConfig, SweepConfig,
};
use crate::error::{CliError, CliResult};
use crate::io::{config_digest, fmt_float, fmt_time, read_field_csv, OutputWriter};

/// Largest allowed relative error between the solver and a closed-form
/// reference in `verify-exact`.
pub const SOLVER_TOLERANCE: f64 = 1e-6;
/// Largest allowed normalized self-advection residual of a closed-form
/// reference in `verify-exact`.
pub const STATIONARITY_TOLERANCE: f64 = 1e-10;

/// Relative slack when matching snapshot times to the step lattice.
const TIME_LATTICE_TOLERANCE: f64 = 1e-9;

fn anchored(path: &Path) -> String {
    path.display().to_string()
}

/// Maps each snapshot time to the index of the integration step that lands
/// on it exactly; times off the step lattice are configuration errors.
fn snapshot_steps(
    ctx: &str,
    times: &[f64],
    dt: f64,
    t_end: f64,
    n_steps: usize,
) -> CliResult<BTreeMap<usize, f64>> {
    let mut steps = BTreeMap::new();
    for (i, &s) in times.iter().enumerate() {
        let slack = TIME_LATTICE_TOLERANCE * s.abs().max(1.0);
        if !s.is_finite() || s < -slack || s > t_end + slack {
            return Err(CliError::Config(format!(
                "{ctx}: snapshots[{i}]: time {s} lies outside [0, {t_end}]"
            )));
        }
        let step = if (s - t_end).abs() <= slack {
            n_steps
        } else {
            let k = (s / dt).round();
            if (k * dt - s).abs() > slack {
                return Err(CliError::Config(format!(
                    "{ctx}: snapshots[{i}]: time {s} is not a step multiple of dt = {dt}"
                )));
            }
            k as usize
        };
        steps.insert(step, s);
    }
    Ok(steps)
}

/// Runs a configured model from configured initial data, writing per-step
/// scalar tracks as `timeseries.csv` and any requested snapshot fields as
/// `fields/t_<time>.csv`.
pub fn simulate(
    config_path: &Path,
    out_root: &Path,
    seed_override: Option<u64>,
    strict: bool,
) -> CliResult<()> {
    let ctx = anchored(config_path);
    let bytes = read_config_bytes(config_path)?;
    let cfg: SimulateConfig = parse_json(config_path, &bytes)?;
    cfg.validate(&ctx)?;
    let grid = cfg.grid.to_torus(&ctx)?;
    let w0 = cfg
        .initial
        .build(&ctx, &grid, cfg.model.nu, seed_override)?;
    let mut stepper = cfg.stepper.to_stepper(&ctx)?;
    if cfg.stepper.auto_dt {
        stepper.dt = choose_dt(&cfg.model, &w0, &stepper);
    }
    if strict {
        x_norm(&w0).map_err(|e| {
            CliError::Config(format!(
                "{ctx}: --strict: weighted diagnostics are undefined for this state: {e}"
            ))
        })?;
    }
    let snaps = snapshot_steps(&ctx, &cfg.snapshots, stepper.dt, stepper.t_end, stepper.steps())?;

    let mut tracks = ScalarTracks::default();
    let mut fields: Vec<(f64, PhysicalField)> = Vec::with_capacity(snaps.len());
    let run = integrate_observed(&cfg.model, &w0, &stepper, |step, t, w| {
        tracks.record(t, w);
        if let Some(&s) = snaps.get(&step) {
            fields.push((s, w.to_physical()));
        }
        Ok(())
    });
    let failure = match run {
        Ok(_) => None,
        Err(Error::NonFinite { t }) => Some(t),
        Err(e) => return Err(e.into()),
    };

    let mut out = OutputWriter::new(out_root)?;
    out.write_timeseries("timeseries.csv", &tracks)?;
    for (s, field) in &fields {
        out.write_field(&format!("fields/t_{}.csv", fmt_time(*s)), field)?;
    }
    let command = format!(
        "kolmo simulate --config {} --out {}",
        config_path.display(),
        out_root.display()
    );
    out.finish(
        &command,
        &config_digest(&bytes),
        cfg.initial.effective_seed(seed_override),
    )?;

    match failure {
        Some(t) => Err(CliError::NonFinite(format!(
            "state left the finite range at t = {t}; partial tracks were written"
        ))),
        None => {
            let last = tracks.len() - 1;
            println!(
                "simulate: {} to t = {} in {} steps; final l2 = {}",
                cfg.model.variant,
                fmt_time(stepper.t_end),
                stepper.steps(),
                fmt_float(tracks.l2[last])
            );
            println!("simulate: wrote {}", out_root.join("timeseries.csv").display());
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    spec: ExactSpec,
    nu: f64,
    t_end: f64,
    dt: f64,
    grid_nx: usize,
    grid_ny: usize,
    max_solver_error: f64,
    max_stationarity_residual: f64,
    solver_tolerance: f64,
    stationarity_tolerance: f64,
    passed: bool,
}

/// Normalized self-advection residual `l2(J(inv_lap w, w)) / l2(w)^2`,
/// which vanishes for every closed-form family here.
fn stationarity_residual(w: &SpectralField) -> CliResult<f64> {
    let norm = l2_norm(w);
    if norm == 0.0 {
        return Ok(0.0);
    }
    let advection = jacobian(&inv_laplacian(w), w)?;
    Ok(l2_norm(&advection) / (norm * norm))
}

/// Integrates the nonlinear model from a closed-form initial state and
/// compares against the family's evaluation at checkpoints, also checking
/// that the family discretely solves the stationary advection equation.
pub fn verify_exact(
    spec_path: &Path,
    nu: f64,
    t_end: f64,
    dt: f64,
    resolution: Option<usize>,
    out_root: &Path,
) -> CliResult<()> {
    let ctx = anchored(spec_path);
    let bytes = read_config_bytes(spec_path)?;
    let spec: ExactSpec = parse_json(spec_path, &bytes)?;
    let problems = exact::validate(&spec);
    if !problems.is_empty() {
        let joined = problems
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(CliError::Config(format!("{ctx}: {joined}")));
    }
    let canonical = exact::default_grid(&spec)?;
    let grid = match resolution {
        Some(r) => TorusConfig::with_beta(canonical.alpha, canonical.beta, r, r)
            .map_err(|e| CliError::Config(format!("--resolution: {e}")))?,
        None => canonical,
    };
    let model = ModelSpec::new(ModelVariant::NonlinearNs, spec.basic_a(), nu)?;
    let cfg = kolmo_core::integrator::StepperConfig::to(t_end).with_dt(dt);
    cfg.validate()?;

    let w0 = exact::eval(&spec, nu, 0.0, &grid)?;
    let n_steps = cfg.steps();
    let stride = (n_steps / 10).max(1);
    let mut max_err = 0.0f64;
    let mut max_residual = stationarity_residual(&w0)?;
    integrate_observed(&model, &w0, &cfg, |step, t, w| {
        if step % stride == 0 || step == n_steps {
            let reference = exact::eval(&spec, nu, t, w.config())?;
            let mut diff = w.clone();
            diff.axpy(-1.0, &reference)?;
            max_err = max_err.max(l2_norm(&diff) / l2_norm(&reference));
        }
        Ok(())
    })?;
    let final_reference = exact::eval(&spec, nu, t_end, &grid)?;
    max_residual = max_residual.max(
        stationarity_residual(&final_reference)
            .map_err(|e| CliError::Config(format!("{ctx}: {e}")))?,
    );

    println!(
        "verify-exact: max relative solver error {} (tolerance {})",
        fmt_float(max_err),
        fmt_float(SOLVER_TOLERANCE)
    );
    println!(
        "verify-exact: max stationarity residual {} (tolerance {})",
        fmt_float(max_residual),
        fmt_float(STATIONARITY_TOLERANCE)
    );

    let passed = max_err < SOLVER_TOLERANCE && max_residual < STATIONARITY_TOLERANCE;
    let report = VerifyReport {
        spec,
        nu,
        t_end,
        dt,
        grid_nx: grid.nx,
        grid_ny: grid.ny,
        max_solver_error: max_err,
        max_stationarity_residual: max_residual,
        solver_tolerance: SOLVER_TOLERANCE,
        stationarity_tolerance: STATIONARITY_TOLERANCE,
        passed,
    };
    let mut out = OutputWriter::new(out_root)?;
    out.write_json("report.json", &report)?;
    let command = format!(
        "kolmo verify-exact --spec {} --nu {nu} --t-end {t_end} --dt {dt} --out {}",
        spec_path.display(),
        out_root.display()
    );
    out.finish(&command, &config_digest(&bytes), None)?;

    if passed {
        Ok(())
    } else {
        Err(CliError::Tolerance(format!(
            "solver error {} vs {SOLVER_TOLERANCE} or stationarity residual {} vs \
             {STATIONARITY_TOLERANCE} out of tolerance",
            fmt_float(max_err),
            fmt_float(max_residual)
        )))
    }
}

/// Runs the enhanced-damping viscosity sweep of the config, writing the
/// trend report, one scalar-track CSV per viscosity, and the manifest.
pub fn sweep(
    config_path: &Path,
    out_root: &Path,
    workers_override: Option<usize>,
    seed_override: Option<u64>,
) -> CliResult<()> {
    let ctx = anchored(config_path);
    let bytes = read_config_bytes(config_path)?;
    let cfg: SweepConfig = parse_json(config_path, &bytes)?;
    let setup = cfg.to_setup(&ctx, workers_override, seed_override)?;
    let output = enhanced_damping_sweep(&setup)?;
    let report = &output.report;

    let mut out = OutputWriter::new(out_root)?;
    out.write_json("report.json", report)?;
    for (nu, tracks) in report.nus.iter().zip(&output.tracks) {
        out.write_timeseries(&format!("runs/nu_{}.csv", fmt_time(*nu)), tracks)?;
    }
    let command = format!(
        "kolmo sweep --config {} --out {} --workers {}",
        config_path.display(),
        out_root.display(),
        setup.workers
    );
    out.finish(&command, &config_digest(&bytes), Some(setup.seed))?;

    for (nu, ratio) in report.nus.iter().zip(&report.ratios) {
        println!("sweep: nu = {nu}: ratio = {}", fmt_float(*ratio));
    }
    println!(
        "sweep: monotone nonincreasing = {}, final ratio below delta = {}",
        report.monotone_nonincreasing, report.final_below_delta
    );
    if report.monotone_nonincreasing && report.final_below_delta {
        Ok(())
    } else {
        Err(CliError::Tolerance(
            "damping ratios are not monotone below the target".into(),
        ))
    }
}

/// Certifies the slow single-mode solution: its measured damping ratio must
/// match the closed form, its initial data must sit at the hypothesis
/// scale, and the would-be damping improvement must fail.
pub fn counterexample(
    d: f64,
    alpha: f64,
    tau: f64,
    nu: f64,
    resolution: usize,
    out_root: &Path,
) -> CliResult<()> {
    let grid = TorusConfig::new(alpha, resolution, resolution)
        .map_err(|e| CliError::Config(format!("--alpha/--resolution: {e}")))?;
    let report = counterexample_check(d, alpha, tau, nu, &grid)?;

    let mut out = OutputWriter::new(out_root)?;
    out.write_json("report.json", &report)?;
    let args = format!(
        "kolmo counterexample --d {d} --alpha {alpha} --tau {tau} --nu {nu} \
         --resolution {resolution} --out {}",
        out_root.display()
    );
    out.finish(&args, &config_digest(args.as_bytes()), None)?;

    println!(
        "counterexample: measured ratio {} vs predicted {} (match = {})",
        fmt_float(report.measured_ratio),
        fmt_float(report.predicted_ratio),
        report.ratio_matches_predicted
    );
    println!(
        "counterexample: hypothesis norm holds = {}, damping estimate fails = {}",
        report.hypothesis_holds, report.damping_estimate_fails
    );
    if let (Some(growth), Some(residual)) =
        (report.pa_growth_fails, report.residual_damping_fails)
    {
        println!(
            "counterexample: square-torus growth bound fails = {growth}, \
             residual damping fails = {residual}"
        );
    }
    let documented_failures = report.damping_estimate_fails
        && report.pa_growth_fails.unwrap_or(true)
        && report.residual_damping_fails.unwrap_or(true);
    if report.hypothesis_holds && report.ratio_matches_predicted && documented_failures {
        Ok(())
    } else {
        Err(CliError::Tolerance(
            "measured behavior does not certify the counterexample".into(),
        ))
    }
}

#[derive(Serialize)]
struct RageReport {
    average: f64,
    lambda_cut: f64,
    t_horizon: f64,
    a: u8,
    dt: f64,
}

/// Measures the windowed low-mode energy fraction of the inviscid
/// linearized flow. Informational: any finite result exits 0.
pub fn rage(config_path: &Path, out_root: &Path, seed_override: Option<u64>) -> CliResult<()> {
    let ctx = anchored(config_path);
    let bytes = read_config_bytes(config_path)?;
    let cfg: RageConfig = parse_json(config_path, &bytes)?;
    cfg.validate(&ctx)?;
    let grid = cfg.grid.to_torus(&ctx)?;
    let w0 = cfg.initial.build(&ctx, &grid, cfg.nu, seed_override)?;
    let average = rage_time_average(&w0, cfg.lambda_cut, cfg.t_horizon, cfg.a, cfg.dt)?;

    let mut out = OutputWriter::new(out_root)?;
    out.write_json(
        "rage.json",
        &RageReport {
            average,
            lambda_cut: cfg.lambda_cut,
            t_horizon: cfg.t_horizon,
            a: cfg.a,
            dt: cfg.dt,
        },
    )?;
    let command = format!(
        "kolmo rage --config {} --out {}",
        config_path.display(),
        out_root.display()
    );
    out.finish(
        &command,
        &config_digest(&bytes),
        cfg.initial.effective_seed(seed_override),
    )?;
    println!(
        "rage: windowed low-mode energy fraction = {} over [0, {}]",
        fmt_float(average),
        fmt_time(cfg.t_horizon)
    );
    Ok(())
}

/// Evaluates a closed-form family at the given times and writes each field
/// as a snapshot CSV, without running the solver.
pub fn export(
    spec_path: &Path,
    nu: f64,
    times: &[f64],
    resolution: Option<usize>,
    out_root: &Path,
) -> CliResult<()> {
    let ctx = anchored(spec_path);
    let bytes = read_config_bytes(spec_path)?;
    let spec: ExactSpec = parse_json(spec_path, &bytes)?;
    let problems = exact::validate(&spec);
    if !problems.is_empty() {
        let joined = problems
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(CliError::Config(format!("{ctx}: {joined}")));
    }
    if times.is_empty() {
        return Err(CliError::Config("--times: at least one time is required".into()));
    }
    let canonical = exact::default_grid(&spec)?;
    let grid = match resolution {
        Some(r) => TorusConfig::with_beta(canonical.alpha, canonical.beta, r, r)
            .map_err(|e| CliError::Config(format!("--resolution: {e}")))?,
        None => canonical,
    };
    let mut out = OutputWriter::new(out_root)?;
    for (i, &t) in times.iter().enumerate() {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CliError::Config(format!(
                "--times[{i}]: time {t} must be finite and nonnegative"
            )));
        }
        let field = exact::eval(&spec, nu, t, &grid)?;
        out.write_field(&format!("fields/t_{}.csv", fmt_time(t)), &field.to_physical())?;
    }
    let times_text = times
        .iter()
        .map(|t| fmt_time(*t))
        .collect::<Vec<_>>()
        .join(",");
    let command = format!(
        "kolmo export --spec {} --nu {nu} --times {times_text} --out {}",
        spec_path.display(),
        out_root.display()
    );
    out.finish(&command, &config_digest(&bytes), None)?;
    println!("export: wrote {} snapshot(s) under {}", times.len(), out_root.display());
    Ok(())
}

/// Re-reads a snapshot CSV as a spectral state; shared by tests and kept
/// here so the read path lives next to the writers it inverts.
pub fn load_snapshot(path: &Path, grid: &TorusConfig) -> CliResult<SpectralField> {
    let field = read_field_csv(path, grid)?;
    SpectralField::from_physical_strict(&field).map_err(CliError::from)
}
