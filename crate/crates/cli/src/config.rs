//! JSON run configurations: parsing with file-and-line anchored errors,
//! semantic validation that names the offending field, and construction of
//! the initial state each command integrates from.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use kolmo_core::exact::{self, ExactSpec};
use kolmo_core::experiments::{random_field, AmplitudeRule, SweepSetup};
use kolmo_core::integrator::StepperConfig;
use kolmo_core::{ModelSpec, ModelVariant, SpectralField, TorusConfig};

use crate::error::{CliError, CliResult};

/// The config layout this binary understands; every config file states it.
pub const SCHEMA_VERSION: u32 = 1;

/// Output root precedence: `--out`, then `KOLMO_OUT_DIR`, then `./kolmo-out`.
pub fn resolve_out_root(cli_out: Option<std::path::PathBuf>) -> std::path::PathBuf {
    cli_out
        .or_else(|| std::env::var_os("KOLMO_OUT_DIR").map(std::path::PathBuf::from))
        .unwrap_or_else(|| std::path::PathBuf::from("kolmo-out"))
}

/// Reads a config file whole, for parsing and for digesting into manifests.
pub fn read_config_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Parses JSON with errors anchored as `path:line:column: message`.
pub fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, bytes: &[u8]) -> CliResult<T> {
    serde_json::from_slice(bytes).map_err(|e| {
        CliError::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
    })
}

fn check_schema(ctx: &str, version: u32) -> CliResult<()> {
    if version != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "{ctx}: schema_version: expected {SCHEMA_VERSION}, got {version}"
        )));
    }
    Ok(())
}

/// Torus geometry section shared by all config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub alpha: f64,
    /// Vertical period scale; omitted means the standard `beta = 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub nx: usize,
    pub ny: usize,
    /// Retained fraction per axis for dealiasing; omitted means `2/3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dealias_fraction: Option<f64>,
}

impl GridConfig {
    pub fn to_torus(&self, ctx: &str) -> CliResult<TorusConfig> {
        let grid = match self.beta {
            Some(beta) => TorusConfig::with_beta(self.alpha, beta, self.nx, self.ny),
            None => TorusConfig::new(self.alpha, self.nx, self.ny),
        }
        .map_err(|e| CliError::Config(format!("{ctx}: grid: {e}")))?;
        match self.dealias_fraction {
            Some(f) => grid
                .with_dealias(f)
                .map_err(|e| CliError::Config(format!("{ctx}: grid.dealias_fraction: {e}"))),
            None => Ok(grid),
        }
    }

    pub fn of(grid: &TorusConfig) -> Self {
        GridConfig {
            alpha: grid.alpha,
            beta: (grid.beta != 1.0).then_some(grid.beta),
            nx: grid.nx,
            ny: grid.ny,
            dealias_fraction: None,
        }
    }
}

/// One explicitly listed mode of a `modes` initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeAmp {
    pub j: i64,
    pub m: i64,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

/// Where the initial vorticity comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// A closed-form family evaluated at `t = 0` with the model viscosity.
    Exact { spec: ExactSpec },
    /// An explicit list of cosine and sine amplitudes.
    Modes { modes: Vec<ModeAmp> },
    /// A seeded gaussian draw on the band `k_sq_min <= |k|^2 <= k_sq_max`.
    Random {
        seed: u64,
        k_sq_min: f64,
        k_sq_max: f64,
        #[serde(default)]
        include_x_average: bool,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
}

impl InitialData {
    /// The seed the state is drawn from, after any command-line override.
    pub fn effective_seed(&self, seed_override: Option<u64>) -> Option<u64> {
        match self {
            InitialData::Random { seed, .. } => Some(seed_override.unwrap_or(*seed)),
            _ => None,
        }
    }

    pub fn build(
        &self,
        ctx: &str,
        grid: &TorusConfig,
        nu: f64,
        seed_override: Option<u64>,
    ) -> CliResult<SpectralField> {
        match self {
            InitialData::Exact { spec } => {
                let problems = exact::validate(spec);
                if !problems.is_empty() {
                    let joined = problems
                        .iter()
                        .map(|e| e.to_string())
                        .collect::<Vec<_>>()
                        .join("; ");
                    return Err(CliError::Config(format!("{ctx}: initial.spec: {joined}")));
                }
                exact::eval(spec, nu, 0.0, grid)
                    .map_err(|e| CliError::Config(format!("{ctx}: initial.spec: {e}")))
            }
            InitialData::Modes { modes } => {
                let mut w = SpectralField::zeros(grid);
                for (i, mode) in modes.iter().enumerate() {
                    if !grid.in_dealias_box(mode.j, mode.m) {
                        return Err(CliError::Config(format!(
                            "{ctx}: initial.modes[{i}]: mode ({}, {}) lies outside the \
                             dealias box |j| <= {}, |m| <= {}",
                            mode.j,
                            mode.m,
                            grid.cutoff_x(),
                            grid.cutoff_y()
                        )));
                    }
                    w.add_cos(mode.j, mode.m, mode.cos)
                        .and_then(|()| w.add_sin(mode.j, mode.m, mode.sin))
                        .map_err(|e| {
                            CliError::Config(format!("{ctx}: initial.modes[{i}]: {e}"))
                        })?;
                }
                Ok(w)
            }
            InitialData::Random {
                seed,
                k_sq_min,
                k_sq_max,
                include_x_average,
                amplitude,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed_override.unwrap_or(*seed));
                random_field(
                    grid,
                    *k_sq_min,
                    *k_sq_max,
                    *include_x_average,
                    *amplitude,
                    &mut rng,
                )
                .map_err(|e| CliError::Config(format!("{ctx}: initial: {e}")))
            }
        }
    }
}

/// Time-stepping section; `dt` may be capped by a CFL estimate on request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperSettings {
    pub t_end: f64,
    #[serde(default = "StepperSettings::default_dt")]
    pub dt: f64,
    /// Cap `dt` by the CFL estimate of the initial state before running.
    #[serde(default)]
    pub auto_dt: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl_safety: Option<f64>,
}

impl StepperSettings {
    fn default_dt() -> f64 {
        0.01
    }

    pub fn to_stepper(&self, ctx: &str) -> CliResult<StepperConfig> {
        let mut cfg = StepperConfig::to(self.t_end).with_dt(self.dt);
        if let Some(s) = self.cfl_safety {
            cfg.cfl_safety = s;
        }
        cfg.validate()
            .map_err(|e| CliError::Config(format!("{ctx}: stepper: {e}")))?;
        Ok(cfg)
    }
}

/// Config file of `kolmo simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub schema_version: u32,
    pub grid: GridConfig,
    pub model: ModelSpec,
    pub stepper: StepperSettings,
    pub initial: InitialData,
    /// Times whose full vorticity fields are written as CSV snapshots; each
    /// must be a step multiple of `dt` inside `[0, t_end]`.
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

impl SimulateConfig {
    pub fn validate(&self, ctx: &str) -> CliResult<()> {
        check_schema(ctx, self.schema_version)?;
        self.model
            .validate()
            .map_err(|e| CliError::Config(format!("{ctx}: model: {e}")))?;
        Ok(())
    }
}

/// Config file of `kolmo sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub variant: ModelVariant,
    pub a: u8,
    /// Each run integrates to `t = tau / nu`.
    pub tau: f64,
    /// Smallness target the final ratio is compared against.
    pub delta: f64,
    /// Viscosities, strictly decreasing.
    pub nus: Vec<f64>,
    pub seed: u64,
    pub amp_rule: AmplitudeRule,
    pub grid: GridConfig,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl SweepConfig {
    pub fn to_setup(
        &self,
        ctx: &str,
        workers_override: Option<usize>,
        seed_override: Option<u64>,
    ) -> CliResult<SweepSetup> {
        check_schema(ctx, self.schema_version)?;
        let setup = SweepSetup {
            variant: self.variant,
            a: self.a,
            tau: self.tau,
            delta: self.delta,
            nus: self.nus.clone(),
            seed: seed_override.unwrap_or(self.seed),
            amp_rule: self.amp_rule,
            grid: self.grid.to_torus(ctx)?,
            dt: self.dt,
            workers: workers_override.or(self.workers).unwrap_or(1),
        };
        setup
            .validate()
            .map_err(|e| CliError::Config(format!("{ctx}: {e}")))?;
        Ok(setup)
    }
}

/// Config file of `kolmo rage`: the low-mode time average of the inviscid
/// linearized flow started from `initial`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RageConfig {
    pub schema_version: u32,
    pub grid: GridConfig,
    pub initial: InitialData,
    /// Viscosity used only to evaluate an `exact` initial state at `t = 0`.
    #[serde(default = "default_amplitude")]
    pub nu: f64,
    /// Basic shear amplitude of the frozen linearized operator.
    pub a: u8,
    /// Weighted-energy cutoff `|k|^2 <= lambda_cut` of the average.
    pub lambda_cut: f64,
    pub t_horizon: f64,
    pub dt: f64,
}

impl RageConfig {
    pub fn validate(&self, ctx: &str) -> CliResult<()> {
        check_schema(ctx, self.schema_version)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> &'static str {
        "test.json"
    }

    #[test]
    fn parse_errors_carry_file_line_and_column() {
        let bad = b"{\n  \"schema_version\": 1,\n  \"nx\": }";
        let err = parse_json::<SimulateConfig>(Path::new("cfg/sim.json"), bad).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("cfg/sim.json:3:"),
            "message must anchor file and line, got: {msg}"
        );
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let grid = GridConfig {
            alpha: 2.0,
            beta: None,
            nx: 33,
            ny: 32,
            dealias_fraction: None,
        };
        let msg = grid.to_torus(ctx()).unwrap_err().to_string();
        assert!(msg.contains("grid:"), "field anchor missing: {msg}");
        assert!(msg.contains("nx"), "odd nx must be named: {msg}");
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let cfg = SimulateConfig {
            schema_version: 2,
            grid: GridConfig {
                alpha: 2.0,
                beta: None,
                nx: 16,
                ny: 16,
                dealias_fraction: None,
            },
            model: ModelSpec::new(ModelVariant::LinearizedKolmogorov, 1, 0.01).unwrap(),
            stepper: StepperSettings {
                t_end: 1.0,
                dt: 0.01,
                auto_dt: false,
                cfl_safety: None,
            },
            initial: InitialData::Modes { modes: vec![] },
            snapshots: vec![],
        };
        let msg = cfg.validate(ctx()).unwrap_err().to_string();
        assert!(msg.contains("schema_version"), "got: {msg}");
    }

    #[test]
    fn initial_variants_build_fields() {
        let grid = TorusConfig::new(2.0, 16, 16).unwrap();
        let modes = InitialData::Modes {
            modes: vec![ModeAmp {
                j: 1,
                m: 1,
                cos: 0.5,
                sin: 0.0,
            }],
        };
        let w = modes.build(ctx(), &grid, 0.01, None).unwrap();
        assert_eq!(w.coeff(1, 1).re, 0.25, "cos amplitude splits into halves");

        let random = InitialData::Random {
            seed: 9,
            k_sq_min: 4.0,
            k_sq_max: 16.0,
            include_x_average: false,
            amplitude: 2.0,
        };
        let a = random.build(ctx(), &grid, 0.01, None).unwrap();
        let b = random.build(ctx(), &grid, 0.01, None).unwrap();
        assert_eq!(a.max_coeff_diff(&b).unwrap(), 0.0, "same seed, same field");
        let c = random.build(ctx(), &grid, 0.01, Some(10)).unwrap();
        assert!(
            a.max_coeff_diff(&c).unwrap() > 0.0,
            "seed override must change the draw"
        );
        assert_eq!(random.effective_seed(Some(10)), Some(10));

        let out_of_box = InitialData::Modes {
            modes: vec![ModeAmp {
                j: 7,
                m: 0,
                cos: 1.0,
                sin: 0.0,
            }],
        };
        let msg = out_of_box.build(ctx(), &grid, 0.01, None).unwrap_err().to_string();
        assert!(
            msg.contains("initial.modes[0]"),
            "offending entry must be named: {msg}"
        );
    }
}
