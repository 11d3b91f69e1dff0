//! `kolmo`: integrate Kolmogorov-flow models, verify them against
//! closed-form solutions, and run damping experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kolmo_cli::commands;

#[derive(Parser)]
#[command(
    name = "kolmo",
    version,
    about = "Pseudo-spectral Kolmogorov-flow solver and verification suite"
)]
struct Cli {
    /// Output directory root; defaults to $KOLMO_OUT_DIR, then ./kolmo-out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed of any seeded random initial data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Refuses configurations whose weighted diagnostics are undefined.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured model, writing scalar tracks and snapshots.
    Simulate {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the solver and a closed-form family against each other.
    VerifyExact {
        /// JSON file holding one closed-form family spec.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        nu: f64,
        #[arg(long, default_value_t = 50.0)]
        t_end: f64,
        #[arg(long, default_value_t = 0.02)]
        dt: f64,
        /// Square resolution overriding the family's default grid.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Run an enhanced-damping viscosity sweep from a JSON config.
    Sweep {
        /// JSON sweep configuration.
        #[arg(long)]
        config: PathBuf,
        /// Concurrent runs; overrides the config value.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Certify the slow single-mode counterexample at one viscosity.
    Counterexample {
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long)]
        nu: f64,
        /// Square grid resolution of the check.
        #[arg(long, default_value_t = 32)]
        resolution: usize,
    },
    /// Measure the windowed low-mode energy fraction of the inviscid flow.
    Rage {
        /// JSON rage configuration.
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate a closed-form family at given times into snapshot CSVs.
    Export {
        /// JSON file holding one closed-form family spec.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        nu: f64,
        /// Comma-separated snapshot times.
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        /// Square resolution overriding the family's default grid.
        #[arg(long)]
        resolution: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let out = kolmo_cli::config::resolve_out_root(cli.out);
    let result = match &cli.command {
        Command::Simulate { config } => commands::simulate(config, &out, cli.seed, cli.strict),
        Command::VerifyExact {
            spec,
            nu,
            t_end,
            dt,
            resolution,
        } => commands::verify_exact(spec, *nu, *t_end, *dt, *resolution, &out),
        Command::Sweep { config, workers } => {
            commands::sweep(config, &out, *workers, cli.seed)
        }
        Command::Counterexample {
            d,
            alpha,
            tau,
            nu,
            resolution,
        } => commands::counterexample(*d, *alpha, *tau, *nu, *resolution, &out),
        Command::Rage { config } => commands::rage(config, &out, cli.seed),
        Command::Export {
            spec,
            nu,
            times,
            resolution,
        } => commands::export(spec, *nu, times, *resolution, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
