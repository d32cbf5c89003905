use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use banach_ar1::error::{Ar1Error, Result};
use banach_ar1::harness::{self, ExperimentConfig};
use banach_ar1::model::ModelSetup;

#[derive(Parser)]
#[command(name = "banach-ar1", version, about = "ARB(1) simulation, estimation and consistency diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo experiment and write CSV and SVG outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed (overrides the config and BANACH_AR1_SEED).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Parse the config and check the model gates without simulating.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the covariance kernel surface to kernel_surface.csv.
    Kernel {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config = harness::parse_config(path)?;
    config.apply_env_seed()?;
    if let Some(seed) = seed {
        config.set_seed(seed);
    }
    Ok(config)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => {
            let config = load(&config, seed)?;
            let dir = out.unwrap_or_else(|| config.output_dir.clone());
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
                .map_err(|e| Ar1Error::InvalidParameter(format!("thread pool: {e}")))?;
            let output = pool.install(|| harness::run_experiment(&config))?;
            let kernel = harness::kernel_surface(&config)?;
            let written = harness::write_outputs(&output, &config, &kernel, &dir)?;
            for row in &output.exceedance {
                println!(
                    "n = {:>7}  exceeded {}/{}  mse {}",
                    row.n,
                    row.exceeded,
                    row.total,
                    output
                        .mse
                        .iter()
                        .find(|m| m.n == row.n)
                        .map_or(f64::NAN, |m| m.mean_sq_error_b)
                );
            }
            println!("wrote {} files to {}", written.len(), dir.display());
            Ok(())
        }
        Command::Validate { config } => {
            let config = load(&config, None)?;
            let setup = ModelSetup::build(config.model, config.noise_psd)?;
            println!(
                "config ok: p = {}, L = {}, n = {:?}, replications = {}",
                config.model.modes, config.model.grid_len, config.sample_sizes, config.replications
            );
            println!(
                "stationarity: ||rho^{}|| = {}",
                setup.stationarity.j0, setup.stationarity.norm
            );
            println!(
                "noise covariance: min eigenvalue {}, clipped {} (mass {})",
                setup.repair.min_eigenvalue, setup.repair.clipped_count, setup.repair.clipped_mass
            );
            Ok(())
        }
        Command::Kernel { config, out } => {
            let config = load(&config, None)?;
            let dir = out.unwrap_or_else(|| config.output_dir.clone());
            std::fs::create_dir_all(&dir).map_err(|e| Ar1Error::Io {
                path: dir.clone(),
                source: e,
            })?;
            let path = dir.join("kernel_surface.csv");
            harness::write_kernel_surface(&path, &harness::kernel_surface(&config)?)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
