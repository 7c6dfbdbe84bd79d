use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use segbeam::experiment::{self, ExperimentConfig, Overrides, ResultBundle};
use segbeam::{oracle, Result};

#[derive(Parser)]
#[command(name = "segbeam", version, about = "Segmented beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run a built-in experiment, or print its config with --emit-config.
    Preset {
        name: String,
        #[arg(long)]
        emit_config: bool,
        #[command(flatten)]
        flags: Flags,
    },
    /// Check the recursive inverse and the DP engines against brute-force oracles.
    OracleCheck {
        #[arg(long, default_value_t = 50)]
        streams: usize,
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write bearing-time records for the config's [btr] scan.
    Btr {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; trial k uses seed + k.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, env = "SEGBEAM_WORKERS")]
    workers: Option<usize>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            trials: self.trials,
            base_seed: self.seed,
            horizon: self.horizon,
            out_dir: self.out_dir.clone(),
        }
    }

    fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    fn configure(&self, mut config: ExperimentConfig) -> Result<ExperimentConfig> {
        config.apply(&self.overrides());
        config.validate()?;
        Ok(config)
    }
}

fn print_summary(bundle: &ResultBundle) {
    println!(
        "{:<20} {:>14} {:>10} {:>14} {:>8}",
        "algorithm", "final_mse_db", "std", "mean_sinr_db", "n_cp"
    );
    for m in &bundle.summary.methods {
        println!(
            "{:<20} {:>14.3} {:>10.4} {:>14.3} {:>8.1}",
            m.label,
            m.final_cum_mse_db,
            m.final_cum_mse.std,
            m.mean_sinr_db.mean,
            m.n_changepoints.mean
        );
    }
}

fn run(config: &ExperimentConfig, workers: usize) -> Result<()> {
    let bundle = experiment::run_experiment(config, workers)?;
    for path in bundle.write(&config.outputs.dir)? {
        log::info!("wrote {}", path.display());
    }
    print_summary(&bundle);
    Ok(())
}

fn btr(config: &ExperimentConfig, workers: usize, dir: &Path) -> Result<()> {
    let records = experiment::run_btr(config, workers)?;
    for path in experiment::write_btr(&records, dir)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn oracle_check(streams: usize, instances: usize, seed: u64) -> Result<bool> {
    let mut reports = vec![oracle::woodbury_suite(streams, seed)?];
    reports.extend(oracle::dp_suite(instances, seed)?);
    let mut ok = true;
    for r in &reports {
        let verdict = if r.passed() { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {:<10} cases={:<4} worst={:.3e} tol={:.0e}",
            r.name, r.cases, r.worst, r.tolerance
        );
        ok &= r.passed();
    }
    Ok(ok)
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, flags } => {
            let config = flags.configure(ExperimentConfig::load(&config)?)?;
            run(&config, flags.workers())?;
        }
        Command::Preset {
            name,
            emit_config,
            flags,
        } => {
            let config = flags.configure(experiment::preset(&name)?)?;
            if emit_config {
                print!("{}", config.to_toml_string()?);
            } else {
                run(&config, flags.workers())?;
            }
        }
        Command::OracleCheck {
            streams,
            instances,
            seed,
        } => {
            if !oracle_check(streams, instances, seed)? {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Btr { config, flags } => {
            let config = flags.configure(ExperimentConfig::load(&config)?)?;
            btr(&config, flags.workers(), &config.outputs.dir)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
