//! Monte Carlo comparison from a preset or a TOML config, at reduced size.
//!
//! `cargo run --release --example monte_carlo -- pw_time 5 2000`

use segbeam::experiment::{preset, run_experiment, ExperimentConfig, PRESETS};

fn main() -> segbeam::Result<()> {
    let mut args = std::env::args().skip(1);
    let source = args.next().unwrap_or_else(|| "abrupt_a".into());
    let mut config = if PRESETS.contains(&source.as_str()) {
        preset(&source)?
    } else {
        ExperimentConfig::load(source.as_ref())?
    };
    config.trials = args.next().map_or(4, |v| v.parse().expect("trial count"));
    if let Some(h) = args.next() {
        config.scenario.horizon = h.parse().expect("horizon");
    }
    config.btr = None;
    config.validate()?;

    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let bundle = run_experiment(&config, workers)?;
    println!("{} trials, T={}", config.trials, config.scenario.horizon);
    for m in &bundle.summary.methods {
        println!(
            "{:<16} mse {:7.2} dB  sinr {:7.2} dB  changepoints {:5.1}",
            m.label, m.final_cum_mse_db, m.mean_sinr_db.mean, m.n_changepoints.mean
        );
    }
    Ok(())
}
