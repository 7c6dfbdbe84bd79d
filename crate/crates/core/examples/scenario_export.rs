//! Generate a birth-death scenario, print its ground truth and export the snapshots as CSV.

use segbeam::experiment::preset;
use segbeam::scenarios::generate;

fn main() -> segbeam::Result<()> {
    let mut config = preset("birth_death")?;
    config.scenario.horizon = 2000;
    let truth = generate(&config.trial_scenario(0))?;

    println!(
        "pool (deg): {:?}",
        truth
            .pool()
            .iter()
            .map(|a| (a * 10.0).round() / 10.0)
            .collect::<Vec<_>>()
    );
    for e in truth.episodes() {
        println!(
            "  {:6.1} deg  {:5.1} dB  snapshots {}..{}",
            e.angle,
            10.0 * e.power.log10(),
            e.start,
            e.end
        );
    }
    println!(
        "{} interference states, changes at {:?}",
        truth.states().len(),
        truth.true_changepoints()
    );

    let path = std::env::temp_dir().join("segbeam_birth_death.csv");
    truth.write_csv(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
