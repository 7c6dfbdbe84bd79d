//! Bearing-time records: scan the look direction and follow the power ridges.

use segbeam::beamformers::cbf_run;
use segbeam::experiment::{preset, run_btr, write_btr};
use segbeam::metrics::btr;
use segbeam::scenarios::generate;

fn main() -> segbeam::Result<()> {
    let mut config = preset("abrupt_demo")?;
    config.trials = 1;
    let truth = generate(&config.trial_scenario(0))?;
    let grid: Vec<f64> = (0..=90).map(|k| 2.0 * k as f64).collect();

    let rec = btr(truth.snapshots(), truth.geometry(), &grid, 50, |x, nu| {
        Ok(cbf_run(x, nu, 0)?.z)
    })?;
    println!("cbf peak bearing per 50-snapshot block:");
    for (t, angle) in rec.times.iter().zip(rec.peak_track()) {
        let sources: Vec<f64> = truth.schedule_at(*t).iter().map(|s| s.0.round()).collect();
        println!("  t={t:4}  peak {angle:5.1}  interferers {sources:?}");
    }

    // The preset's own scan (online segmented and omniscient), written as CSV.
    let records = run_btr(&config, 1)?;
    let dir = std::env::temp_dir().join("segbeam_btr");
    for path in write_btr(&records, &dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
