//! Batch segmented beamforming on abruptly switching interference.

use segbeam::beamformers::batch_capon_run;
use segbeam::experiment::{preset, PRESET_LOADING, PRESET_PENALTY_REL};
use segbeam::metrics::mse_trace;
use segbeam::scenarios::generate;
use segbeam::segmentation::bsb;

fn main() -> segbeam::Result<()> {
    let mut config = preset("abrupt_a")?;
    config.scenario.horizon = 900;
    let truth = generate(&config.trial_scenario(0))?;
    let x = truth.snapshots();
    let nu = truth.steering();
    let delta = PRESET_LOADING.resolve(x);
    let penalty = PRESET_PENALTY_REL * x.nrows() as f64 * truth.noise_power();

    let seg = bsb(x, nu, penalty, delta)?;
    println!("true changepoints     {:?}", truth.true_changepoints());
    println!("segment starts found  {:?}", seg.partition.changepoints());
    println!("optimal penalized cost {:.1}", seg.partition.total_cost);
    for s in &seg.partition.segments {
        println!("  [{:4}, {:4}]  cost {:8.1}", s.start, s.end, s.cost);
    }

    let one = batch_capon_run(x, nu, delta, 0)?;
    let target = truth.target_waveform();
    let db = |z: &[_]| -> segbeam::Result<f64> {
        Ok(10.0 * mse_trace(z, target)?.last().unwrap().log10())
    };
    println!(
        "final mse: batch Capon {:.2} dB, segmented {:.2} dB",
        db(&one.z)?,
        db(&seg.output)?
    );
    Ok(())
}
