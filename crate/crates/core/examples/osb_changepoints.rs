//! Online segmented beamforming: causal output with reset decisions, step by step.

use segbeam::experiment::{preset, PRESET_LOADING, PRESET_PENALTY_REL, PRESET_TAU};
use segbeam::metrics::mse_trace;
use segbeam::scenarios::generate;
use segbeam::segmentation::{realized_online_cost, OnlineConfig, Osb};

fn main() -> segbeam::Result<()> {
    let config = preset("abrupt_demo")?;
    let truth = generate(&config.trial_scenario(0))?;
    let x = truth.snapshots();
    let nu = truth.steering();
    let penalty = PRESET_PENALTY_REL * x.nrows() as f64 * truth.noise_power();

    let mut osb = Osb::beamformer(
        nu,
        PRESET_LOADING.resolve(x),
        OnlineConfig::new(penalty, PRESET_TAU),
    )?;
    let mut z = Vec::with_capacity(x.ncols());
    for (t, col) in x.column_iter().enumerate() {
        let step = osb.step(col.as_slice())?;
        z.push(step.output);
        if let Some(cp) = step.changepoint {
            println!(
                "t={t:4}: reset to the candidate started at {cp} ({} candidates)",
                osb.candidates().len()
            );
        }
    }
    println!("true switches {:?}", truth.true_changepoints());
    println!("declared      {:?}", osb.changepoints());
    let mse = *mse_trace(&z, truth.target_waveform())?.last().unwrap();
    println!("final mse {:.2} dB", 10.0 * mse.log10());
    println!(
        "realized cost {:.1}, online potential {:.1}",
        realized_online_cost(&z, osb.changepoints().len(), penalty),
        osb.potentials().last().unwrap()
    );
    Ok(())
}
