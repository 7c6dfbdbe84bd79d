//! Online segmented RLS, as a regression tracker and as a sidelobe canceller.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segbeam::experiment::{preset, PRESET_LOADING, PRESET_PENALTY_REL};
use segbeam::linalg::{dot_h, CMatrix, CVector, C64};
use segbeam::metrics::mse_trace;
use segbeam::scenarios::generate;
use segbeam::segmentation::{osrls, osrls_beamformer_run, OnlineConfig};

fn main() -> segbeam::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut cn = move || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let (p, horizon) = (4, 600);
    let a = CVector::from_fn(p, |_, _| cn());
    let b = CVector::from_fn(p, |_, _| cn());
    let x = CMatrix::from_fn(p, horizon, |_, _| cn());
    let d: Vec<C64> = (0..horizon)
        .map(|t| {
            dot_h(
                (if t < 350 { &a } else { &b }).as_slice(),
                x.column(t).as_slice(),
            ) + cn() * 0.02
        })
        .collect();
    let fit = osrls(&x, &d, 1e-3, OnlineConfig::new(2.0, 5))?;
    println!("regression switch at 350; declared {:?}", fit.changepoints);

    let config = preset("abrupt_demo")?;
    let truth = generate(&config.trial_scenario(0))?;
    let x = truth.snapshots();
    let penalty = PRESET_PENALTY_REL * x.nrows() as f64 * truth.noise_power();
    let run = osrls_beamformer_run(
        x,
        truth.steering(),
        PRESET_LOADING.resolve(x),
        OnlineConfig::new(penalty, 5),
        0,
    )?;
    let mse = *mse_trace(&run.z, truth.target_waveform())?.last().unwrap();
    println!(
        "canceller on abrupt_demo: switches {:?}",
        truth.true_changepoints()
    );
    println!(
        "  declared {:?}, final mse {:.2} dB",
        run.changepoints,
        10.0 * mse.log10()
    );
    Ok(())
}
