//! Sliding-window MPDR across window lengths on a scene whose interferer jumps every 800 snapshots.

use segbeam::beamformers::{sliding_mpdr_run, LoadingRule};
use segbeam::experiment::SLIDING_WINDOWS;
use segbeam::metrics::mse_trace;
use segbeam::scenarios::{generate, ArrayGeometry, ScenarioConfig, ScenarioKind};

fn main() -> segbeam::Result<()> {
    let truth = generate(&ScenarioConfig {
        geometry: ArrayGeometry::half_wavelength(15, 1000.0, 343.0),
        horizon: 4000,
        target_angle: 90.0,
        target_snr_db: -5.0,
        inr_db: 11.0,
        interferer_pool: None,
        pool_size: 4,
        suppression_band_db: [4.0, 15.0],
        exclude_main_lobe: false,
        kind: ScenarioKind::PiecewiseBearing {
            block_len: 800,
            jitter: 0,
        },
        seed: 11,
    })?;
    let x = truth.snapshots();
    let delta = LoadingRule::RecordPower { factor: 10.0 }.resolve(x);
    println!("interferer pool {:?}", truth.pool());
    for window in SLIDING_WINDOWS {
        let run = sliding_mpdr_run(x, truth.steering(), window, delta, 0)?;
        let mse = *mse_trace(&run.z, truth.target_waveform())?.last().unwrap();
        println!(
            "K={window:5}  final cumulative mse {:7.2} dB",
            10.0 * mse.log10()
        );
    }
    Ok(())
}
