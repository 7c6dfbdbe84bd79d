//! Conventional, batch Capon, recursive MVDR and GSC on a scene with one fixed interferer.

use segbeam::beamformers::{
    adaptive_mvdr_run, batch_capon_run, batch_mvdr_weights, cbf_run, conventional_weights,
    gsc_batch_weights, gsc_run, LoadingRule,
};
use segbeam::metrics::{beampattern, mse_trace};
use segbeam::scenarios::{generate, ArrayGeometry, ScenarioConfig, ScenarioKind};

fn db(v: f64) -> f64 {
    10.0 * v.log10()
}

fn main() -> segbeam::Result<()> {
    let truth = generate(&ScenarioConfig {
        geometry: ArrayGeometry::half_wavelength(15, 1000.0, 343.0),
        horizon: 1000,
        target_angle: 90.0,
        target_snr_db: -5.0,
        inr_db: 20.0,
        interferer_pool: Some(vec![70.0, 120.0]),
        pool_size: 2,
        suppression_band_db: [3.0, 15.0],
        exclude_main_lobe: false,
        kind: ScenarioKind::PiecewiseBearing {
            block_len: 2000,
            jitter: 0,
        },
        seed: 3,
    })?;
    let x = truth.snapshots();
    let nu = truth.steering();
    let delta = LoadingRule::default().resolve(x);

    let runs = [
        ("cbf", cbf_run(x, nu, 0)?),
        ("batch_capon", batch_capon_run(x, nu, delta, 0)?),
        ("adaptive_mvdr", adaptive_mvdr_run(x, nu, delta, 0)?),
        ("gsc", gsc_run(x, nu, delta, 0)?),
    ];
    println!(
        "{:<14} {:>12} {:>14}",
        "method", "final mse dB", "out power dB"
    );
    for (name, run) in &runs {
        let mse = mse_trace(&run.z, truth.target_waveform())?;
        let power = run.cumulative_cost.last().unwrap() / x.ncols() as f64;
        println!(
            "{name:<14} {:>12.2} {:>14.2}",
            db(*mse.last().unwrap()),
            db(power)
        );
    }

    // Same data, two parameterizations of the same constrained minimizer.
    let capon = batch_mvdr_weights(x, nu, delta)?;
    let gsc = gsc_batch_weights(x, nu, delta)?;
    println!(
        "\nbatch Capon vs GSC weight difference: {:.2e}",
        (&capon - &gsc).norm()
    );

    let grid = [70.0, 90.0];
    let q = beampattern(&conventional_weights(nu), truth.geometry(), &grid)?;
    let c = beampattern(&capon, truth.geometry(), &grid)?;
    println!(
        "response at 70 deg: cbf {:.1} dB, capon {:.1} dB",
        q[0], c[0]
    );
    println!(
        "response at 90 deg: cbf {:.1} dB, capon {:.1} dB",
        q[1], c[1]
    );
    Ok(())
}
