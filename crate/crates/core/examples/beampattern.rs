//! Beampatterns and white-noise gain of conventional and loaded Capon weights.

use segbeam::beamformers::{capon_weights, conventional_weights};
use segbeam::metrics::{beampattern, wng};
use segbeam::scenarios::{generate, ArrayGeometry, ScenarioConfig, ScenarioKind};

fn main() -> segbeam::Result<()> {
    let truth = generate(&ScenarioConfig {
        geometry: ArrayGeometry::nine_element_3600hz(),
        horizon: 10,
        target_angle: 90.0,
        target_snr_db: -9.0,
        inr_db: 25.0,
        interferer_pool: Some(vec![50.0, 125.0, 150.0]),
        pool_size: 3,
        suppression_band_db: [3.0, 60.0],
        exclude_main_lobe: false,
        kind: ScenarioKind::PiecewiseTime {
            block_len: 100,
            jitter: 0,
            active: 2,
        },
        seed: 0,
    })?;
    let nu = truth.steering();
    let cov = truth.ensemble_cov(0);
    let grid: Vec<f64> = (0..=36).map(|k| 5.0 * k as f64).collect();
    let cbf = conventional_weights(nu);
    let mut rows = vec![(
        "cbf".to_owned(),
        beampattern(&cbf, truth.geometry(), &grid)?,
    )];
    for delta in [0.0, 1.0, 100.0] {
        let w = capon_weights(cov, nu, delta)?;
        println!(
            "capon delta={delta:5}: wng {:.2} dB",
            10.0 * wng(&w, nu)?.log10()
        );
        rows.push((
            format!("capon d={delta}"),
            beampattern(&w, truth.geometry(), &grid)?,
        ));
    }
    println!("cbf: wng {:.2} dB", 10.0 * wng(&cbf, nu)?.log10());
    println!("interferers at {:?}\n", truth.schedule_at(0));

    print!("{:>6}", "angle");
    for (name, _) in &rows {
        print!("{name:>15}");
    }
    println!();
    for (i, angle) in grid.iter().enumerate() {
        print!("{angle:6.0}");
        for (_, r) in &rows {
            print!("{:15.1}", r[i].max(-80.0));
        }
        println!();
    }
    Ok(())
}
