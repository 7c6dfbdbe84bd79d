//! Segmented least squares: recover where a linear relation switches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segbeam::linalg::{dot_h, CMatrix, CVector, C64};
use segbeam::segmentation::sls_batch;

fn main() -> segbeam::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cn = move || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let (p, horizon) = (3, 300);
    let models: Vec<CVector> = (0..3).map(|_| CVector::from_fn(p, |_, _| cn())).collect();
    let x = CMatrix::from_fn(p, horizon, |_, _| cn());
    let d: Vec<C64> = (0..horizon)
        .map(|t| {
            let w = &models[if t < 120 {
                0
            } else if t < 210 {
                1
            } else {
                2
            }];
            dot_h(w.as_slice(), x.column(t).as_slice()) + cn() * 0.05
        })
        .collect();

    let seg = sls_batch(&x, &d, 1.0, 1e-3)?;
    println!(
        "switches at 120 and 210; found {:?}",
        seg.partition.changepoints()
    );
    for (s, w) in seg.partition.segments.iter().zip(&models) {
        println!(
            "  [{:3}, {:3}] weight error {:.3}",
            s.start,
            s.end,
            (&s.weights - w).norm()
        );
    }
    Ok(())
}
