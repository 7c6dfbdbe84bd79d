//! Recursive inverse of a loaded sample covariance, checked against a dense inverse.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segbeam::linalg::{CMatrix, HermitianState, C64};

fn main() -> segbeam::Result<()> {
    let (p, horizon, delta) = (8, 400, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut state = HermitianState::new(p, delta)?;
    let mut dense = CMatrix::identity(p, p) * C64::new(delta, 0.0);

    for t in 1..=horizon {
        let x: Vec<C64> = (0..p)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let step = state.rank1_update(&x)?;
        let col = CMatrix::from_column_slice(p, 1, &x);
        dense += &col * col.adjoint();
        if t % 100 == 0 {
            let direct = dense
                .clone()
                .lu()
                .try_inverse()
                .expect("loaded covariance is invertible");
            let err = (state.inverse() - &direct).norm() / direct.norm();
            println!(
                "t={t:4}  gamma={:8.3}  relative error {err:.2e}",
                step.gamma
            );
        }
    }
    Ok(())
}
