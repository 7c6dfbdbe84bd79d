//! Randomized oracle suites: recursive inverses against dense inversion and
//! the DP engines against exhaustive enumeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::beamformers::SteeringVector;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, HermitianState, C64};
use crate::segmentation::{bsb, exhaustive_dp_oracle, mvdr_segment, ridge_segment, sls_batch};

/// Worst relative error seen by one suite.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub name: &'static str,
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

fn uniform_c64(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Relative Frobenius error of the recursive inverse after one random stream.
pub fn woodbury_stream_error(
    dim: usize,
    len: usize,
    delta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut state = HermitianState::new(dim, delta)?;
    let mut dense = CMatrix::identity(dim, dim) * C64::new(delta, 0.0);
    for _ in 0..len {
        let x = CVector::from_fn(dim, |_, _| uniform_c64(rng));
        state.rank1_update(x.as_slice())?;
        dense += &x * x.adjoint();
    }
    let direct = dense
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::numeric("dense oracle matrix is singular"))?;
    Ok(frobenius(&(state.inverse() - &direct)) / frobenius(&direct))
}

/// Random streams with `p ≤ 16`, `T ≤ 500`.
pub fn woodbury_suite(streams: usize, seed: u64) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0f64;
    for _ in 0..streams {
        let dim = rng.gen_range(1..=16);
        let len = rng.gen_range(1..=500);
        let delta = rng.gen_range(0.1..2.0);
        worst = worst.max(woodbury_stream_error(dim, len, delta, &mut rng)?);
    }
    Ok(OracleReport {
        name: "woodbury",
        cases: streams,
        worst,
        tolerance: 1e-8,
    })
}

fn tabulate(horizon: usize, cost: impl Fn(usize, usize) -> Result<f64>) -> Result<Vec<Vec<f64>>> {
    (0..horizon)
        .map(|s| {
            (0..horizon)
                .map(|e| if e < s { Ok(0.0) } else { cost(s, e) })
                .collect()
        })
        .collect()
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Random instances with `T ≤ 12`, `p ≤ 4`, comparing [`sls_batch`] and
/// [`bsb`] to exhaustive enumeration of directly solved segment costs.
pub fn dp_suite(instances: usize, seed: u64) -> Result<[OracleReport; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sls_worst, mut bsb_worst) = (0f64, 0f64);
    for _ in 0..instances {
        let horizon = rng.gen_range(1..=12);
        let p = rng.gen_range(1..=4);
        let penalty = rng.gen_range(0.05..2.0);
        let delta = rng.gen_range(0.01..0.5);
        let x = CMatrix::from_fn(p, horizon, |_, _| uniform_c64(&mut rng));
        let d: Vec<C64> = (0..horizon).map(|_| uniform_c64(&mut rng)).collect();
        let nu = SteeringVector::new(CVector::from_fn(p, |_, _| uniform_c64(&mut rng)))?;

        let table = tabulate(horizon, |s, e| Ok(ridge_segment(&x, &d, s, e, delta)?.1))?;
        let (best, _) = exhaustive_dp_oracle(horizon, penalty, |s, e| table[s][e])?;
        let got = sls_batch(&x, &d, penalty, delta)?.partition.total_cost;
        sls_worst = sls_worst.max(relative_gap(got, best));

        let table = tabulate(horizon, |s, e| Ok(mvdr_segment(&x, &nu, s, e, delta)?.1))?;
        let (best, _) = exhaustive_dp_oracle(horizon, penalty, |s, e| table[s][e])?;
        let got = bsb(&x, &nu, penalty, delta)?.partition.total_cost;
        bsb_worst = bsb_worst.max(relative_gap(got, best));
    }
    let report = |name, worst| OracleReport {
        name,
        cases: instances,
        worst,
        tolerance: 1e-10,
    };
    Ok([report("sls_dp", sls_worst), report("bsb_dp", bsb_worst)])
}
