//! Evaluation metrics and spatial diagnostics.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::beamformers::SteeringVector;
use crate::error::{Error, Result};
use crate::linalg::{dot_h, hermitian_form, norm_sqr, CMatrix, CVector, C64};
use crate::scenarios::{ula_steering, ArrayGeometry, ScenarioTruth};

/// Value reported by [`sinr_trace`] when the target carries no power.
pub const SINR_FLOOR_DB: f64 = -300.0;

/// Everything a beamformer run leaves behind.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    /// Signal estimate per snapshot.
    pub z: Vec<C64>,
    /// Weight vectors that produced `z[t]`, sampled at the recorder stride.
    pub weights_at: Vec<(usize, CVector)>,
    /// Segment start indices declared by segmenting beamformers.
    pub changepoints: Vec<usize>,
    /// Running `Σ_{k≤t} |z[k]|²`.
    pub cumulative_cost: Vec<f64>,
}

/// Incrementally builds a [`RunTrace`].
#[derive(Debug)]
pub struct TraceRecorder {
    stride: usize,
    power: f64,
    trace: RunTrace,
}

impl TraceRecorder {
    /// `stride = 0` disables weight sampling.
    pub fn new(stride: usize, capacity: usize) -> Self {
        Self {
            stride,
            power: 0.0,
            trace: RunTrace {
                z: Vec::with_capacity(capacity),
                weights_at: Vec::new(),
                changepoints: Vec::new(),
                cumulative_cost: Vec::with_capacity(capacity),
            },
        }
    }

    pub fn wants(&self, t: usize) -> bool {
        self.stride > 0 && t.is_multiple_of(self.stride)
    }

    pub fn push(&mut self, t: usize, z: C64, weights: impl FnOnce() -> CVector) {
        if self.wants(t) {
            self.trace.weights_at.push((t, weights()));
        }
        self.power += z.norm_sqr();
        self.trace.z.push(z);
        self.trace.cumulative_cost.push(self.power);
    }

    pub fn changepoint(&mut self, t: usize) {
        self.trace.changepoints.push(t);
    }

    pub fn finish(self) -> RunTrace {
        self.trace
    }
}

/// Weight sampling stride: every snapshot up to 5000, every 10th beyond.
pub fn default_weight_stride(horizon: usize) -> usize {
    if horizon <= 5000 {
        1
    } else {
        10
    }
}

/// Cumulative mean of `|z − s|²`.
pub fn mse_trace(z: &[C64], target: &[C64]) -> Result<Vec<f64>> {
    if z.len() != target.len() {
        return Err(Error::contract(format!(
            "estimate has {} samples, target has {}",
            z.len(),
            target.len()
        )));
    }
    let mut acc = 0.0;
    Ok(z.iter()
        .zip(target)
        .enumerate()
        .map(|(t, (zi, si))| {
            acc += (zi - si).norm_sqr();
            acc / (t + 1) as f64
        })
        .collect())
}

/// White-noise gain `|wᴴν|² / ‖w‖²`.
pub fn wng(w: &CVector, nu: &SteeringVector) -> Result<f64> {
    let energy = norm_sqr(w.as_slice());
    if energy <= 0.0 {
        return Err(Error::contract("white-noise gain of a zero weight vector"));
    }
    if w.len() != nu.dim() {
        return Err(Error::contract("weight and steering dimensions differ"));
    }
    Ok(dot_h(w.as_slice(), nu.as_slice()).norm_sqr() / energy)
}

/// Array response `20·log10|wᴴν(θ)|` over a grid of angles (degrees).
pub fn beampattern(w: &CVector, geometry: &ArrayGeometry, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::contract("beampattern grid is empty"));
    }
    if w.len() != geometry.num_elements {
        return Err(Error::contract("weights do not match the array size"));
    }
    grid.iter()
        .map(|&angle| {
            let nu = ula_steering(geometry, angle)?;
            Ok(20.0 * dot_h(w.as_slice(), nu.as_slice()).norm().log10())
        })
        .collect()
}

/// Output SINR in dB at each sampled weight vector, against the true covariance.
pub fn sinr_trace(weights_at: &[(usize, CVector)], truth: &ScenarioTruth) -> Result<Vec<f64>> {
    let nu = truth.steering();
    let signal_power = truth.signal_power();
    weights_at
        .iter()
        .map(|(t, w)| {
            if *t >= truth.horizon() {
                return Err(Error::contract(format!(
                    "weight sample at t = {t} beyond horizon {}",
                    truth.horizon()
                )));
            }
            if signal_power <= 0.0 {
                return Ok(SINR_FLOOR_DB);
            }
            let gain = dot_h(w.as_slice(), nu.as_slice()).norm_sqr();
            let residual = hermitian_form(truth.interference_plus_noise(*t), w.as_slice());
            let sinr = signal_power * gain / residual;
            if sinr > 0.0 && sinr.is_finite() {
                Ok(10.0 * sinr.log10())
            } else {
                Ok(SINR_FLOOR_DB)
            }
        })
        .collect()
}

/// Bearing-time record: output power per steering angle (rows) and time block (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct BearingTimeRecord {
    pub angles: Vec<f64>,
    /// First snapshot index of each column.
    pub times: Vec<usize>,
    /// Linear power, `angles.len() × times.len()`.
    pub power: DMatrix<f64>,
}

impl BearingTimeRecord {
    /// Angle of maximum power in each column.
    pub fn peak_track(&self) -> Vec<f64> {
        (0..self.power.ncols())
            .map(|c| {
                let col = self.power.column(c);
                let (idx, _) =
                    col.iter()
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                            if v > best.1 {
                                (i, v)
                            } else {
                                best
                            }
                        });
                self.angles[idx]
            })
            .collect()
    }

    /// Mean power per angle over all columns.
    pub fn time_average(&self) -> Vec<f64> {
        let n = self.power.ncols().max(1) as f64;
        (0..self.power.nrows())
            .map(|r| self.power.row(r).sum() / n)
            .collect()
    }
}

/// Runs `runner` once per steering angle on the same snapshots and records `|z|²`,
/// averaged over blocks of `average` snapshots (`1` keeps every snapshot).
pub fn btr<F>(
    x: &CMatrix,
    geometry: &ArrayGeometry,
    grid: &[f64],
    average: usize,
    runner: F,
) -> Result<BearingTimeRecord>
where
    F: Fn(&CMatrix, &SteeringVector) -> Result<Vec<C64>> + Sync,
{
    if grid.is_empty() {
        return Err(Error::contract("bearing grid is empty"));
    }
    let average = average.max(1);
    let horizon = x.ncols();
    let times: Vec<usize> = (0..horizon).step_by(average).collect();
    let rows = grid
        .par_iter()
        .map(|&angle| {
            let nu = ula_steering(geometry, angle)?;
            let z = runner(x, &nu)?;
            if z.len() != horizon {
                return Err(Error::contract(
                    "runner returned a trace of the wrong length",
                ));
            }
            Ok(times
                .iter()
                .map(|&t0| {
                    let block = &z[t0..(t0 + average).min(horizon)];
                    block.iter().map(|v| v.norm_sqr()).sum::<f64>() / block.len() as f64
                })
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let power = DMatrix::from_fn(grid.len(), times.len(), |r, c| rows[r][c]);
    Ok(BearingTimeRecord {
        angles: grid.to_vec(),
        times,
        power,
    })
}
