//! Classical distortionless beamformers.
//!
//! Every weight vector `w` produced here satisfies `wᴴν = 1`. Outputs are
//! `z = wᴴx` (conjugate-transpose convention throughout).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, accumulate_outer, dot_h, hermitian_solve, norm_sqr, CMatrix, CVector, HermitianState, C64,
};
use crate::metrics::{RunTrace, TraceRecorder};
use crate::scenarios::ScenarioTruth;

/// Distortionless constraint direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    nu: CVector,
    norm_sqr: f64,
    look_angle: Option<f64>,
}

impl SteeringVector {
    pub fn new(nu: CVector) -> Result<Self> {
        if !linalg::all_finite(nu.as_slice()) {
            return Err(Error::numeric("non-finite steering vector"));
        }
        let norm_sqr = norm_sqr(nu.as_slice());
        if norm_sqr <= 0.0 {
            return Err(Error::contract("steering vector must be nonzero"));
        }
        Ok(Self {
            nu,
            norm_sqr,
            look_angle: None,
        })
    }

    pub fn with_look_angle(mut self, degrees: f64) -> Self {
        self.look_angle = Some(degrees);
        self
    }

    pub fn look_angle(&self) -> Option<f64> {
        self.look_angle
    }

    pub fn as_slice(&self) -> &[C64] {
        self.nu.as_slice()
    }

    pub fn vector(&self) -> &CVector {
        &self.nu
    }

    pub fn dim(&self) -> usize {
        self.nu.len()
    }

    /// `νᴴν`.
    pub fn norm_sqr(&self) -> f64 {
        self.norm_sqr
    }

    pub(crate) fn check_dim(&self, p: usize) -> Result<()> {
        if p != self.dim() {
            return Err(Error::contract(format!(
                "steering vector has {} entries, data has {p} channels",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// How the diagonal loading `δ` is chosen for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadingRule {
    /// A fixed `δ` in power units.
    Absolute { delta: f64 },
    /// `factor` times the average per-channel power of the first `snapshots` snapshots.
    RelativePower { factor: f64, snapshots: usize },
    /// `factor` times the average per-channel power of the whole record.
    RecordPower { factor: f64 },
}

impl Default for LoadingRule {
    fn default() -> Self {
        Self::RelativePower {
            factor: 1e-2,
            snapshots: 10,
        }
    }
}

/// Loading used when a relative rule has no data to look at.
pub const FALLBACK_LOADING: f64 = 1e-3;

impl LoadingRule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Absolute { delta } => delta.is_finite() && delta > 0.0,
            Self::RelativePower { factor, snapshots } => {
                factor.is_finite() && factor > 0.0 && snapshots > 0
            }
            Self::RecordPower { factor } => factor.is_finite() && factor > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid loading rule {self:?}")))
        }
    }

    pub fn resolve(&self, snapshots: &CMatrix) -> f64 {
        let (factor, n) = match *self {
            Self::Absolute { delta } => return delta,
            Self::RelativePower {
                factor,
                snapshots: n,
            } => (factor, n),
            Self::RecordPower { factor } => (factor, snapshots.ncols()),
        };
        let n = n.min(snapshots.ncols());
        let p = snapshots.nrows();
        if n == 0 || p == 0 {
            return FALLBACK_LOADING;
        }
        let power: f64 = (0..n)
            .map(|t| norm_sqr(snapshots.column(t).as_slice()))
            .sum::<f64>()
            / (n * p) as f64;
        if power > 0.0 && power.is_finite() {
            factor * power
        } else {
            FALLBACK_LOADING
        }
    }
}

/// Delay-and-sum weights `ν/(νᴴν)`.
pub fn conventional_weights(nu: &SteeringVector) -> CVector {
    nu.vector().unscale(nu.norm_sqr())
}

/// Normalizes a numerator `S⁻¹ν` into distortionless weights.
fn normalize_numerator(num: CVector, nu: &SteeringVector) -> Result<CVector> {
    let den = dot_h(nu.as_slice(), num.as_slice()).re;
    if !(den.is_finite() && den > 0.0) {
        return Err(Error::Singular(format!(
            "MVDR denominator νᴴS⁻¹ν = {den} is not positive"
        )));
    }
    Ok(num.unscale(den))
}

/// `S⁻¹ν / (νᴴS⁻¹ν)` from a maintained inverse.
pub fn mvdr_weights(cov: &HermitianState, nu: &SteeringVector) -> Result<CVector> {
    nu.check_dim(cov.dim())?;
    normalize_numerator(cov.apply(nu.as_slice()), nu)
}

/// Capon weights for an explicit covariance `R`, loaded by `δ ≥ 0`.
pub fn capon_weights(cov: &CMatrix, nu: &SteeringVector, delta: f64) -> Result<CVector> {
    nu.check_dim(cov.nrows())?;
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::contract(format!(
            "loading must be nonnegative, got {delta}"
        )));
    }
    let mut loaded = cov.clone();
    for k in 0..loaded.nrows() {
        loaded[(k, k)] += delta;
    }
    normalize_numerator(hermitian_solve(loaded, nu.as_slice())?, nu)
}

/// Batch SMI weights from a `p × n` snapshot block: `(X Xᴴ + δI)⁻¹ν`, normalized.
pub fn batch_mvdr_weights(x: &CMatrix, nu: &SteeringVector, delta: f64) -> Result<CVector> {
    nu.check_dim(x.nrows())?;
    normalize_numerator(linalg::regularized_gram_solve(x, nu.as_slice(), delta)?, nu)
}

/// Outputs of one recursive MVDR step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvdrStep {
    /// `w[t−1]ᴴ x[t]`: the causal signal estimate.
    pub output: C64,
    /// `w[t]ᴴ x[t]`: the post-update output that feeds the segment cost.
    pub posterior_output: C64,
}

/// Growing-window adaptive MVDR filter driven by Woodbury updates.
#[derive(Debug, Clone)]
pub struct MvdrFilter {
    cov: HermitianState,
    nu: SteeringVector,
    num: CVector,
    den: f64,
    w: CVector,
    cost: f64,
    prior_cost: f64,
    start_index: usize,
    updates: usize,
}

impl MvdrFilter {
    /// `S⁻¹ = I/δ`, `P = ν/δ`, `w = ν/(νᴴν)`.
    pub fn new(nu: &SteeringVector, delta: f64, start_index: usize) -> Result<Self> {
        let cov = HermitianState::new(nu.dim(), delta)?;
        let num = nu.vector().unscale(delta);
        let den = nu.norm_sqr() / delta;
        Ok(Self {
            cov,
            nu: nu.clone(),
            num,
            den,
            w: conventional_weights(nu),
            cost: 0.0,
            prior_cost: 0.0,
            start_index,
            updates: 0,
        })
    }

    pub fn weights(&self) -> &CVector {
        &self.w
    }

    /// Accumulated `Σ |w[t]ᴴx[t]|²` using post-update weights.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// Accumulated `Σ |w[t−1]ᴴx[t]|²`: the power of the causal outputs.
    pub fn prior_cost(&self) -> f64 {
        self.prior_cost
    }

    /// Output power `wᴴ G w` of the current weights over every absorbed snapshot,
    /// where `G` is the unloaded Gram matrix. Uses `(G + δI) P = ν`, so it costs `O(p)`.
    pub fn batch_cost(&self) -> f64 {
        let w_sq = crate::linalg::norm_sqr(self.w.as_slice());
        (1.0 / self.den - self.cov.loading() * w_sq).max(0.0)
    }

    pub fn start_index(&self) -> usize {
        self.start_index
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn steering(&self) -> &SteeringVector {
        &self.nu
    }

    pub fn numerator(&self) -> &CVector {
        &self.num
    }

    pub fn denominator(&self) -> f64 {
        self.den
    }

    pub fn covariance(&self) -> &HermitianState {
        &self.cov
    }

    /// Applies the current weights without updating anything.
    pub fn output(&self, x: &[C64]) -> C64 {
        dot_h(self.w.as_slice(), x)
    }

    pub fn step(&mut self, x: &[C64]) -> Result<MvdrStep> {
        let output = self.output(x);
        let update = self.cov.rank1_update(x)?;
        let u = update.gain;
        let proj = dot_h(u.as_slice(), self.nu.as_slice()) / update.gamma;
        for (n, ui) in self.num.iter_mut().zip(u.iter()) {
            *n -= ui * proj;
        }
        let den = dot_h(self.nu.as_slice(), self.num.as_slice()).re;
        if !(den.is_finite() && den > 0.0) {
            return Err(Error::Singular(format!(
                "MVDR denominator collapsed to {den} after {} updates",
                self.updates
            )));
        }
        self.den = den;
        let inv_den = 1.0 / den;
        for (wi, ni) in self.w.iter_mut().zip(self.num.iter()) {
            *wi = ni * inv_den;
        }
        let posterior_output = self.output(x);
        self.cost += posterior_output.norm_sqr();
        self.prior_cost += output.norm_sqr();
        self.updates += 1;
        Ok(MvdrStep {
            output,
            posterior_output,
        })
    }
}

/// Generalized sidelobe canceller with an RLS adaptive branch.
#[derive(Debug, Clone)]
pub struct GscFilter {
    wq: CVector,
    blocking: CMatrix,
    wa: CVector,
    cov: HermitianState,
}

/// `I − ν(νᴴν)⁻¹νᴴ`, the orthogonal projector onto the complement of ν.
pub fn blocking_matrix(nu: &SteeringVector) -> CMatrix {
    let p = nu.dim();
    let v = nu.vector();
    CMatrix::identity(p, p) - (v * v.adjoint()).unscale(nu.norm_sqr())
}

/// Branch signals of one GSC step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GscStep {
    pub output: C64,
    pub quiescent: C64,
}

impl GscFilter {
    pub fn new(nu: &SteeringVector, delta: f64) -> Result<Self> {
        let p = nu.dim();
        Ok(Self {
            wq: conventional_weights(nu),
            blocking: blocking_matrix(nu),
            wa: CVector::zeros(p),
            cov: HermitianState::new(p, delta)?,
        })
    }

    pub fn quiescent(&self) -> &CVector {
        &self.wq
    }

    pub fn blocking(&self) -> &CMatrix {
        &self.blocking
    }

    pub fn adaptive(&self) -> &CVector {
        &self.wa
    }

    /// Equivalent direct-form weights `w_q − B w_a`.
    pub fn total_weights(&self) -> CVector {
        &self.wq - &self.blocking * &self.wa
    }

    pub fn step(&mut self, x: &[C64]) -> Result<GscStep> {
        if x.len() != self.wq.len() {
            return Err(Error::contract("snapshot dimension mismatch"));
        }
        let xv = CVector::from_column_slice(x);
        let quiescent = dot_h(self.wq.as_slice(), x);
        let blocked = self.blocking.adjoint() * &xv;
        let output = quiescent - dot_h(self.wa.as_slice(), blocked.as_slice());
        let update = self.cov.rank1_update(blocked.as_slice())?;
        let scale = output.conj() / update.gamma;
        for (wa, k) in self.wa.iter_mut().zip(update.gain.iter()) {
            *wa += k * scale;
        }
        Ok(GscStep { output, quiescent })
    }
}

/// Batch GSC solution: `w_a = (U Uᴴ + δI)⁻¹ U d*` with `U = BᴴX`, `d = w_qᴴX`.
pub fn gsc_batch_weights(x: &CMatrix, nu: &SteeringVector, delta: f64) -> Result<CVector> {
    nu.check_dim(x.nrows())?;
    let wq = conventional_weights(nu);
    let blocking = blocking_matrix(nu);
    let blocked = blocking.adjoint() * x;
    let desired: CVector = x.adjoint() * &wq; // d* per snapshot
    let rhs = &blocked * desired;
    let wa = linalg::regularized_gram_solve(&blocked, rhs.as_slice(), delta)?;
    Ok(&wq - &blocking * wa)
}

fn check_snapshots(x: &CMatrix, nu: &SteeringVector) -> Result<()> {
    nu.check_dim(x.nrows())?;
    if !linalg::all_finite(x.as_slice()) {
        return Err(Error::numeric("non-finite snapshot"));
    }
    Ok(())
}

/// Fixed conventional beamformer.
pub fn cbf_run(x: &CMatrix, nu: &SteeringVector, stride: usize) -> Result<RunTrace> {
    check_snapshots(x, nu)?;
    fixed_weight_run(x, &conventional_weights(nu), stride)
}

/// Batch SMI Capon: one loaded weight vector from the whole record.
pub fn batch_capon_run(
    x: &CMatrix,
    nu: &SteeringVector,
    delta: f64,
    stride: usize,
) -> Result<RunTrace> {
    check_snapshots(x, nu)?;
    fixed_weight_run(x, &batch_mvdr_weights(x, nu, delta)?, stride)
}

fn fixed_weight_run(x: &CMatrix, w: &CVector, stride: usize) -> Result<RunTrace> {
    let mut rec = TraceRecorder::new(stride, x.ncols());
    for t in 0..x.ncols() {
        let z = dot_h(w.as_slice(), x.column(t).as_slice());
        rec.push(t, z, || w.clone());
    }
    Ok(rec.finish())
}

/// Growing-window adaptive MVDR; emits `z[t]` with the prior weights.
pub fn adaptive_mvdr_run(
    x: &CMatrix,
    nu: &SteeringVector,
    delta: f64,
    stride: usize,
) -> Result<RunTrace> {
    check_snapshots(x, nu)?;
    let mut filter = MvdrFilter::new(nu, delta, 0)?;
    let mut rec = TraceRecorder::new(stride, x.ncols());
    for t in 0..x.ncols() {
        let weights = rec.wants(t).then(|| filter.weights().clone());
        let step = filter.step(x.column(t).as_slice())?;
        rec.push(t, step.output, || weights.expect("sampled"));
    }
    Ok(rec.finish())
}

/// Streaming GSC run.
pub fn gsc_run(x: &CMatrix, nu: &SteeringVector, delta: f64, stride: usize) -> Result<RunTrace> {
    check_snapshots(x, nu)?;
    let mut filter = GscFilter::new(nu, delta)?;
    let mut rec = TraceRecorder::new(stride, x.ncols());
    for t in 0..x.ncols() {
        let weights = rec.wants(t).then(|| filter.total_weights());
        let step = filter.step(x.column(t).as_slice())?;
        rec.push(t, step.output, || weights.expect("sampled"));
    }
    Ok(rec.finish())
}

/// Resync period for the running window Gram; bounds add/subtract drift.
const GRAM_REFRESH: usize = 512;

/// Sliding-window MPDR over the `window` most recent snapshots strictly before `t`.
///
/// Uses the unnormalized Gram `Σ x xᴴ + δI`; the MVDR weights are invariant to
/// the `1/K` scale, so only the effective loading differs from a normalized SCM.
pub fn sliding_mpdr_run(
    x: &CMatrix,
    nu: &SteeringVector,
    window: usize,
    delta: f64,
    stride: usize,
) -> Result<RunTrace> {
    if window == 0 {
        return Err(Error::contract("sliding window length must be at least 1"));
    }
    check_snapshots(x, nu)?;
    let p = x.nrows();
    let horizon = x.ncols();
    let mut gram = CMatrix::zeros(p, p);
    let mut rec = TraceRecorder::new(stride, horizon);
    let cbf = conventional_weights(nu);
    for t in 0..horizon {
        let w = if t == 0 {
            cbf.clone()
        } else {
            let newest = t - 1;
            if t % GRAM_REFRESH == 0 {
                let lo = t.saturating_sub(window);
                gram = linalg::gram(&x.columns(lo, t - lo).into_owned());
            } else {
                accumulate_outer(&mut gram, x.column(newest).as_slice(), 1.0);
                if newest >= window {
                    accumulate_outer(&mut gram, x.column(newest - window).as_slice(), -1.0);
                }
            }
            normalize_numerator(linalg::solve_loaded(&gram, nu.as_slice(), delta)?, nu)?
        };
        let z = dot_h(w.as_slice(), x.column(t).as_slice());
        rec.push(t, z, || w);
    }
    Ok(rec.finish())
}

/// Capon weights from the exact ensemble covariance at every snapshot.
pub fn omniscient_capon_run(
    truth: &ScenarioTruth,
    nu: &SteeringVector,
    delta: f64,
    stride: usize,
) -> Result<RunTrace> {
    let x = truth.snapshots();
    check_snapshots(x, nu)?;
    let weights = truth
        .states()
        .iter()
        .map(|state| capon_weights(&state.covariance, nu, delta))
        .collect::<Result<Vec<_>>>()?;
    let mut rec = TraceRecorder::new(stride, x.ncols());
    for t in 0..x.ncols() {
        let w = &weights[truth.state_index(t)];
        let z = dot_h(w.as_slice(), x.column(t).as_slice());
        rec.push(t, z, || w.clone());
    }
    Ok(rec.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cvec(rng: &mut ChaCha8Rng, n: usize) -> CVector {
        CVector::from_fn(n, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn random_block(rng: &mut ChaCha8Rng, p: usize, n: usize) -> CMatrix {
        CMatrix::from_fn(p, n, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn loading_rules_scale_with_the_data() {
        // Quiet opening, loud tail: only the whole-record rule sees the tail.
        let x = CMatrix::from_fn(2, 20, |_, t| C64::new(if t < 10 { 1.0 } else { 3.0 }, 0.0));
        let opening = LoadingRule::RelativePower {
            factor: 0.5,
            snapshots: 10,
        };
        assert!((opening.resolve(&x) - 0.5).abs() < 1e-15);
        let record = LoadingRule::RecordPower { factor: 10.0 };
        assert!((record.resolve(&x) - 50.0).abs() < 1e-12);
        assert_eq!(LoadingRule::Absolute { delta: 7.0 }.resolve(&x), 7.0);
        assert_eq!(record.resolve(&CMatrix::zeros(2, 0)), FALLBACK_LOADING);
        assert!(LoadingRule::RecordPower { factor: 0.0 }.validate().is_err());
    }

    fn rel_err(a: &CVector, b: &CVector) -> f64 {
        (a - b).norm() / b.norm()
    }

    fn distortion(w: &CVector, nu: &SteeringVector) -> f64 {
        (dot_h(w.as_slice(), nu.as_slice()) - ONE).norm()
    }

    /// Interference scene: `n` snapshots with a strong source along `dir`.
    fn interference_block(rng: &mut ChaCha8Rng, dir: &CVector, inr: f64, n: usize) -> CMatrix {
        let p = dir.len();
        CMatrix::from_columns(
            &(0..n)
                .map(|_| {
                    let amp =
                        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * inr.sqrt();
                    dir * amp + random_cvec(rng, p) * C64::new(0.3, 0.0)
                })
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn conventional_all_ones() {
        let nu = SteeringVector::new(CVector::from_element(4, ONE)).unwrap();
        let w = conventional_weights(&nu);
        assert!(w.iter().all(|v| (v - C64::new(0.25, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn conventional_unit_vector() {
        let mut e2 = CVector::zeros(3);
        e2[1] = ONE;
        let nu = SteeringVector::new(e2.clone()).unwrap();
        assert_eq!(conventional_weights(&nu), e2);
    }

    #[test]
    fn conventional_random_is_distortionless() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let nu = SteeringVector::new(random_cvec(&mut rng, 9)).unwrap();
        assert!(distortion(&conventional_weights(&nu), &nu) < 1e-12);
    }

    #[test]
    fn zero_steering_rejected() {
        assert!(matches!(
            SteeringVector::new(CVector::zeros(3)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn mvdr_on_scaled_identity_is_conventional() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let nu = SteeringVector::new(random_cvec(&mut rng, 5)).unwrap();
        let cov = HermitianState::new(5, 0.7).unwrap();
        let w = mvdr_weights(&cov, &nu).unwrap();
        assert!(rel_err(&w, &conventional_weights(&nu)) < 1e-14);
    }

    #[test]
    fn orthogonal_weak_interferer_leaves_conventional() {
        let nu = SteeringVector::new(CVector::from_element(4, ONE)).unwrap();
        let u = CVector::from_vec(vec![ONE, -ONE, ONE, -ONE]);
        let cbf = conventional_weights(&nu);
        let mut prev = f64::INFINITY;
        for inr in [1.0, 1e-2, 1e-4, 1e-6] {
            let cov = CMatrix::identity(4, 4) + (&u * u.adjoint()) * C64::new(inr, 0.0);
            let w = capon_weights(&cov, &nu, 0.0).unwrap();
            let err = rel_err(&w, &cbf);
            assert!(err <= prev + 1e-15);
            prev = err;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn mvdr_matches_lagrangian_minimizer_and_suppresses() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = 4;
        let nu = SteeringVector::new(CVector::from_element(p, ONE)).unwrap();
        let dir = CVector::from_fn(p, |m, _| C64::from_polar(1.0, 1.3 * m as f64));
        let x = interference_block(&mut rng, &dir, 100.0, 200);
        let delta = 1e-3;
        let w = batch_mvdr_weights(&x, &nu, delta).unwrap();

        // Lagrangian stationarity: R w = λ ν. Recover λ and check against a dense inverse.
        let mut r = linalg::gram(&x);
        for k in 0..p {
            r[(k, k)] += C64::new(delta, 0.0);
        }
        let rinv_nu = r.clone().lu().solve(nu.vector()).unwrap();
        let lagrange = 1.0 / dot_h(nu.as_slice(), rinv_nu.as_slice()).re;
        let oracle = rinv_nu * C64::new(lagrange, 0.0);
        assert!(rel_err(&w, &oracle) < 1e-10);
        assert!(distortion(&w, &nu) < 1e-9);

        let cbf = conventional_weights(&nu);
        let leak_mvdr = dot_h(w.as_slice(), dir.as_slice()).norm_sqr();
        let leak_cbf = dot_h(cbf.as_slice(), dir.as_slice()).norm_sqr();
        assert!(leak_mvdr < 1e-3 * leak_cbf);
    }

    #[test]
    fn first_adaptive_output_is_conventional() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let nu = SteeringVector::new(random_cvec(&mut rng, 6)).unwrap();
        let x = random_cvec(&mut rng, 6);
        let mut f = MvdrFilter::new(&nu, 0.1, 0).unwrap();
        let step = f.step(x.as_slice()).unwrap();
        let expected = dot_h(nu.as_slice(), x.as_slice()) / nu.norm_sqr();
        assert!((step.output - expected).norm() < 1e-14);
    }

    #[test]
    fn zero_snapshot_keeps_filter_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let nu = SteeringVector::new(random_cvec(&mut rng, 4)).unwrap();
        let mut f = MvdrFilter::new(&nu, 0.1, 0).unwrap();
        for _ in 0..5 {
            f.step(random_cvec(&mut rng, 4).as_slice()).unwrap();
        }
        let w_before = f.weights().clone();
        let cost_before = f.cost();
        let step = f.step(&[ZERO; 4]).unwrap();
        assert_eq!(step.output, ZERO);
        assert!(rel_err(f.weights(), &w_before) < 1e-14);
        assert_eq!(f.cost(), cost_before);
        assert_eq!(f.updates(), 6);
    }

    #[test]
    fn adaptive_converges_to_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = 5;
        let nu = SteeringVector::new(CVector::from_element(p, ONE)).unwrap();
        let dir = CVector::from_fn(p, |m, _| C64::from_polar(1.0, 0.9 * m as f64));
        let x = interference_block(&mut rng, &dir, 50.0, 800);
        let delta = 0.05;
        let mut f = MvdrFilter::new(&nu, delta, 0).unwrap();
        let mut last_cost = 0.0;
        for t in 0..x.ncols() {
            f.step(x.column(t).as_slice()).unwrap();
            assert!(f.cost() >= last_cost);
            last_cost = f.cost();
            let den = dot_h(nu.as_slice(), f.numerator().as_slice()).re;
            assert!((den - f.denominator()).abs() <= 1e-9 * den);
            assert!(distortion(f.weights(), &nu) < 1e-9);
        }
        let batch = batch_mvdr_weights(&x, &nu, delta).unwrap();
        assert!(rel_err(f.weights(), &batch) < 1e-6);
    }

    #[test]
    fn blocking_annihilates_steering() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for p in [2, 5, 16] {
            let nu = SteeringVector::new(random_cvec(&mut rng, p)).unwrap();
            let b = blocking_matrix(&nu);
            let bn = &b * nu.vector();
            assert!(bn.iter().all(|v| v.norm() < 1e-10));
            let gsc = GscFilter::new(&nu, 1.0).unwrap();
            assert!(distortion(gsc.quiescent(), &nu) < 1e-10);
        }
    }

    #[test]
    fn gsc_pure_target_passes_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let nu = SteeringVector::new(random_cvec(&mut rng, 4)).unwrap();
        let mut gsc = GscFilter::new(&nu, 0.1).unwrap();
        // Train on noise so w_a is nonzero first.
        for _ in 0..20 {
            gsc.step(random_cvec(&mut rng, 4).as_slice()).unwrap();
        }
        let wa_before = gsc.adaptive().clone();
        let c = C64::new(0.7, -1.2);
        let x = nu.vector() * c;
        let step = gsc.step(x.as_slice()).unwrap();
        assert!((step.output - c).norm() < 1e-10);
        assert!((gsc.adaptive() - wa_before).norm() < 1e-10);
    }

    #[test]
    fn gsc_first_output_is_quiescent() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let nu = SteeringVector::new(random_cvec(&mut rng, 6)).unwrap();
        let mut gsc = GscFilter::new(&nu, 0.1).unwrap();
        let step = gsc.step(random_cvec(&mut rng, 6).as_slice()).unwrap();
        assert_eq!(step.output, step.quiescent);
    }

    #[test]
    fn gsc_stream_matches_batch_mvdr() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = 6;
        let nu = SteeringVector::new(CVector::from_element(p, ONE)).unwrap();
        let dir = CVector::from_fn(p, |m, _| C64::from_polar(1.0, 2.1 * m as f64));
        let x = interference_block(&mut rng, &dir, 30.0, 2000);
        let mut gsc = GscFilter::new(&nu, 1e-8).unwrap();
        for t in 0..x.ncols() {
            gsc.step(x.column(t).as_slice()).unwrap();
        }
        let batch = batch_mvdr_weights(&x, &nu, 1e-8).unwrap();
        assert!(rel_err(&gsc.total_weights(), &batch) < 1e-4);
    }

    #[test]
    fn sliding_with_full_window_matches_growing() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let p = 4;
        let nu = SteeringVector::new(random_cvec(&mut rng, p)).unwrap();
        let x = random_block(&mut rng, p, 300);
        let delta = 0.2;
        let sliding = sliding_mpdr_run(&x, &nu, 300, delta, 1).unwrap();
        let growing = adaptive_mvdr_run(&x, &nu, delta, 1).unwrap();
        for (a, b) in sliding.z.iter().zip(&growing.z) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn sliding_single_snapshot_is_cbf() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let nu = SteeringVector::new(random_cvec(&mut rng, 3)).unwrap();
        let x = random_block(&mut rng, 3, 1);
        let run = sliding_mpdr_run(&x, &nu, 8, 0.1, 1).unwrap();
        let cbf = cbf_run(&x, &nu, 1).unwrap();
        assert_eq!(run.z, cbf.z);
    }

    #[test]
    fn sliding_zero_window_rejected() {
        let nu = SteeringVector::new(CVector::from_element(2, ONE)).unwrap();
        let x = CMatrix::zeros(2, 4);
        assert!(matches!(
            sliding_mpdr_run(&x, &nu, 0, 0.1, 1),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn sliding_window_matches_direct_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let p = 3;
        let nu = SteeringVector::new(random_cvec(&mut rng, p)).unwrap();
        let x = random_block(&mut rng, p, 1100);
        let k = 40;
        let run = sliding_mpdr_run(&x, &nu, k, 0.1, 1).unwrap();
        for &t in &[1usize, 39, 40, 41, 600, 1024, 1099] {
            let lo = t.saturating_sub(k);
            let block = x.columns(lo, t - lo).into_owned();
            let w = batch_mvdr_weights(&block, &nu, 0.1).unwrap();
            let (_, recorded) = &run.weights_at[t];
            assert!(rel_err(recorded, &w) < 1e-9, "t = {t}");
        }
    }
}
