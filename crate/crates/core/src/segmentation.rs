//! Penalized segmentation by dynamic programming, batch and online.
//!
//! Time indices are 0-based and segment bounds are inclusive. A partition of
//! `0..T` into `K` segments costs `Σ ℰ(segment) + C·K`.
//!
//! The batch engines ([`sls_batch`], [`bsb`]) find the global optimum. The
//! online engines ([`osrls`], [`OnlineSegmenter`]) keep a bank of candidate
//! filters, one per hypothesized start of the current segment, and commit to
//! a new start only when it beats the active one by more than `min_seg`
//! snapshots.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamformers::{
    batch_mvdr_weights, blocking_matrix, conventional_weights, MvdrFilter, SteeringVector,
};
use crate::error::{Error, Result};
use crate::linalg::{self, dot_h, CMatrix, CVector, HermitianState, C64};
use crate::metrics::{RunTrace, TraceRecorder};

/// Largest horizon [`exhaustive_dp_oracle`] accepts.
pub const EXHAUSTIVE_MAX_HORIZON: usize = 20;

/// Default size of the online candidate bank.
pub const DEFAULT_MAX_CANDIDATES: usize = 64;

/// Starts processed per parallel batch in the batch DP.
const ROW_BLOCK: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub weights: CVector,
    pub cost: f64,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub segments: Vec<Segment>,
    pub total_cost: f64,
}

impl Partition {
    /// Starts of every segment after the first.
    pub fn changepoints(&self) -> Vec<usize> {
        self.segments.iter().skip(1).map(|s| s.start).collect()
    }

    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    /// `Σ segment costs + C·K`.
    pub fn recomputed_cost(&self, penalty: f64) -> f64 {
        self.segments.iter().map(|s| s.cost).sum::<f64>() + penalty * self.segments.len() as f64
    }

    /// Checks that the segments tile `0..horizon` in order.
    pub fn validate(&self, horizon: usize) -> Result<()> {
        let mut next = 0;
        for s in &self.segments {
            if s.start != next || s.end < s.start {
                return Err(Error::contract(format!(
                    "segment [{}, {}] does not continue at {next}",
                    s.start, s.end
                )));
            }
            next = s.end + 1;
        }
        if next != horizon {
            return Err(Error::contract(format!(
                "partition covers 0..{next}, expected 0..{horizon}"
            )));
        }
        Ok(())
    }
}

/// Forward-pass state of the batch dynamic program.
#[derive(Debug, Clone, PartialEq)]
pub struct DpTable {
    /// `e[j]`: optimal penalized cost of the first `j` snapshots; `e[0] = 0`.
    pub e: Vec<f64>,
    /// `split[j]`: start of the last segment in the optimum for `e[j]`.
    pub split: Vec<usize>,
}

impl DpTable {
    /// Boundaries `(start, end)` of the optimal partition, in time order.
    pub fn traceback(&self) -> Vec<(usize, usize)> {
        let mut bounds = Vec::new();
        let mut j = self.e.len() - 1;
        while j > 0 {
            let s = self.split[j];
            bounds.push((s, j - 1));
            j = s;
        }
        bounds.reverse();
        bounds
    }

    pub fn optimal_cost(&self) -> f64 {
        *self.e.last().unwrap_or(&0.0)
    }
}

/// Runs the penalized DP over `horizon` snapshots.
///
/// `row(start, costs)` must fill `costs[k]` with the cost of segment
/// `[start, start + k]` for every `k < horizon − start`. Rows are computed in
/// parallel; the minimization is sequential, visiting starts in increasing
/// order and keeping the earliest start on ties.
pub fn optimal_partition<F>(horizon: usize, penalty: f64, row: F) -> Result<DpTable>
where
    F: Fn(usize, &mut [f64]) -> Result<()> + Sync,
{
    if horizon == 0 {
        return Err(Error::contract("cannot segment an empty record"));
    }
    if !(penalty.is_finite() && penalty >= 0.0) {
        return Err(Error::contract(format!(
            "penalty must be finite and ≥ 0, got {penalty}"
        )));
    }
    let mut e = vec![f64::INFINITY; horizon + 1];
    let mut split = vec![0usize; horizon + 1];
    e[0] = 0.0;
    for block_start in (0..horizon).step_by(ROW_BLOCK) {
        let block_end = (block_start + ROW_BLOCK).min(horizon);
        let rows = (block_start..block_end)
            .into_par_iter()
            .map(|s| {
                let mut costs = vec![0.0; horizon - s];
                row(s, &mut costs).map(|_| costs)
            })
            .collect::<Result<Vec<_>>>()?;
        for (s, costs) in (block_start..block_end).zip(rows) {
            let base = e[s] + penalty;
            for (k, cost) in costs.into_iter().enumerate() {
                if !cost.is_finite() {
                    return Err(Error::numeric(format!(
                        "segment [{s}, {}] has non-finite cost",
                        s + k
                    )));
                }
                let cand = base + cost;
                if cand < e[s + k + 1] {
                    e[s + k + 1] = cand;
                    split[s + k + 1] = s;
                }
            }
        }
    }
    Ok(DpTable { e, split })
}

/// Minimal penalized cost by enumerating all `2^(T−1)` partitions.
///
/// Returns the cost and the segment starts after the first. Among exact ties
/// the lexicographically smallest list wins. Refuses `T > 20`.
pub fn exhaustive_dp_oracle<F>(
    horizon: usize,
    penalty: f64,
    mut cost: F,
) -> Result<(f64, Vec<usize>)>
where
    F: FnMut(usize, usize) -> f64,
{
    if horizon == 0 {
        return Err(Error::contract("cannot segment an empty record"));
    }
    if horizon > EXHAUSTIVE_MAX_HORIZON {
        return Err(Error::contract(format!(
            "exhaustive search is limited to T ≤ {EXHAUSTIVE_MAX_HORIZON}, got {horizon}"
        )));
    }
    let mut table = vec![0.0; horizon * horizon];
    for s in 0..horizon {
        for e in s..horizon {
            table[s * horizon + e] = cost(s, e);
        }
    }
    let mut best = f64::INFINITY;
    let mut best_bounds: Vec<usize> = Vec::new();
    let mut bounds = Vec::with_capacity(horizon);
    for mask in 0u32..(1u32 << (horizon - 1)) {
        bounds.clear();
        let mut total = 0.0;
        let mut start = 0;
        for k in 0..horizon - 1 {
            if mask & (1 << k) != 0 {
                total += table[start * horizon + k] + penalty;
                start = k + 1;
                bounds.push(start);
            }
        }
        total += table[start * horizon + horizon - 1] + penalty;
        if total < best || (total == best && bounds < best_bounds) {
            best = total;
            best_bounds.clone_from(&bounds);
        }
    }
    Ok((best, best_bounds))
}

fn check_penalty(penalty: f64) -> Result<()> {
    if penalty.is_finite() && penalty >= 0.0 {
        Ok(())
    } else {
        Err(Error::contract(format!(
            "penalty must be finite and ≥ 0, got {penalty}"
        )))
    }
}

fn check_loading(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::contract(format!(
            "loading must be finite and > 0, got {delta}"
        )))
    }
}

fn column_range(x: &CMatrix, start: usize, end: usize) -> CMatrix {
    x.columns(start, end + 1 - start).into_owned()
}

/// Ridge segment cost `ρ − Re(rᴴw)` for fitting `d ≈ wᴴx` on `[start, end]`.
pub fn ridge_segment(
    x: &CMatrix,
    d: &[C64],
    start: usize,
    end: usize,
    delta: f64,
) -> Result<(CVector, f64)> {
    let xs = column_range(x, start, end);
    let ds = &d[start..=end];
    let mut r = CVector::zeros(x.nrows());
    for (col, dt) in xs.column_iter().zip(ds) {
        r += col * dt.conj();
    }
    let w = linalg::regularized_gram_solve(&xs, r.as_slice(), delta)?;
    let rho: f64 = ds.iter().map(|v| v.norm_sqr()).sum();
    Ok((
        w.clone(),
        (rho - dot_h(r.as_slice(), w.as_slice()).re).max(0.0),
    ))
}

/// Batch output power `‖wᴴX‖²` of the loaded MVDR weights on `[start, end]`.
pub fn mvdr_segment(
    x: &CMatrix,
    nu: &SteeringVector,
    start: usize,
    end: usize,
    delta: f64,
) -> Result<(CVector, f64)> {
    let xs = column_range(x, start, end);
    let w = batch_mvdr_weights(&xs, nu, delta)?;
    let cost = xs
        .column_iter()
        .map(|c| dot_h(w.as_slice(), c.as_slice()).norm_sqr())
        .sum();
    Ok((w, cost))
}

/// Same as [`mvdr_segment`] with exact (unloaded) sample covariance.
///
/// Needs at least `p` linearly independent snapshots in the interval.
pub fn unloaded_mvdr_cost(
    x: &CMatrix,
    nu: &SteeringVector,
    start: usize,
    end: usize,
) -> Result<f64> {
    let xs = column_range(x, start, end);
    let num = linalg::hermitian_solve(linalg::gram(&xs), nu.as_slice())?;
    let den = dot_h(nu.as_slice(), num.as_slice()).re;
    if !(den.is_finite() && den > 0.0) {
        return Err(Error::Singular(format!(
            "segment [{start}, {end}] normalizer is {den}"
        )));
    }
    Ok(1.0 / den)
}

/// Recursive least-squares fit of `d ≈ wᴴx` from a loaded start.
#[derive(Debug, Clone)]
pub struct RlsFilter {
    inv: HermitianState,
    w: CVector,
    r: CVector,
    rho: f64,
    prior_cost: f64,
    start_index: usize,
}

impl RlsFilter {
    pub fn new(dim: usize, delta: f64, start_index: usize) -> Result<Self> {
        Ok(Self {
            inv: HermitianState::new(dim, delta)?,
            w: CVector::zeros(dim),
            r: CVector::zeros(dim),
            rho: 0.0,
            prior_cost: 0.0,
            start_index,
        })
    }

    pub fn weights(&self) -> &CVector {
        &self.w
    }

    pub fn start_index(&self) -> usize {
        self.start_index
    }

    /// `wᴴx` with the current weights.
    pub fn predict(&self, x: &[C64]) -> C64 {
        dot_h(self.w.as_slice(), x)
    }

    /// Ridge objective `ρ − Re(rᴴw)` over the absorbed samples.
    pub fn cost(&self) -> f64 {
        (self.rho - dot_h(self.r.as_slice(), self.w.as_slice()).re).max(0.0)
    }

    pub fn step(&mut self, x: &[C64], d: C64) -> Result<()> {
        let err = d - self.predict(x);
        self.prior_cost += err.norm_sqr();
        let update = self.inv.rank1_update(x)?;
        let scale = err.conj() / update.gamma;
        for (wi, ui) in self.w.iter_mut().zip(update.gain.iter()) {
            *wi += ui * scale;
        }
        for (ri, xi) in self.r.iter_mut().zip(x) {
            *ri += xi * d.conj();
        }
        self.rho += d.norm_sqr();
        Ok(())
    }
}

fn check_regression(x: &CMatrix, d: &[C64]) -> Result<()> {
    if x.ncols() == 0 {
        return Err(Error::contract("cannot segment an empty record"));
    }
    if x.ncols() != d.len() {
        return Err(Error::contract(format!(
            "{} regressor columns but {} targets",
            x.ncols(),
            d.len()
        )));
    }
    if !linalg::all_finite(x.as_slice()) || !linalg::all_finite(d) {
        return Err(Error::numeric("non-finite regression data"));
    }
    Ok(())
}

/// Batch result: stitched output, optimal partition and the DP table behind it.
#[derive(Debug, Clone)]
pub struct BatchSegmentation {
    pub output: Vec<C64>,
    pub partition: Partition,
    pub table: DpTable,
}

/// Globally optimal segmented least squares of `d ≈ wᴴx`.
pub fn sls_batch(x: &CMatrix, d: &[C64], penalty: f64, delta: f64) -> Result<BatchSegmentation> {
    check_regression(x, d)?;
    check_penalty(penalty)?;
    check_loading(delta)?;
    let p = x.nrows();
    let table = optimal_partition(x.ncols(), penalty, |s, costs| {
        let mut f = RlsFilter::new(p, delta, s)?;
        for (k, cost) in costs.iter_mut().enumerate() {
            f.step(x.column(s + k).as_slice(), d[s + k])?;
            *cost = f.cost();
        }
        Ok(())
    })?;
    let mut segments = Vec::new();
    let mut output = Vec::with_capacity(d.len());
    for (start, end) in table.traceback() {
        let (weights, cost) = ridge_segment(x, d, start, end, delta)?;
        for t in start..=end {
            output.push(dot_h(weights.as_slice(), x.column(t).as_slice()));
        }
        segments.push(Segment {
            start,
            end,
            weights,
            cost,
        });
    }
    let partition = Partition {
        segments,
        total_cost: table.optimal_cost(),
    };
    Ok(BatchSegmentation {
        output,
        partition,
        table,
    })
}

fn check_snapshots(x: &CMatrix, nu: &SteeringVector) -> Result<()> {
    if x.ncols() == 0 {
        return Err(Error::contract("cannot segment an empty record"));
    }
    nu.check_dim(x.nrows())?;
    if !linalg::all_finite(x.as_slice()) {
        return Err(Error::numeric("non-finite snapshot data"));
    }
    Ok(())
}

/// Globally optimal batch segmented MVDR beamformer.
///
/// Segment cost is the output power of that segment's loaded batch MVDR
/// weights. Each chosen segment's weights are re-solved directly from its
/// snapshots before synthesizing the output.
pub fn bsb(
    x: &CMatrix,
    nu: &SteeringVector,
    penalty: f64,
    delta: f64,
) -> Result<BatchSegmentation> {
    check_snapshots(x, nu)?;
    check_penalty(penalty)?;
    check_loading(delta)?;
    let table = optimal_partition(x.ncols(), penalty, |s, costs| {
        let mut f = MvdrFilter::new(nu, delta, s)?;
        for (k, cost) in costs.iter_mut().enumerate() {
            f.step(x.column(s + k).as_slice())?;
            *cost = f.batch_cost();
        }
        Ok(())
    })?;
    let mut segments = Vec::new();
    let mut output = Vec::with_capacity(x.ncols());
    for (start, end) in table.traceback() {
        let (weights, cost) = mvdr_segment(x, nu, start, end, delta)?;
        for t in start..=end {
            output.push(dot_h(weights.as_slice(), x.column(t).as_slice()));
        }
        segments.push(Segment {
            start,
            end,
            weights,
            cost,
        });
    }
    let partition = Partition {
        segments,
        total_cost: table.optimal_cost(),
    };
    Ok(BatchSegmentation {
        output,
        partition,
        table,
    })
}

/// Which per-snapshot error a candidate accumulates as its running segment cost.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostConvention {
    /// Errors of the weights after absorbing the snapshot (the printed recursion).
    #[default]
    Posterior,
    /// Errors of the weights before absorbing the snapshot, i.e. the causal outputs.
    Prior,
}

/// A filter hypothesizing that the current segment began at `start_index`.
pub trait Candidate: Clone {
    type Sample<'a>: Copy;

    fn spawn(&self, start_index: usize) -> Result<Self>;
    fn start_index(&self) -> usize;
    /// Causal estimate from the pre-update weights.
    fn output(&self, sample: Self::Sample<'_>) -> C64;
    fn update(&mut self, sample: Self::Sample<'_>) -> Result<()>;
    /// Running segment cost `J`.
    fn cost(&self, convention: CostConvention) -> f64;
    fn weights(&self) -> CVector;
}

impl Candidate for MvdrFilter {
    type Sample<'a> = &'a [C64];

    fn spawn(&self, start_index: usize) -> Result<Self> {
        MvdrFilter::new(self.steering(), self.covariance().loading(), start_index)
    }

    fn start_index(&self) -> usize {
        MvdrFilter::start_index(self)
    }

    fn output(&self, x: &[C64]) -> C64 {
        MvdrFilter::output(self, x)
    }

    fn update(&mut self, x: &[C64]) -> Result<()> {
        self.step(x).map(|_| ())
    }

    fn cost(&self, convention: CostConvention) -> f64 {
        match convention {
            CostConvention::Posterior => MvdrFilter::cost(self),
            CostConvention::Prior => self.prior_cost(),
        }
    }

    fn weights(&self) -> CVector {
        MvdrFilter::weights(self).clone()
    }
}

impl Candidate for RlsFilter {
    type Sample<'a> = (&'a [C64], C64);

    fn spawn(&self, start_index: usize) -> Result<Self> {
        RlsFilter::new(self.w.len(), self.inv.loading(), start_index)
    }

    fn start_index(&self) -> usize {
        self.start_index
    }

    fn output(&self, (x, _): (&[C64], C64)) -> C64 {
        self.predict(x)
    }

    fn update(&mut self, (x, d): (&[C64], C64)) -> Result<()> {
        self.step(x, d)
    }

    fn cost(&self, convention: CostConvention) -> f64 {
        match convention {
            CostConvention::Posterior => RlsFilter::cost(self),
            CostConvention::Prior => self.prior_cost,
        }
    }

    fn weights(&self) -> CVector {
        self.w.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlineConfig {
    /// Penalty `C` per segment.
    pub penalty: f64,
    /// A new start must lead the active one by more than this many snapshots.
    pub min_seg: usize,
    pub max_candidates: usize,
    pub cost: CostConvention,
}

impl OnlineConfig {
    pub fn new(penalty: f64, min_seg: usize) -> Self {
        Self {
            penalty,
            min_seg,
            max_candidates: DEFAULT_MAX_CANDIDATES,
            cost: CostConvention::Posterior,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_penalty(self.penalty)?;
        if self.max_candidates == 0 {
            return Err(Error::contract(
                "candidate bank needs room for at least one filter",
            ));
        }
        Ok(())
    }
}

/// One online step's outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlineStep {
    pub output: C64,
    /// New segment start committed during this step.
    pub changepoint: Option<usize>,
}

/// Causal segmenter over a bank of candidate filters.
///
/// The bank is ordered by start index and its first entry is always the
/// active anchor.
#[derive(Debug, Clone)]
pub struct OnlineSegmenter<K: Candidate> {
    config: OnlineConfig,
    prototype: K,
    bank: Vec<K>,
    potentials: Vec<f64>,
    changepoints: Vec<usize>,
}

impl<K: Candidate> OnlineSegmenter<K> {
    /// `prototype` supplies the loading and dimensions for every spawned candidate.
    pub fn new(prototype: K, config: OnlineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            prototype,
            bank: Vec::new(),
            potentials: Vec::new(),
            changepoints: Vec::new(),
        })
    }

    pub fn config(&self) -> &OnlineConfig {
        &self.config
    }

    /// Snapshots processed so far.
    pub fn time(&self) -> usize {
        self.potentials.len()
    }

    /// Start of the active segment.
    pub fn anchor(&self) -> usize {
        self.bank.first().map_or(0, |c| c.start_index())
    }

    pub fn active(&self) -> Option<&K> {
        self.bank.first()
    }

    pub fn candidates(&self) -> &[K] {
        &self.bank
    }

    /// `E[n]` for every processed snapshot.
    pub fn potentials(&self) -> &[f64] {
        &self.potentials
    }

    pub fn changepoints(&self) -> &[usize] {
        &self.changepoints
    }

    /// Weights that will produce the next output.
    pub fn active_weights(&self) -> Option<CVector> {
        self.bank.first().map(|c| c.weights())
    }

    fn potential_before(&self, start: usize) -> f64 {
        match start.checked_sub(1) {
            None => 0.0,
            Some(i) => self.potentials[i.min(self.potentials.len() - 1)],
        }
    }

    pub fn step(&mut self, sample: K::Sample<'_>) -> Result<OnlineStep> {
        let n = self.time();
        self.bank.push(self.prototype.spawn(n)?);
        if self.bank.len() > self.config.max_candidates {
            let evict = if self.bank.len() > 1 { 1 } else { 0 };
            self.bank.remove(evict);
        }
        let output = self.bank[0].output(sample);
        for c in &mut self.bank {
            c.update(sample)?;
        }

        let mut best = 0;
        let mut best_total = f64::INFINITY;
        for (k, c) in self.bank.iter().enumerate() {
            let total = self.potential_before(c.start_index())
                + self.config.penalty
                + c.cost(self.config.cost);
            if !total.is_finite() {
                return Err(Error::numeric(format!(
                    "candidate starting at {} has non-finite cost at step {n}",
                    c.start_index()
                )));
            }
            if total < best_total {
                best_total = total;
                best = k;
            }
        }
        self.potentials.push(best_total);

        let cur = self.bank[0].start_index();
        let best_start = self.bank[best].start_index();
        let mut changepoint = None;
        if best_start - cur > self.config.min_seg {
            self.bank.drain(..best);
            self.changepoints.push(best_start);
            changepoint = Some(best_start);
        }
        Ok(OnlineStep {
            output,
            changepoint,
        })
    }
}

/// Online segmented MVDR beamformer.
pub type Osb = OnlineSegmenter<MvdrFilter>;

impl Osb {
    pub fn beamformer(nu: &SteeringVector, delta: f64, config: OnlineConfig) -> Result<Self> {
        OnlineSegmenter::new(MvdrFilter::new(nu, delta, 0)?, config)
    }
}

/// Realized online cost `Σ|z|² + C·(segments)` of a causal run.
pub fn realized_online_cost(z: &[C64], changepoints: usize, penalty: f64) -> f64 {
    z.iter().map(|v| v.norm_sqr()).sum::<f64>() + penalty * (changepoints + 1) as f64
}

/// Runs the online segmented beamformer over a whole record.
pub fn osb_run(
    x: &CMatrix,
    nu: &SteeringVector,
    delta: f64,
    config: OnlineConfig,
    stride: usize,
) -> Result<RunTrace> {
    check_snapshots(x, nu)?;
    let mut seg = Osb::beamformer(nu, delta, config)?;
    let mut rec = TraceRecorder::new(stride, x.ncols());
    for (t, col) in x.column_iter().enumerate() {
        let weights = rec.wants(t).then(|| seg.active_weights());
        let step = seg.step(col.as_slice())?;
        rec.push(t, step.output, || {
            weights
                .flatten()
                .unwrap_or_else(|| conventional_weights(nu))
        });
        if let Some(cp) = step.changepoint {
            rec.changepoint(cp);
        }
    }
    Ok(rec.finish())
}

/// Online segmented RLS: causal predictions of `d` and declared changepoints.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineRegression {
    pub prediction: Vec<C64>,
    pub changepoints: Vec<usize>,
    pub potentials: Vec<f64>,
}

pub fn osrls(x: &CMatrix, d: &[C64], delta: f64, config: OnlineConfig) -> Result<OnlineRegression> {
    check_regression(x, d)?;
    check_loading(delta)?;
    let mut seg = OnlineSegmenter::new(RlsFilter::new(x.nrows(), delta, 0)?, config)?;
    let mut prediction = Vec::with_capacity(d.len());
    for (col, &dt) in x.column_iter().zip(d) {
        prediction.push(seg.step((col.as_slice(), dt))?.output);
    }
    Ok(OnlineRegression {
        prediction,
        changepoints: seg.changepoints,
        potentials: seg.potentials,
    })
}

/// Segmented RLS in sidelobe-canceller form.
///
/// The quiescent output `d = ν̂ᴴx` is regressed on the blocked snapshot `Bx`
/// and the beamformer output is the residual `d − d̂`, which keeps the look
/// direction distortionless for any adaptive weights.
pub fn osrls_beamformer_run(
    x: &CMatrix,
    nu: &SteeringVector,
    delta: f64,
    config: OnlineConfig,
    stride: usize,
) -> Result<RunTrace> {
    check_snapshots(x, nu)?;
    check_loading(delta)?;
    let wq = conventional_weights(nu);
    let b = blocking_matrix(nu);
    let mut seg = OnlineSegmenter::new(RlsFilter::new(x.nrows(), delta, 0)?, config)?;
    let mut rec = TraceRecorder::new(stride, x.ncols());
    for (t, col) in x.column_iter().enumerate() {
        let d = dot_h(wq.as_slice(), col.as_slice());
        let u = &b * col;
        let weights = rec.wants(t).then(|| {
            let wa = seg
                .active_weights()
                .unwrap_or_else(|| CVector::zeros(wq.len()));
            &wq - &b * wa
        });
        let step = seg.step((u.as_slice(), d))?;
        rec.push(t, d - step.output, || weights.unwrap_or_else(|| wq.clone()));
        if let Some(cp) = step.changepoint {
            rec.changepoint(cp);
        }
    }
    Ok(rec.finish())
}

/// Runs [`bsb`] and packages the result like the causal beamformers.
pub fn bsb_run(
    x: &CMatrix,
    nu: &SteeringVector,
    penalty: f64,
    delta: f64,
    stride: usize,
) -> Result<(RunTrace, BatchSegmentation)> {
    let seg = bsb(x, nu, penalty, delta)?;
    let mut rec = TraceRecorder::new(stride, x.ncols());
    for s in &seg.partition.segments {
        if s.start > 0 {
            rec.changepoint(s.start);
        }
        for t in s.start..=s.end {
            rec.push(t, seg.output[t], || s.weights.clone());
        }
    }
    Ok((rec.finish(), seg))
}
