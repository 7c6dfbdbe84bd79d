//! Uniform linear arrays and generators for non-stationary interference scenes.
//!
//! Angles are measured from endfire in degrees; broadside is 90°. All sources
//! are temporally white circular complex Gaussians, and sensor noise has unit
//! variance, so SNR/INR values in dB set source powers directly.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::beamformers::{conventional_weights, SteeringVector};
use crate::error::{Error, Result};
use crate::linalg::{dot_h, CMatrix, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayGeometry {
    pub num_elements: usize,
    /// Element spacing in meters.
    pub spacing: f64,
    /// Propagation speed in m/s.
    pub wave_speed: f64,
    /// Design frequency in Hz.
    pub frequency: f64,
}

impl ArrayGeometry {
    /// `M` elements at `λ/2` for the given frequency and speed.
    pub fn half_wavelength(num_elements: usize, frequency: f64, wave_speed: f64) -> Self {
        Self {
            num_elements,
            spacing: wave_speed / (2.0 * frequency),
            wave_speed,
            frequency,
        }
    }

    /// Nine elements, 0.2 m spacing, 3600 Hz design frequency in 1440 m/s water.
    pub fn nine_element_3600hz() -> Self {
        Self {
            num_elements: 9,
            spacing: 0.2,
            wave_speed: 1440.0,
            frequency: 3600.0,
        }
    }

    pub fn wavelength(&self) -> f64 {
        self.wave_speed / self.frequency
    }

    /// `true` when the spacing is at most half a wavelength (no grating lobes).
    pub fn is_alias_free(&self) -> bool {
        self.spacing <= self.wavelength() / 2.0 * (1.0 + 1e-12)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_elements < 2 {
            return Err(Error::config("array needs at least two elements"));
        }
        for (name, v) in [
            ("spacing", self.spacing),
            ("wave_speed", self.wave_speed),
            ("frequency", self.frequency),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!(
                    "array {name} must be positive, got {v}"
                )));
            }
        }
        if !self.is_alias_free() {
            log::warn!(
                "element spacing {} m exceeds half a wavelength ({} m); expect grating lobes",
                self.spacing,
                self.wavelength() / 2.0
            );
        }
        Ok(())
    }
}

/// Plane-wave response `ν_m = exp(−i 2π f m d cosθ / c)`.
pub fn ula_steering(geometry: &ArrayGeometry, angle_deg: f64) -> Result<SteeringVector> {
    let k = -2.0 * PI * geometry.frequency * geometry.spacing * angle_deg.to_radians().cos()
        / geometry.wave_speed;
    let nu = CVector::from_fn(geometry.num_elements, |m, _| {
        C64::from_polar(1.0, k * m as f64)
    });
    Ok(SteeringVector::new(nu)?.with_look_angle(angle_deg))
}

/// Temporal structure of the interference field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioKind {
    /// Fixed-length blocks, each with a fresh draw of `active` interferers.
    AbruptBlocks {
        block_len: usize,
        active: usize,
        /// Per-interferer INR drawn uniformly from this range; `inr_db` when absent.
        #[serde(default)]
        inr_range_db: Option<[f64; 2]>,
        /// Explicit block boundaries overriding `block_len`.
        #[serde(default)]
        switch_times: Option<Vec<usize>>,
    },
    /// One interferer that jumps to another pool bearing after each block.
    PiecewiseBearing { block_len: usize, jitter: usize },
    /// `active` simultaneous interferers redrawn from the pool after each block.
    PiecewiseTime {
        block_len: usize,
        jitter: usize,
        #[serde(default = "default_two")]
        active: usize,
    },
    /// Markov births and deaths, at most `max_active` at once.
    BirthDeath {
        p_birth: f64,
        p_death: f64,
        max_active: usize,
    },
}

fn default_two() -> usize {
    2
}

fn default_pool_size() -> usize {
    8
}

fn default_band() -> [f64; 2] {
    [3.0, 15.0]
}

fn default_target_angle() -> f64 {
    90.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub geometry: ArrayGeometry,
    pub horizon: usize,
    #[serde(default = "default_target_angle")]
    pub target_angle: f64,
    pub target_snr_db: f64,
    pub inr_db: f64,
    /// Explicit interferer bearings; drawn per seed from the suppression band when absent.
    #[serde(default)]
    pub interferer_pool: Option<Vec<f64>>,
    #[serde(default = "default_pool_size")]
    pub pool_size: usize,
    /// Accepted quiescent (CBF) suppression range in dB for auto-drawn bearings.
    #[serde(default = "default_band")]
    pub suppression_band_db: [f64; 2],
    /// Also reject auto-drawn bearings inside the first nulls of the quiescent beam.
    #[serde(default)]
    pub exclude_main_lobe: bool,
    pub kind: ScenarioKind,
    #[serde(default)]
    pub seed: u64,
}

/// Minimum angular separation between auto-drawn pool bearings.
const POOL_MIN_SEPARATION_DEG: f64 = 1.0;
const POOL_MAX_ATTEMPTS: usize = 200_000;

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.horizon == 0 {
            return Err(Error::config("horizon must be at least one snapshot"));
        }
        for (name, v) in [
            ("target_angle", self.target_angle),
            ("target_snr_db", self.target_snr_db),
            ("inr_db", self.inr_db),
        ] {
            if !v.is_finite() {
                return Err(Error::config(format!("{name} must be finite")));
            }
        }
        let [lo, hi] = self.suppression_band_db;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::config(format!(
                "suppression band [{lo}, {hi}] dB is empty"
            )));
        }
        let pool = match &self.interferer_pool {
            Some(p) if p.iter().any(|a| !a.is_finite()) => {
                return Err(Error::config("interferer pool contains a non-finite angle"))
            }
            Some(p) => p.len(),
            None => self.pool_size,
        };
        let need = match &self.kind {
            ScenarioKind::AbruptBlocks {
                block_len,
                active,
                inr_range_db,
                switch_times,
            } => {
                if *block_len == 0 && switch_times.is_none() {
                    return Err(Error::config("abrupt_blocks needs block_len > 0"));
                }
                if let Some([a, b]) = inr_range_db {
                    if !(a.is_finite() && b.is_finite() && a <= b) {
                        return Err(Error::config("inr_range_db must be an ordered pair"));
                    }
                }
                if let Some(times) = switch_times {
                    if times.windows(2).any(|w| w[0] >= w[1])
                        || times.iter().any(|&t| t == 0 || t >= self.horizon)
                    {
                        return Err(Error::config(
                            "switch_times must be strictly increasing and inside (0, horizon)",
                        ));
                    }
                }
                // Consecutive blocks must differ, which needs a spare bearing.
                *active + 1
            }
            ScenarioKind::PiecewiseBearing { block_len, jitter } => {
                check_block(*block_len, *jitter)?;
                2
            }
            ScenarioKind::PiecewiseTime {
                block_len,
                jitter,
                active,
            } => {
                check_block(*block_len, *jitter)?;
                if *active == 0 {
                    return Err(Error::config(
                        "piecewise_time needs at least one active interferer",
                    ));
                }
                *active + 1
            }
            ScenarioKind::BirthDeath {
                p_birth,
                p_death,
                max_active,
            } => {
                for (name, p) in [("p_birth", *p_birth), ("p_death", *p_death)] {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::config(format!("{name} must lie in [0, 1], got {p}")));
                    }
                }
                *max_active
            }
        };
        if pool < need {
            return Err(Error::config(format!(
                "interferer pool of {pool} bearings is too small for this scenario (needs {need})"
            )));
        }
        Ok(())
    }
}

fn check_block(block_len: usize, jitter: usize) -> Result<()> {
    if block_len == 0 || jitter >= block_len {
        return Err(Error::config(format!(
            "block length {block_len} must exceed its jitter {jitter}"
        )));
    }
    Ok(())
}

/// One interferer's active interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceEpisode {
    pub angle: f64,
    /// Linear power relative to unit sensor noise.
    pub power: f64,
    pub start: usize,
    pub end: usize,
}

/// A maximal interval with a constant set of active interferers.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceState {
    pub start: usize,
    pub end: usize,
    /// `(angle, power)` pairs, sorted by angle.
    pub sources: Vec<(f64, f64)>,
    /// Ensemble covariance `σ_s²ννᴴ + Σ σ_k² a_k a_kᴴ + σ_n² I`.
    pub covariance: CMatrix,
    /// The same without the target term.
    pub interference_plus_noise: CMatrix,
}

/// Generated snapshots together with everything needed to score a run.
#[derive(Debug, Clone)]
pub struct ScenarioTruth {
    geometry: ArrayGeometry,
    snapshots: CMatrix,
    target: Vec<C64>,
    steering: SteeringVector,
    pool: Vec<f64>,
    episodes: Vec<SourceEpisode>,
    states: Vec<InterferenceState>,
    state_of: Vec<u32>,
    true_changepoints: Vec<usize>,
    signal_power: f64,
    noise_power: f64,
}

impl ScenarioTruth {
    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    /// `p × T` snapshot matrix.
    pub fn snapshots(&self) -> &CMatrix {
        &self.snapshots
    }

    pub fn target_waveform(&self) -> &[C64] {
        &self.target
    }

    pub fn steering(&self) -> &SteeringVector {
        &self.steering
    }

    pub fn horizon(&self) -> usize {
        self.snapshots.ncols()
    }

    pub fn pool(&self) -> &[f64] {
        &self.pool
    }

    pub fn episodes(&self) -> &[SourceEpisode] {
        &self.episodes
    }

    pub fn states(&self) -> &[InterferenceState] {
        &self.states
    }

    pub fn state_index(&self, t: usize) -> usize {
        self.state_of[t] as usize
    }

    /// Active `(angle, power)` pairs at snapshot `t`.
    pub fn schedule_at(&self, t: usize) -> &[(f64, f64)] {
        &self.states[self.state_index(t)].sources
    }

    /// `R[t]`.
    pub fn ensemble_cov(&self, t: usize) -> &CMatrix {
        &self.states[self.state_index(t)].covariance
    }

    pub fn interference_plus_noise(&self, t: usize) -> &CMatrix {
        &self.states[self.state_index(t)].interference_plus_noise
    }

    /// Indices where the active interferer set differs from the previous snapshot.
    pub fn true_changepoints(&self) -> &[usize] {
        &self.true_changepoints
    }

    pub fn signal_power(&self) -> f64 {
        self.signal_power
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    /// Writes one row per snapshot: `t, state, target, x_0 … x_{M−1}` (real and imaginary parts).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let mut header = String::from("t,state,active_angles,target_re,target_im");
        for m in 0..self.snapshots.nrows() {
            header.push_str(&format!(",x{m}_re,x{m}_im"));
        }
        let io = |e| Error::io(path, e);
        writeln!(out, "{header}").map_err(io)?;
        for t in 0..self.horizon() {
            let angles: Vec<String> = self
                .schedule_at(t)
                .iter()
                .map(|(a, _)| format!("{a}"))
                .collect();
            let mut line = format!(
                "{t},{},{},{},{}",
                self.state_index(t),
                angles.join(";"),
                self.target[t].re,
                self.target[t].im
            );
            for v in self.snapshots.column(t).iter() {
                line.push_str(&format!(",{},{}", v.re, v.im));
            }
            writeln!(out, "{line}").map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

fn complex_gaussian(rng: &mut ChaCha8Rng, power: f64) -> C64 {
    let scale = (power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * scale, im * scale)
}

fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Quiescent suppression of the conventional beamformer toward `angle`, in dB.
pub fn quiescent_suppression_db(
    geometry: &ArrayGeometry,
    look_angle: f64,
    angle: f64,
) -> Result<f64> {
    let cbf = conventional_weights(&ula_steering(geometry, look_angle)?);
    let a = ula_steering(geometry, angle)?;
    Ok(-20.0 * dot_h(cbf.as_slice(), a.as_slice()).norm().log10())
}

/// `true` when `angle` lies strictly between the first nulls of a uniform beam steered to `look_angle`.
pub fn in_main_lobe(geometry: &ArrayGeometry, look_angle: f64, angle: f64) -> bool {
    let half_width = geometry.wavelength() / (geometry.num_elements as f64 * geometry.spacing);
    (angle.to_radians().cos() - look_angle.to_radians().cos()).abs() < half_width
}

/// Draws `count` bearings in (0°, 180°) whose quiescent suppression lies in `band`.
pub fn draw_pool(
    geometry: &ArrayGeometry,
    look_angle: f64,
    band: [f64; 2],
    exclude_main_lobe: bool,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let mut pool: Vec<f64> = Vec::with_capacity(count);
    let mut attempts = 0;
    while pool.len() < count {
        attempts += 1;
        if attempts > POOL_MAX_ATTEMPTS {
            return Err(Error::config(format!(
                "could not place {count} bearings in the {band:?} dB suppression band"
            )));
        }
        let angle: f64 = rng.gen_range(0.0..180.0);
        if exclude_main_lobe && in_main_lobe(geometry, look_angle, angle) {
            continue;
        }
        let supp = quiescent_suppression_db(geometry, look_angle, angle)?;
        if supp < band[0] || supp > band[1] {
            continue;
        }
        if pool
            .iter()
            .any(|&a| (a - angle).abs() < POOL_MIN_SEPARATION_DEG)
        {
            continue;
        }
        pool.push(angle);
    }
    Ok(pool)
}

fn block_lengths(
    rng: &mut ChaCha8Rng,
    horizon: usize,
    base: usize,
    jitter: usize,
) -> Vec<(usize, usize)> {
    let mut blocks = Vec::new();
    let mut t = 0;
    while t < horizon {
        let j = jitter as i64;
        let len = (base as i64 + rng.gen_range(-j..=j)) as usize;
        let end = (t + len).min(horizon);
        blocks.push((t, end));
        t = end;
    }
    blocks
}

/// Picks `k` distinct pool indices whose set differs from `previous`.
fn fresh_subset(rng: &mut ChaCha8Rng, pool_len: usize, k: usize, previous: &[usize]) -> Vec<usize> {
    let indices: Vec<usize> = (0..pool_len).collect();
    loop {
        let mut pick: Vec<usize> = indices.choose_multiple(rng, k).copied().collect();
        pick.sort_unstable();
        if pick != previous {
            return pick;
        }
    }
}

fn realize_episodes(
    config: &ScenarioConfig,
    pool: &[f64],
    rng: &mut ChaCha8Rng,
) -> Vec<SourceEpisode> {
    let horizon = config.horizon;
    let inr = db_to_power(config.inr_db);
    let mut episodes = Vec::new();
    match &config.kind {
        ScenarioKind::AbruptBlocks {
            block_len,
            active,
            inr_range_db,
            switch_times,
        } => {
            let mut edges = vec![0];
            match switch_times {
                Some(times) => edges.extend(times.iter().copied()),
                None => edges.extend((1..).map(|b| b * block_len).take_while(|&t| t < horizon)),
            }
            edges.push(horizon);
            let mut previous = Vec::new();
            for w in edges.windows(2) {
                let pick = fresh_subset(rng, pool.len(), *active, &previous);
                for &i in &pick {
                    let power = match inr_range_db {
                        Some([lo, hi]) if hi > lo => db_to_power(rng.gen_range(*lo..*hi)),
                        Some([lo, _]) => db_to_power(*lo),
                        None => inr,
                    };
                    episodes.push(SourceEpisode {
                        angle: pool[i],
                        power,
                        start: w[0],
                        end: w[1],
                    });
                }
                previous = pick;
            }
        }
        ScenarioKind::PiecewiseBearing { block_len, jitter } => {
            let mut previous = Vec::new();
            for (start, end) in block_lengths(rng, horizon, *block_len, *jitter) {
                let pick = fresh_subset(rng, pool.len(), 1, &previous);
                episodes.push(SourceEpisode {
                    angle: pool[pick[0]],
                    power: inr,
                    start,
                    end,
                });
                previous = pick;
            }
        }
        ScenarioKind::PiecewiseTime {
            block_len,
            jitter,
            active,
        } => {
            let mut previous = Vec::new();
            for (start, end) in block_lengths(rng, horizon, *block_len, *jitter) {
                let pick = fresh_subset(rng, pool.len(), *active, &previous);
                for &i in &pick {
                    episodes.push(SourceEpisode {
                        angle: pool[i],
                        power: inr,
                        start,
                        end,
                    });
                }
                previous = pick;
            }
        }
        ScenarioKind::BirthDeath {
            p_birth,
            p_death,
            max_active,
        } => {
            // (pool index, start) of live interferers.
            let mut live: Vec<(usize, usize)> = Vec::new();
            for t in 0..horizon {
                let before: Vec<usize> = live.iter().map(|&(i, _)| i).collect();
                let mut survivors = Vec::with_capacity(live.len());
                for &(i, start) in &live {
                    if rng.gen::<f64>() < *p_death {
                        episodes.push(SourceEpisode {
                            angle: pool[i],
                            power: inr,
                            start,
                            end: t,
                        });
                    } else {
                        survivors.push((i, start));
                    }
                }
                live = survivors;
                if live.len() < *max_active && rng.gen::<f64>() < *p_birth {
                    let free: Vec<usize> =
                        (0..pool.len()).filter(|i| !before.contains(i)).collect();
                    if let Some(&i) = free.choose(rng) {
                        live.push((i, t));
                    }
                }
            }
            for (i, start) in live {
                episodes.push(SourceEpisode {
                    angle: pool[i],
                    power: inr,
                    start,
                    end: horizon,
                });
            }
        }
    }
    episodes.retain(|e| e.end > e.start);
    episodes.sort_by(|a, b| a.start.cmp(&b.start).then(a.angle.total_cmp(&b.angle)));
    episodes
}

/// Ensemble covariance for a target of power `signal_power` plus the listed sources.
pub fn ensemble_covariance(
    geometry: &ArrayGeometry,
    target: &SteeringVector,
    signal_power: f64,
    sources: &[(f64, f64)],
    noise_power: f64,
) -> Result<(CMatrix, CMatrix)> {
    let p = geometry.num_elements;
    let mut rin = CMatrix::from_diagonal_element(p, p, C64::new(noise_power, 0.0));
    for &(angle, power) in sources {
        let a = ula_steering(geometry, angle)?;
        rin += a.vector() * a.vector().adjoint() * C64::new(power, 0.0);
    }
    let full = &rin + target.vector() * target.vector().adjoint() * C64::new(signal_power, 0.0);
    Ok((full, rin))
}

fn build_states(
    config: &ScenarioConfig,
    target: &SteeringVector,
    signal_power: f64,
    episodes: &[SourceEpisode],
) -> Result<(Vec<InterferenceState>, Vec<u32>, Vec<usize>)> {
    let horizon = config.horizon;
    let mut edges: Vec<usize> = episodes.iter().flat_map(|e| [e.start, e.end]).collect();
    edges.push(0);
    edges.push(horizon);
    edges.sort_unstable();
    edges.dedup();

    let mut states: Vec<InterferenceState> = Vec::new();
    let mut changepoints = Vec::new();
    for w in edges.windows(2) {
        let (start, end) = (w[0], w[1]);
        let mut sources: Vec<(f64, f64)> = episodes
            .iter()
            .filter(|e| e.start <= start && e.end > start)
            .map(|e| (e.angle, e.power))
            .collect();
        sources.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        if let Some(last) = states.last_mut() {
            if last.sources == sources {
                last.end = end;
                continue;
            }
            changepoints.push(start);
        }
        let (covariance, interference_plus_noise) =
            ensemble_covariance(&config.geometry, target, signal_power, &sources, 1.0)?;
        states.push(InterferenceState {
            start,
            end,
            sources,
            covariance,
            interference_plus_noise,
        });
    }
    let mut state_of = vec![0u32; horizon];
    for (k, s) in states.iter().enumerate() {
        state_of[s.start..s.end]
            .iter_mut()
            .for_each(|v| *v = k as u32);
    }
    Ok((states, state_of, changepoints))
}

/// Realizes a scenario; identical configs (including the seed) give identical output.
pub fn generate(config: &ScenarioConfig) -> Result<ScenarioTruth> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let geometry = config.geometry;
    let steering = ula_steering(&geometry, config.target_angle)?;
    let pool = match &config.interferer_pool {
        Some(p) => p.clone(),
        None => draw_pool(
            &geometry,
            config.target_angle,
            config.suppression_band_db,
            config.exclude_main_lobe,
            config.pool_size,
            &mut rng,
        )?,
    };
    let signal_power = db_to_power(config.target_snr_db);
    let noise_power = 1.0;
    let episodes = realize_episodes(config, &pool, &mut rng);
    let (states, state_of, true_changepoints) =
        build_states(config, &steering, signal_power, &episodes)?;

    let p = geometry.num_elements;
    let horizon = config.horizon;
    let mut snapshots = CMatrix::zeros(p, horizon);
    let mut target = Vec::with_capacity(horizon);
    for state in &states {
        let sources = state
            .sources
            .iter()
            .map(|&(angle, power)| Ok((ula_steering(&geometry, angle)?, power)))
            .collect::<Result<Vec<_>>>()?;
        for t in state.start..state.end {
            let s = complex_gaussian(&mut rng, signal_power);
            target.push(s);
            let mut col = steering.vector() * s;
            for (a, power) in &sources {
                col += a.vector() * complex_gaussian(&mut rng, *power);
            }
            for v in col.iter_mut() {
                *v += complex_gaussian(&mut rng, noise_power);
            }
            snapshots.set_column(t, &col);
        }
    }

    Ok(ScenarioTruth {
        geometry,
        snapshots,
        target,
        steering,
        pool,
        episodes,
        states,
        state_of,
        true_changepoints,
        signal_power,
        noise_power,
    })
}
