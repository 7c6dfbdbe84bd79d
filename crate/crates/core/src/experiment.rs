//! Config-driven Monte Carlo experiments: roster definitions, presets, the
//! trial runner and the result files.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamformers::{
    adaptive_mvdr_run, batch_capon_run, cbf_run, gsc_run, omniscient_capon_run, sliding_mpdr_run,
    LoadingRule, SteeringVector,
};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::metrics::{
    btr, default_weight_stride, mse_trace, sinr_trace, BearingTimeRecord, RunTrace,
};
use crate::scenarios::{generate, ArrayGeometry, ScenarioConfig, ScenarioKind, ScenarioTruth};
use crate::segmentation::{
    bsb_run, osb_run, osrls_beamformer_run, CostConvention, OnlineConfig, DEFAULT_MAX_CANDIDATES,
};

pub const DEFAULT_TRIALS: usize = 20;

/// Window lengths of the sliding MPDR baselines in the presets.
pub const SLIDING_WINDOWS: [usize; 6] = [32, 64, 128, 256, 512, 1024];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Cbf,
    BatchCapon,
    AdaptiveMvdr,
    Gsc,
    SlidingMpdr,
    Omniscient,
    Bsb,
    Osb,
    Osrls,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cbf => "cbf",
            Self::BatchCapon => "batch_capon",
            Self::AdaptiveMvdr => "adaptive_mvdr",
            Self::Gsc => "gsc",
            Self::SlidingMpdr => "sliding_mpdr",
            Self::Omniscient => "omniscient",
            Self::Bsb => "bsb",
            Self::Osb => "osb",
            Self::Osrls => "osrls",
        }
    }

    fn segmenting(self) -> bool {
        matches!(self, Self::Bsb | Self::Osb | Self::Osrls)
    }

    fn online_segmenting(self) -> bool {
        matches!(self, Self::Osb | Self::Osrls)
    }
}

/// One roster entry. Parameters that do not apply to `kind` are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamformerSpec {
    pub kind: MethodKind,
    /// Name in the result files; derived from `kind` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    /// Segment penalty `C` in output power units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<f64>,
    /// Penalty in units of `p` times the sensor noise power.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_candidates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostConvention>,
    /// Overrides the experiment-wide loading rule. The omniscient bound is
    /// unloaded unless this is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loading: Option<LoadingRule>,
}

impl BeamformerSpec {
    pub fn new(kind: MethodKind) -> Self {
        Self {
            kind,
            label: None,
            window: None,
            penalty: None,
            penalty_rel: None,
            tau: None,
            max_candidates: None,
            cost: None,
            loading: None,
        }
    }

    pub fn sliding(window: usize) -> Self {
        Self {
            window: Some(window),
            ..Self::new(MethodKind::SlidingMpdr)
        }
    }

    /// Online segmenter with absolute penalty and guard `tau`.
    pub fn online(kind: MethodKind, penalty: f64, tau: usize) -> Self {
        Self {
            penalty: Some(penalty),
            tau: Some(tau),
            ..Self::new(kind)
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_penalty(mut self, penalty: f64) -> Self {
        self.penalty = Some(penalty);
        self.penalty_rel = None;
        self
    }

    pub fn with_penalty_rel(mut self, penalty_rel: f64) -> Self {
        self.penalty_rel = Some(penalty_rel);
        self.penalty = None;
        self
    }

    pub fn with_max_candidates(mut self, max_candidates: usize) -> Self {
        self.max_candidates = Some(max_candidates);
        self
    }

    pub fn with_cost(mut self, cost: CostConvention) -> Self {
        self.cost = Some(cost);
        self
    }

    pub fn with_loading(mut self, loading: LoadingRule) -> Self {
        self.loading = Some(loading);
        self
    }

    pub fn label(&self) -> String {
        match (&self.label, self.kind) {
            (Some(l), _) => l.clone(),
            (None, MethodKind::SlidingMpdr) => format!("sliding_mpdr_{}", self.window.unwrap_or(0)),
            (None, kind) => kind.name().to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let label = self.label();
        let kind = self.kind;
        let applies = |field: &str, present: bool, allowed: bool| {
            if present && !allowed {
                Err(Error::config(format!(
                    "beamformer `{label}`: `{field}` does not apply to kind {}",
                    kind.name()
                )))
            } else {
                Ok(())
            }
        };
        applies(
            "window",
            self.window.is_some(),
            kind == MethodKind::SlidingMpdr,
        )?;
        applies("penalty", self.penalty.is_some(), kind.segmenting())?;
        applies("penalty_rel", self.penalty_rel.is_some(), kind.segmenting())?;
        applies("tau", self.tau.is_some(), kind.online_segmenting())?;
        applies(
            "max_candidates",
            self.max_candidates.is_some(),
            kind.online_segmenting(),
        )?;
        applies("cost", self.cost.is_some(), kind.online_segmenting())?;
        applies("loading", self.loading.is_some(), kind != MethodKind::Cbf)?;

        let missing = |field: &str| {
            Error::config(format!(
                "beamformer `{label}` of kind {} needs `{field}`",
                kind.name()
            ))
        };
        if kind == MethodKind::SlidingMpdr && !matches!(self.window, Some(k) if k > 0) {
            return Err(missing("window >= 1"));
        }
        if kind.segmenting() {
            match (self.penalty, self.penalty_rel) {
                (Some(c), None) | (None, Some(c)) if c.is_finite() && c >= 0.0 => {}
                (Some(_), Some(_)) => {
                    return Err(Error::config(format!(
                        "beamformer `{label}`: give either `penalty` or `penalty_rel`, not both"
                    )))
                }
                _ => return Err(missing("a finite nonnegative `penalty` or `penalty_rel`")),
            }
        }
        if kind.online_segmenting() {
            if self.tau.is_none() {
                return Err(missing("tau"));
            }
            if self.max_candidates == Some(0) {
                return Err(missing("max_candidates >= 1"));
            }
        }
        if let Some(rule) = &self.loading {
            rule.validate()?;
        }
        Ok(())
    }

    /// Penalty in output power units for a `p`-element array.
    pub fn resolve_penalty(&self, p: usize, noise_power: f64) -> Option<f64> {
        self.penalty
            .or_else(|| self.penalty_rel.map(|r| r * p as f64 * noise_power))
    }
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    /// Per-snapshot `traces.csv` for every trial and beamformer.
    #[serde(default = "yes")]
    pub traces: bool,
    /// Ensemble-averaged cumulative MSE curves in `mse.csv`.
    #[serde(default = "yes")]
    pub mse: bool,
    /// Weight sampling stride for SINR; scales with the horizon when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_stride: Option<usize>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            traces: true,
            mse: true,
            weight_stride: None,
        }
    }
}

fn default_angle_max() -> f64 {
    180.0
}

fn default_angle_step() -> f64 {
    1.0
}

fn default_average() -> usize {
    10
}

/// Bearing-time record scan over one trial's data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BtrConfig {
    #[serde(default)]
    pub angle_min: f64,
    #[serde(default = "default_angle_max")]
    pub angle_max: f64,
    #[serde(default = "default_angle_step")]
    pub angle_step: f64,
    /// Snapshots per averaged column.
    #[serde(default = "default_average")]
    pub average: usize,
    /// Roster labels to scan; every roster entry when empty.
    #[serde(default)]
    pub beamformers: Vec<String>,
    #[serde(default)]
    pub trial: usize,
}

impl Default for BtrConfig {
    fn default() -> Self {
        Self {
            angle_min: 0.0,
            angle_max: default_angle_max(),
            angle_step: default_angle_step(),
            average: default_average(),
            beamformers: Vec::new(),
            trial: 0,
        }
    }
}

impl BtrConfig {
    pub fn grid(&self) -> Result<Vec<f64>> {
        let (lo, hi, step) = (self.angle_min, self.angle_max, self.angle_step);
        if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && lo <= hi) {
            return Err(Error::config(format!(
                "bearing grid [{lo}, {hi}] step {step} is not a valid range"
            )));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|k| lo + k as f64 * step).collect())
    }
}

/// A complete experiment: one scenario family, a beamformer roster and a trial budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Trial `k` uses scenario seed `base_seed + k`; `scenario.seed` is ignored.
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub loading: LoadingRule,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub btr: Option<BtrConfig>,
    pub scenario: ScenarioConfig,
    #[serde(rename = "beamformer")]
    pub beamformers: Vec<BeamformerSpec>,
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub trials: Option<usize>,
    pub base_seed: Option<u64>,
    pub horizon: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("cannot serialize config: {e}")))
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(t) = overrides.trials {
            self.trials = t;
        }
        if let Some(s) = overrides.base_seed {
            self.base_seed = s;
        }
        if let Some(h) = overrides.horizon {
            self.scenario.horizon = h;
        }
        if let Some(dir) = &overrides.out_dir {
            self.outputs.dir = dir.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        self.scenario.validate()?;
        self.loading.validate()?;
        if self.beamformers.is_empty() {
            return Err(Error::config("the beamformer roster is empty"));
        }
        let mut labels = HashSet::new();
        for spec in &self.beamformers {
            spec.validate()?;
            if !labels.insert(spec.label()) {
                return Err(Error::config(format!(
                    "duplicate beamformer label `{}`",
                    spec.label()
                )));
            }
        }
        if let Some(b) = &self.btr {
            b.grid()?;
            if b.trial >= self.trials {
                return Err(Error::config(format!(
                    "btr trial {} is outside the {} configured trials",
                    b.trial, self.trials
                )));
            }
            if let Some(l) = b.beamformers.iter().find(|l| !labels.contains(*l)) {
                return Err(Error::config(format!("btr names unknown beamformer `{l}`")));
            }
        }
        Ok(())
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }

    pub fn trial_scenario(&self, trial: usize) -> ScenarioConfig {
        ScenarioConfig {
            seed: self.trial_seed(trial),
            ..self.scenario.clone()
        }
    }

    pub fn spec(&self, label: &str) -> Option<&BeamformerSpec> {
        self.beamformers.iter().find(|s| s.label() == label)
    }

    fn weight_stride(&self) -> usize {
        self.outputs
            .weight_stride
            .unwrap_or_else(|| default_weight_stride(self.scenario.horizon))
    }
}

/// Runs one roster entry on a generated scenario, steered by `nu`.
pub fn run_beamformer(
    spec: &BeamformerSpec,
    truth: &ScenarioTruth,
    nu: &SteeringVector,
    loading: &LoadingRule,
    stride: usize,
) -> Result<RunTrace> {
    let x = truth.snapshots();
    let delta = spec.loading.as_ref().unwrap_or(loading).resolve(x);
    let penalty = || {
        spec.resolve_penalty(x.nrows(), truth.noise_power())
            .ok_or_else(|| Error::config(format!("beamformer `{}` has no penalty", spec.label())))
    };
    let online = || -> Result<OnlineConfig> {
        Ok(OnlineConfig {
            max_candidates: spec.max_candidates.unwrap_or(DEFAULT_MAX_CANDIDATES),
            cost: spec.cost.unwrap_or_default(),
            ..OnlineConfig::new(penalty()?, spec.tau.unwrap_or(0))
        })
    };
    match spec.kind {
        MethodKind::Cbf => cbf_run(x, nu, stride),
        MethodKind::BatchCapon => batch_capon_run(x, nu, delta, stride),
        MethodKind::AdaptiveMvdr => adaptive_mvdr_run(x, nu, delta, stride),
        MethodKind::Gsc => gsc_run(x, nu, delta, stride),
        MethodKind::SlidingMpdr => sliding_mpdr_run(x, nu, spec.window.unwrap_or(0), delta, stride),
        MethodKind::Omniscient => {
            let delta = spec.loading.map_or(0.0, |rule| rule.resolve(x));
            omniscient_capon_run(truth, nu, delta, stride)
        }
        MethodKind::Bsb => Ok(bsb_run(x, nu, penalty()?, delta, stride)?.0),
        MethodKind::Osb => osb_run(x, nu, delta, online()?, stride),
        MethodKind::Osrls => osrls_beamformer_run(x, nu, delta, online()?, stride),
    }
}

/// One beamformer's outcome on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub label: String,
    pub kind: MethodKind,
    pub z: Vec<C64>,
    pub cumulative_cost: Vec<f64>,
    pub cum_mse: Vec<f64>,
    pub changepoints: Vec<usize>,
    pub mean_sinr_db: f64,
}

impl MethodRun {
    pub fn final_cum_mse(&self) -> f64 {
        self.cum_mse.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub true_changepoints: Vec<usize>,
    pub runs: Vec<MethodRun>,
}

impl TrialResult {
    pub fn run(&self, label: &str) -> Option<&MethodRun> {
        self.runs.iter().find(|r| r.label == label)
    }
}

pub fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<TrialResult> {
    let truth = generate(&config.trial_scenario(trial))?;
    let nu = truth.steering();
    let stride = config.weight_stride();
    let runs = config
        .beamformers
        .iter()
        .map(|spec| {
            let trace = run_beamformer(spec, &truth, nu, &config.loading, stride)?;
            let sinr = sinr_trace(&trace.weights_at, &truth)?;
            let mean_sinr_db = if sinr.is_empty() {
                f64::NAN
            } else {
                sinr.iter().sum::<f64>() / sinr.len() as f64
            };
            Ok(MethodRun {
                label: spec.label(),
                kind: spec.kind,
                cum_mse: mse_trace(&trace.z, truth.target_waveform())?,
                z: trace.z,
                cumulative_cost: trace.cumulative_cost,
                changepoints: trace.changepoints,
                mean_sinr_db,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialResult {
        trial,
        seed: config.trial_seed(trial),
        true_changepoints: truth.true_changepoints().to_vec(),
        runs,
    })
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot start {workers} workers: {e}")))
}

/// Runs every trial on `workers` threads. Results are ordered by trial, so
/// the worker count never changes the output.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<ResultBundle> {
    config.validate()?;
    info!(
        "running {} trials x {} beamformers, T = {}",
        config.trials,
        config.beamformers.len(),
        config.scenario.horizon
    );
    let trials = thread_pool(workers)?.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|k| {
                let r = run_trial(config, k);
                info!("trial {k} done");
                r
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let summary = Summary::new(config, &trials);
    Ok(ResultBundle {
        config: config.clone(),
        trials,
        summary,
    })
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub label: String,
    pub kind: MethodKind,
    pub final_cum_mse: Stat,
    /// `10·log10` of the mean final cumulative MSE.
    pub final_cum_mse_db: f64,
    pub mean_sinr_db: Stat,
    pub n_changepoints: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub seed: u64,
    pub label: String,
    pub final_cum_mse: f64,
    pub mean_sinr_db: f64,
    pub n_changepoints: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub trials: usize,
    pub base_seed: u64,
    pub horizon: usize,
    pub methods: Vec<MethodSummary>,
    pub per_trial: Vec<TrialSummary>,
}

impl Summary {
    fn new(config: &ExperimentConfig, trials: &[TrialResult]) -> Self {
        let methods = config
            .beamformers
            .iter()
            .enumerate()
            .map(|(m, spec)| {
                let column = |f: &dyn Fn(&MethodRun) -> f64| -> Vec<f64> {
                    trials.iter().map(|t| f(&t.runs[m])).collect()
                };
                let mse = Stat::of(&column(&|r| r.final_cum_mse()));
                MethodSummary {
                    label: spec.label(),
                    kind: spec.kind,
                    final_cum_mse_db: 10.0 * mse.mean.log10(),
                    final_cum_mse: mse,
                    mean_sinr_db: Stat::of(&column(&|r| r.mean_sinr_db)),
                    n_changepoints: Stat::of(&column(&|r| r.changepoints.len() as f64)),
                }
            })
            .collect();
        let per_trial = trials
            .iter()
            .flat_map(|t| {
                t.runs.iter().map(move |r| TrialSummary {
                    trial: t.trial,
                    seed: t.seed,
                    label: r.label.clone(),
                    final_cum_mse: r.final_cum_mse(),
                    mean_sinr_db: r.mean_sinr_db,
                    n_changepoints: r.changepoints.len(),
                })
            })
            .collect();
        Self {
            name: config.name.clone(),
            trials: trials.len(),
            base_seed: config.base_seed,
            horizon: config.scenario.horizon,
            methods,
            per_trial,
        }
    }

    pub fn method(&self, label: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.label == label)
    }
}

#[derive(Serialize)]
struct TraceRow<'a> {
    trial: usize,
    t: usize,
    algorithm: &'a str,
    z_re: f64,
    z_im: f64,
    cum_cost: f64,
    cum_mse: f64,
}

#[derive(Serialize)]
struct MseRow<'a> {
    algorithm: &'a str,
    t: usize,
    mean_cum_mse: f64,
}

#[derive(Serialize)]
struct BtrRow {
    angle: f64,
    t: usize,
    power_db: f64,
}

#[derive(Serialize)]
struct DetectedChangepoints<'a> {
    algorithm: &'a str,
    changepoints: &'a [usize],
}

#[derive(Serialize)]
struct TrialChangepoints<'a> {
    trial: usize,
    seed: u64,
    true_changepoints: &'a [usize],
    detected: Vec<DetectedChangepoints<'a>>,
}

/// Everything produced by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ResultBundle {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialResult>,
    pub summary: Summary,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

impl ResultBundle {
    /// Trial-averaged cumulative MSE curve of one beamformer.
    pub fn ensemble_mse(&self, label: &str) -> Option<Vec<f64>> {
        let m = self
            .config
            .beamformers
            .iter()
            .position(|s| s.label() == label)?;
        let n = self.trials.len() as f64;
        let horizon = self.config.scenario.horizon;
        let mut acc = vec![0.0; horizon];
        for t in &self.trials {
            for (a, v) in acc.iter_mut().zip(&t.runs[m].cum_mse) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= n);
        Some(acc)
    }

    /// Writes `summary.json`, `changepoints.json` and, when enabled,
    /// `traces.csv` and `mse.csv`. Returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();

        let path = dir.join("summary.json");
        write_json(&path, &self.summary)?;
        written.push(path);

        let path = dir.join("changepoints.json");
        let cps: Vec<TrialChangepoints> = self
            .trials
            .iter()
            .map(|t| TrialChangepoints {
                trial: t.trial,
                seed: t.seed,
                true_changepoints: &t.true_changepoints,
                detected: t
                    .runs
                    .iter()
                    .map(|r| DetectedChangepoints {
                        algorithm: &r.label,
                        changepoints: &r.changepoints,
                    })
                    .collect(),
            })
            .collect();
        write_json(&path, &cps)?;
        written.push(path);

        if self.config.outputs.traces {
            let path = dir.join("traces.csv");
            let mut w = csv_writer(&path)?;
            for t in &self.trials {
                for r in &t.runs {
                    for k in 0..r.z.len() {
                        w.serialize(TraceRow {
                            trial: t.trial,
                            t: k,
                            algorithm: &r.label,
                            z_re: r.z[k].re,
                            z_im: r.z[k].im,
                            cum_cost: r.cumulative_cost[k],
                            cum_mse: r.cum_mse[k],
                        })
                        .map_err(|e| csv_error(&path, e))?;
                    }
                }
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }

        if self.config.outputs.mse {
            let path = dir.join("mse.csv");
            let mut w = csv_writer(&path)?;
            for spec in &self.config.beamformers {
                let label = spec.label();
                let curve = self.ensemble_mse(&label).unwrap_or_default();
                for (t, v) in curve.into_iter().enumerate() {
                    w.serialize(MseRow {
                        algorithm: &label,
                        t,
                        mean_cum_mse: v,
                    })
                    .map_err(|e| csv_error(&path, e))?;
                }
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Scans the configured beamformers over the bearing grid on one trial.
pub fn run_btr(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<Vec<(String, BearingTimeRecord)>> {
    config.validate()?;
    let scan = config.btr.clone().unwrap_or_default();
    if scan.trial >= config.trials {
        return Err(Error::config("btr trial is outside the configured trials"));
    }
    let grid = scan.grid()?;
    let truth = generate(&config.trial_scenario(scan.trial))?;
    let specs: Vec<&BeamformerSpec> = if scan.beamformers.is_empty() {
        config.beamformers.iter().collect()
    } else {
        scan.beamformers
            .iter()
            .filter_map(|l| config.spec(l))
            .collect()
    };
    let pool = thread_pool(workers)?;
    specs
        .into_iter()
        .map(|spec| {
            info!("scanning {} over {} bearings", spec.label(), grid.len());
            let record = pool.install(|| {
                btr(
                    truth.snapshots(),
                    truth.geometry(),
                    &grid,
                    scan.average,
                    |_, nu| Ok(run_beamformer(spec, &truth, nu, &config.loading, 0)?.z),
                )
            })?;
            Ok((spec.label(), record))
        })
        .collect()
}

/// Writes one `btr_<label>.csv` per record with columns `angle,t,power_db`.
pub fn write_btr(records: &[(String, BearingTimeRecord)], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    records
        .iter()
        .map(|(label, rec)| {
            let path = dir.join(format!("btr_{label}.csv"));
            let mut w = csv_writer(&path)?;
            for (r, &angle) in rec.angles.iter().enumerate() {
                for (c, &t) in rec.times.iter().enumerate() {
                    let power_db = 10.0 * rec.power[(r, c)].max(1e-30).log10();
                    w.serialize(BtrRow { angle, t, power_db })
                        .map_err(|e| csv_error(&path, e))?;
                }
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

pub const PRESETS: [&str; 5] = [
    "abrupt_a",
    "abrupt_demo",
    "pw_bearing",
    "pw_time",
    "birth_death",
];

/// Loading shared by the presets: ten pseudo-snapshots of white noise at the
/// record's mean per-channel power.
pub const PRESET_LOADING: LoadingRule = LoadingRule::RecordPower { factor: 10.0 };

pub const PRESET_PENALTY: f64 = 4.8;
pub const PRESET_TAU: usize = 5;

/// The 15-element presets' penalty expressed per element of unit noise, used
/// for the 9-element abrupt scenes.
pub const PRESET_PENALTY_REL: f64 = PRESET_PENALTY / 15.0;

fn abrupt_scene(horizon: usize, switch_times: Option<Vec<usize>>) -> ScenarioConfig {
    ScenarioConfig {
        geometry: ArrayGeometry::nine_element_3600hz(),
        horizon,
        target_angle: 90.0,
        target_snr_db: -9.0,
        inr_db: 20.0,
        interferer_pool: None,
        pool_size: 24,
        suppression_band_db: [3.0, 60.0],
        exclude_main_lobe: true,
        kind: ScenarioKind::AbruptBlocks {
            block_len: 150,
            active: 2,
            inr_range_db: Some([20.0, 25.0]),
            switch_times,
        },
        seed: 0,
    }
}

fn fifteen_element_scene(
    inr_db: f64,
    pool_size: usize,
    band: [f64; 2],
    kind: ScenarioKind,
) -> ScenarioConfig {
    ScenarioConfig {
        geometry: ArrayGeometry::half_wavelength(15, 1000.0, 343.0),
        horizon: 5000,
        target_angle: 90.0,
        target_snr_db: -5.0,
        inr_db,
        interferer_pool: None,
        pool_size,
        suppression_band_db: band,
        exclude_main_lobe: false,
        kind,
        seed: 0,
    }
}

fn window_roster() -> Vec<BeamformerSpec> {
    let mut roster = vec![
        BeamformerSpec::new(MethodKind::Cbf),
        BeamformerSpec::new(MethodKind::Omniscient),
    ];
    roster.extend(SLIDING_WINDOWS.iter().map(|&k| BeamformerSpec::sliding(k)));
    roster.push(BeamformerSpec::online(
        MethodKind::Osb,
        PRESET_PENALTY,
        PRESET_TAU,
    ));
    roster
}

/// Desk-scale versions of the simulation studies.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let base = |name: &str, scenario, beamformers, traces| ExperimentConfig {
        name: Some(name.to_string()),
        trials: DEFAULT_TRIALS,
        base_seed: 1,
        loading: PRESET_LOADING,
        outputs: OutputConfig {
            dir: PathBuf::from("results").join(name),
            traces,
            ..OutputConfig::default()
        },
        btr: None,
        scenario,
        beamformers,
    };
    let online_rel =
        |kind| BeamformerSpec::online(kind, 0.0, PRESET_TAU).with_penalty_rel(PRESET_PENALTY_REL);
    let config = match name {
        "abrupt_a" => base(
            name,
            abrupt_scene(1200, None),
            vec![
                BeamformerSpec::new(MethodKind::Cbf),
                BeamformerSpec::new(MethodKind::BatchCapon),
                BeamformerSpec::new(MethodKind::AdaptiveMvdr),
                BeamformerSpec::new(MethodKind::Omniscient),
                BeamformerSpec::new(MethodKind::Bsb).with_penalty_rel(PRESET_PENALTY_REL),
                online_rel(MethodKind::Osb),
            ],
            true,
        ),
        "abrupt_demo" => {
            let mut c = base(
                name,
                abrupt_scene(1000, Some(vec![200, 450, 700, 850])),
                vec![
                    BeamformerSpec::new(MethodKind::Omniscient),
                    BeamformerSpec::new(MethodKind::AdaptiveMvdr),
                    online_rel(MethodKind::Osb),
                ],
                true,
            );
            c.btr = Some(BtrConfig {
                beamformers: vec!["osb".into(), "omniscient".into()],
                ..BtrConfig::default()
            });
            c
        }
        "pw_bearing" => base(
            name,
            fifteen_element_scene(
                11.0,
                4,
                [4.0, 15.0],
                ScenarioKind::PiecewiseBearing {
                    block_len: 500,
                    jitter: 30,
                },
            ),
            window_roster(),
            false,
        ),
        "pw_time" => base(
            name,
            fifteen_element_scene(
                12.0,
                6,
                [3.0, 15.0],
                ScenarioKind::PiecewiseTime {
                    block_len: 500,
                    jitter: 50,
                    active: 2,
                },
            ),
            window_roster(),
            false,
        ),
        "birth_death" => {
            let mut roster = window_roster();
            roster.insert(2, BeamformerSpec::new(MethodKind::AdaptiveMvdr));
            base(
                name,
                fifteen_element_scene(
                    12.0,
                    8,
                    [3.0, 15.0],
                    ScenarioKind::BirthDeath {
                        p_birth: 0.02,
                        p_death: 0.001,
                        max_active: 2,
                    },
                ),
                roster,
                false,
            )
        }
        other => {
            return Err(Error::config(format!(
                "unknown preset `{other}`; known presets: {}",
                PRESETS.join(", ")
            )))
        }
    };
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(kind: MethodKind) -> ExperimentConfig {
        let mut c = preset("abrupt_a").unwrap();
        c.scenario.horizon = 300;
        c.trials = 2;
        c.beamformers = vec![BeamformerSpec::new(kind)];
        c
    }

    #[test]
    fn presets_carry_published_parameters() {
        let bd = preset("birth_death").unwrap();
        let osb = bd.spec("osb").unwrap();
        assert_eq!(osb.penalty, Some(4.8));
        assert_eq!(osb.tau, Some(5));
        assert!(matches!(
            bd.scenario.kind,
            ScenarioKind::BirthDeath { p_birth, p_death, max_active: 2 } if p_birth == 0.02 && p_death == 0.001
        ));
        assert_eq!(preset("pw_bearing").unwrap().scenario.target_snr_db, -5.0);
        assert!(matches!(
            preset("abrupt_a").unwrap().scenario.kind,
            ScenarioKind::AbruptBlocks { block_len: 150, .. }
        ));
        let windows: Vec<usize> = preset("pw_time")
            .unwrap()
            .beamformers
            .iter()
            .filter_map(|s| s.window)
            .collect();
        assert_eq!(windows, SLIDING_WINDOWS);
    }

    #[test]
    fn unknown_preset_is_a_config_error() {
        assert_eq!(preset("nope").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn every_preset_round_trips_through_toml() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            let text = c.to_toml_string().unwrap();
            assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c, "{name}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let text = preset("abrupt_a").unwrap().to_toml_string().unwrap();
        let bad = text.replacen("trials =", "trails =", 1);
        let err = ExperimentConfig::from_toml_str(&bad).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.contains("trails") && msg.contains("line"), "{msg}");
    }

    #[test]
    fn misplaced_and_missing_params_are_rejected() {
        let mut s = BeamformerSpec::new(MethodKind::Cbf);
        s.window = Some(4);
        assert!(s.validate().is_err());
        assert!(BeamformerSpec::new(MethodKind::SlidingMpdr)
            .validate()
            .is_err());
        assert!(BeamformerSpec::new(MethodKind::Bsb).validate().is_err());
        let mut osb = BeamformerSpec::online(MethodKind::Osb, 1.0, 5);
        osb.validate().unwrap();
        osb.penalty_rel = Some(0.1);
        assert!(osb.validate().is_err());
        osb.penalty_rel = None;
        osb.tau = None;
        assert!(osb.validate().is_err());
    }

    #[test]
    fn duplicate_labels_are_rejected() {
        let mut c = tiny(MethodKind::Cbf);
        c.beamformers.push(BeamformerSpec::new(MethodKind::Cbf));
        assert!(c.validate().is_err());
        c.beamformers[1].label = Some("cbf_again".into());
        c.validate().unwrap();
    }

    #[test]
    fn relative_penalty_scales_with_array_and_noise() {
        let s = BeamformerSpec::new(MethodKind::Bsb).with_penalty_rel(0.5);
        assert_eq!(s.resolve_penalty(8, 2.0), Some(8.0));
        assert_eq!(s.with_penalty(3.0).resolve_penalty(8, 2.0), Some(3.0));
    }

    #[test]
    fn summary_mean_is_mean_of_trials() {
        let c = tiny(MethodKind::AdaptiveMvdr);
        let b = run_experiment(&c, 1).unwrap();
        let finals: Vec<f64> = b.trials.iter().map(|t| t.runs[0].final_cum_mse()).collect();
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        let got = b.summary.methods[0].final_cum_mse.mean;
        assert!((got - mean).abs() <= 1e-12 * mean);
        let curve = b.ensemble_mse("adaptive_mvdr").unwrap();
        assert!((curve.last().unwrap() - mean).abs() <= 1e-12 * mean);
    }

    #[test]
    fn trials_use_consecutive_seeds() {
        let mut c = tiny(MethodKind::Cbf);
        c.base_seed = 40;
        let b = run_experiment(&c, 1).unwrap();
        assert_eq!(
            b.trials.iter().map(|t| t.seed).collect::<Vec<_>>(),
            vec![40, 41]
        );
    }

    #[test]
    fn grid_covers_inclusive_range() {
        let g = BtrConfig {
            angle_min: 10.0,
            angle_max: 12.0,
            angle_step: 0.5,
            ..BtrConfig::default()
        };
        assert_eq!(g.grid().unwrap(), vec![10.0, 10.5, 11.0, 11.5, 12.0]);
        let bad = BtrConfig {
            angle_step: 0.0,
            ..BtrConfig::default()
        };
        assert!(bad.grid().is_err());
    }
}
