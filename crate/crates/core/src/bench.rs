//! Multi-trial benchmark harness: every method is fitted at a fixed `K`,
//! followed by OLS on the reduced features, and scored by train/test MSE.
//! γ-bearing methods are tuned on a validation split carved from training
//! and then refitted on the full training set.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{CenteringTransform, Dataset};
use crate::error::{Result, SdrError};
use crate::intrinsic::{
    fit_barshan_extended, fit_lspca, fit_pls_extended, fit_sppca, Gamma, LspcaOptions, SppcaOptions,
};
use crate::pca::fit_pca;
use crate::reducer::FittedReducer;
use crate::regression::{mse, ols_fit};
use crate::synthetic::{generate_trial, mix_seed, AlignmentCase, SpectrumKind, Trial, TrialSpec};
use crate::wrapper::{fit_bair, fit_pcps, fit_pv, training_mse, PvOptions, ScoreFunction};

/// Benchmark entries. `Barshan` and `Pls` denote the γ-extended variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BenchMethod {
    Ols,
    Pca,
    Bair,
    Pv,
    Pcps,
    Barshan,
    Pls,
    Lspca,
    Sppca,
}

impl BenchMethod {
    pub const ALL: [BenchMethod; 9] = [
        BenchMethod::Ols,
        BenchMethod::Pca,
        BenchMethod::Bair,
        BenchMethod::Pv,
        BenchMethod::Pcps,
        BenchMethod::Barshan,
        BenchMethod::Pls,
        BenchMethod::Lspca,
        BenchMethod::Sppca,
    ];

    pub const GAMMA_METHODS: [BenchMethod; 3] = [BenchMethod::Lspca, BenchMethod::Barshan, BenchMethod::Pls];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchMethod::Ols => "OLS",
            BenchMethod::Pca => "PCA",
            BenchMethod::Bair => "BAIR",
            BenchMethod::Pv => "PV",
            BenchMethod::Pcps => "PCPS",
            BenchMethod::Barshan => "BARSHAN",
            BenchMethod::Pls => "PLS",
            BenchMethod::Lspca => "LSPCA",
            BenchMethod::Sppca => "SPPCA",
        }
    }

    pub fn uses_gamma(self) -> bool {
        Self::GAMMA_METHODS.contains(&self)
    }
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchMethod {
    type Err = SdrError;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase().replace('-', "_");
        let up = up.strip_suffix("_EXT").unwrap_or(&up);
        BenchMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == up)
            .ok_or_else(|| SdrError::contract(format!("unknown method `{s}`")))
    }
}

/// Per-method fitting knobs shared by the synthetic and real-data runs.
#[derive(Debug, Clone)]
pub struct MethodSettings {
    pub k: usize,
    pub score: ScoreFunction,
    pub gamma_grid: Vec<Gamma>,
    /// Scale features to [0, 1] (training ranges) before centering.
    pub unit_scale: bool,
    pub lspca: LspcaOptions,
    pub sppca: SppcaOptions,
    pub pv: PvOptions,
}

impl MethodSettings {
    pub fn new(k: usize) -> Self {
        MethodSettings {
            k,
            score: ScoreFunction::Pearson,
            gamma_grid: Gamma::tuning_grid(),
            unit_scale: false,
            lspca: LspcaOptions::default(),
            sppca: SppcaOptions::default(),
            pv: PvOptions::default(),
        }
    }
}

/// Fits `method` on centered data; `None` means identity features (OLS).
pub fn fit_reducer(
    method: BenchMethod,
    d: &Dataset,
    gamma: Option<Gamma>,
    s: &MethodSettings,
) -> Result<Option<FittedReducer>> {
    let k = s.k;
    let need_gamma = || gamma.ok_or_else(|| SdrError::contract(format!("{method} needs γ")));
    let r = match method {
        BenchMethod::Ols => return Ok(None),
        BenchMethod::Pca => fit_pca(d, k)?,
        BenchMethod::Bair => fit_bair(d, k, s.score, training_mse)?.reducer,
        BenchMethod::Pv => fit_pv(d, k, s.score, s.pv)?,
        BenchMethod::Pcps => fit_pcps(d, k, s.score)?,
        BenchMethod::Barshan => fit_barshan_extended(d, k, need_gamma()?)?,
        BenchMethod::Pls => fit_pls_extended(d, k, need_gamma()?)?,
        BenchMethod::Lspca => fit_lspca(d, k, need_gamma()?, s.lspca)?.0,
        BenchMethod::Sppca => fit_sppca(d, k, s.sppca)?.reducer,
    };
    Ok(Some(r))
}

/// A fitted reduce-then-regress pipeline in the original units.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub transform: CenteringTransform,
    pub reducer: Option<FittedReducer>,
    pub model: crate::regression::RegressionModel,
}

impl Pipeline {
    pub fn fit(method: BenchMethod, train: &Dataset, gamma: Option<Gamma>, s: &MethodSettings) -> Result<Self> {
        let transform = CenteringTransform::fit(train, s.unit_scale);
        let centered = transform.apply_dataset(train)?;
        let reducer = fit_reducer(method, &centered, gamma, s)?;
        let z = match &reducer {
            Some(r) => r.reduce(centered.x())?,
            None => centered.x().clone(),
        };
        let model = ols_fit(&z, train.y())?;
        Ok(Pipeline {
            transform,
            reducer,
            model,
        })
    }

    pub fn features(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let xc = self.transform.apply(x)?;
        match &self.reducer {
            Some(r) => r.reduce(&xc),
            None => Ok(xc),
        }
    }

    pub fn mse(&self, d: &Dataset) -> Result<f64> {
        let pred = self.model.predict(&self.features(d.x())?)?;
        mse(&pred, d.y())
    }
}

/// Scores of one method on one train/test pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub train_mse: f64,
    pub test_mse: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Gamma>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub flags: Vec<String>,
}

/// γ with the lowest validation MSE (first in grid order on ties). Grid
/// points whose fit fails are skipped; the last error is returned when all
/// fail.
pub fn tune_gamma(
    method: BenchMethod,
    fit: &Dataset,
    validation: &Dataset,
    s: &MethodSettings,
) -> Result<Gamma> {
    let mut best: Option<(Gamma, f64)> = None;
    let mut last_err = None;
    for &g in &s.gamma_grid {
        match Pipeline::fit(method, fit, Some(g), s).and_then(|p| p.mse(validation)) {
            Ok(v) if v.is_finite() => {
                if best.is_none_or(|(_, b)| v < b) {
                    best = Some((g, v));
                }
            }
            Ok(_) => last_err = Some(SdrError::NonFinite("validation MSE")),
            Err(e) => last_err = Some(e),
        }
    }
    match (best, last_err) {
        (Some((g, _)), _) => Ok(g),
        (None, Some(e)) => Err(e),
        (None, None) => Err(SdrError::contract("γ grid is empty")),
    }
}

/// Fits `method` on `train` (after tuning γ on `tuning` when it has one)
/// and reports train and test MSE.
pub fn evaluate_method(
    method: BenchMethod,
    train: &Dataset,
    test: &Dataset,
    tuning: Option<(&Dataset, &Dataset)>,
    s: &MethodSettings,
) -> Result<MethodOutcome> {
    let gamma = if method.uses_gamma() {
        let (fit, val) =
            tuning.ok_or_else(|| SdrError::contract(format!("{method} needs a validation split")))?;
        Some(tune_gamma(method, fit, val, s)?)
    } else {
        None
    };
    let pipe = Pipeline::fit(method, train, gamma, s)?;
    let (m, flags) = match &pipe.reducer {
        Some(r) => (r.hyperparameters.m, r.flags.clone()),
        None => (None, Vec::new()),
    };
    Ok(MethodOutcome {
        train_mse: pipe.mse(train)?,
        test_mse: pipe.mse(test)?,
        gamma,
        m,
        flags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchSetting {
    pub spectrum: SpectrumKind,
    pub alignment: AlignmentCase,
    pub n_train: usize,
}

impl BenchSetting {
    /// Stable stream id so a setting's data do not depend on its position
    /// in the configuration.
    fn stream(&self) -> u64 {
        let s = match self.spectrum {
            SpectrumKind::FastDecay => 0u64,
            SpectrumKind::SlowDecay => 1,
        };
        let a = match self.alignment {
            AlignmentCase::WellAligned => 0u64,
            AlignmentCase::Misaligned => 1,
            AlignmentCase::Partial => 2,
        };
        (s << 40) | (a << 32) | self.n_train as u64
    }

    pub fn label(&self) -> String {
        format!("{}/{}/N={}", self.spectrum, self.alignment, self.n_train)
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub settings: Vec<BenchSetting>,
    pub methods: Vec<BenchMethod>,
    pub trials: usize,
    pub seed: u64,
    pub n_test: usize,
    /// Overrides the per-spectrum noise level when set.
    pub noise_sd: Option<f64>,
    pub method: MethodSettings,
}

impl BenchConfig {
    pub fn new(settings: Vec<BenchSetting>, methods: Vec<BenchMethod>, trials: usize, seed: u64) -> Self {
        BenchConfig {
            settings,
            methods,
            trials,
            seed,
            n_test: 10_000,
            noise_sd: None,
            method: MethodSettings::new(15),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.settings.is_empty() {
            return Err(SdrError::contract("no benchmark settings"));
        }
        if self.methods.is_empty() {
            return Err(SdrError::contract("method list is empty"));
        }
        if self.trials == 0 {
            return Err(SdrError::contract("trial count must be at least 1"));
        }
        if self.method.gamma_grid.is_empty() && self.methods.iter().any(|m| m.uses_gamma()) {
            return Err(SdrError::contract("γ grid is empty"));
        }
        for s in &self.settings {
            self.trial_spec(s, 0).validate()?;
        }
        Ok(())
    }

    pub fn trial_seed(&self, setting: &BenchSetting, trial: usize) -> u64 {
        mix_seed(mix_seed(self.seed, setting.stream()), trial as u64)
    }

    pub fn trial_spec(&self, setting: &BenchSetting, trial: usize) -> TrialSpec {
        let mut spec = TrialSpec::standard(
            setting.spectrum,
            setting.alignment,
            setting.n_train,
            self.trial_seed(setting, trial),
        );
        spec.n_test = self.n_test;
        spec.k_learn = self.method.k;
        if let Some(sd) = self.noise_sd {
            spec.noise_sd = sd;
        }
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub method: BenchMethod,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<MethodOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: BenchMethod,
    pub trials_ok: usize,
    pub failures: usize,
    pub mean_train_mse: Option<f64>,
    pub mean_test_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingReport {
    pub setting: BenchSetting,
    pub summaries: Vec<MethodSummary>,
    /// Ordered by trial, then by method in request order.
    pub records: Vec<TrialRecord>,
}

impl SettingReport {
    pub fn summary(&self, method: BenchMethod) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn mean_test(&self, method: BenchMethod) -> Option<f64> {
        self.summary(method).and_then(|s| s.mean_test_mse)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub trials: usize,
    pub k: usize,
    pub n_test: usize,
    pub validation: String,
    pub score: ScoreFunction,
    pub gamma_grid: Vec<Gamma>,
    pub settings: Vec<SettingReport>,
}

pub const REPORT_CSV_HEADER: [&str; 9] = [
    "spectrum",
    "alignment",
    "n_train",
    "method",
    "trials",
    "failures",
    "mean_train_mse",
    "mean_test_mse",
    "seed",
];

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn summarize(methods: &[BenchMethod], records: &[TrialRecord]) -> Vec<MethodSummary> {
    methods
        .iter()
        .map(|&m| {
            let mine: Vec<&TrialRecord> = records.iter().filter(|r| r.method == m).collect();
            let ok: Vec<&MethodOutcome> = mine.iter().filter_map(|r| r.outcome.as_ref()).collect();
            MethodSummary {
                method: m,
                trials_ok: ok.len(),
                failures: mine.len() - ok.len(),
                mean_train_mse: mean_of(ok.iter().map(|o| o.train_mse)),
                mean_test_mse: mean_of(ok.iter().map(|o| o.test_mse)),
            }
        })
        .collect()
}

fn run_trial(cfg: &BenchConfig, setting: &BenchSetting, t: usize) -> Vec<TrialRecord> {
    let spec = cfg.trial_spec(setting, t);
    let record = |method, res: Result<MethodOutcome>| match res {
        Ok(o) => TrialRecord {
            trial: t,
            seed: spec.seed,
            method,
            outcome: Some(o),
            error: None,
        },
        Err(e) => TrialRecord {
            trial: t,
            seed: spec.seed,
            method,
            outcome: None,
            error: Some(e.to_string()),
        },
    };
    let data = generate_trial(&spec).and_then(|trial| {
        let fit = trial.fit_part()?;
        let val = trial.validation_part()?;
        Ok((trial, fit, val))
    });
    match data {
        Ok((trial, fit, val)) => cfg
            .methods
            .iter()
            .map(|&m| {
                record(
                    m,
                    evaluate_method(m, &trial.train, &trial.test, Some((&fit, &val)), &cfg.method),
                )
            })
            .collect(),
        Err(e) => cfg
            .methods
            .iter()
            .map(|&m| record(m, Err(SdrError::Internal(format!("data generation: {e}")))))
            .collect(),
    }
}

/// Runs every setting × trial × method. Trials run in parallel; records and
/// averages are assembled in trial-index order, so the report is identical
/// for any thread count.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let mut settings = Vec::with_capacity(cfg.settings.len());
    for setting in &cfg.settings {
        let per_trial: Vec<Vec<TrialRecord>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, setting, t))
            .collect();
        let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
        settings.push(SettingReport {
            setting: *setting,
            summaries: summarize(&cfg.methods, &records),
            records,
        });
    }
    Ok(BenchReport {
        seed: cfg.seed,
        trials: cfg.trials,
        k: cfg.method.k,
        n_test: cfg.n_test,
        validation: "last 20% of each training set, γ-tuning only; refit on full training".into(),
        score: cfg.method.score,
        gamma_grid: cfg.method.gamma_grid.clone(),
        settings,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl BenchReport {
    pub fn setting(&self, s: &BenchSetting) -> Option<&SettingReport> {
        self.settings.iter().find(|r| r.setting == *s)
    }

    /// One row per setting × method.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(REPORT_CSV_HEADER)?;
        for s in &self.settings {
            for m in &s.summaries {
                w.write_record([
                    s.setting.spectrum.label().to_string(),
                    s.setting.alignment.label().to_string(),
                    s.setting.n_train.to_string(),
                    m.method.to_string(),
                    m.trials_ok.to_string(),
                    m.failures.to_string(),
                    fmt_opt(m.mean_train_mse),
                    fmt_opt(m.mean_test_mse),
                    self.seed.to_string(),
                ])?;
            }
        }
        into_string(w)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Methods down the side, settings across, "train / test" cells.
    pub fn to_table(&self) -> String {
        let mut methods: Vec<BenchMethod> = Vec::new();
        for s in &self.settings {
            for m in &s.summaries {
                if !methods.contains(&m.method) {
                    methods.push(m.method);
                }
            }
        }
        let headers: Vec<String> = self.settings.iter().map(|s| s.setting.label()).collect();
        let cell = |s: &SettingReport, m: BenchMethod| -> String {
            match s.summary(m) {
                Some(MethodSummary {
                    mean_train_mse: Some(a),
                    mean_test_mse: Some(b),
                    failures,
                    ..
                }) => {
                    let mut c = format!("{a:.3} / {b:.3}");
                    if *failures > 0 {
                        let _ = write!(c, " ({failures} failed)");
                    }
                    c
                }
                Some(_) => "failed".into(),
                None => "-".into(),
            }
        };
        let mut rows: Vec<Vec<String>> = vec![std::iter::once("method".to_string()).chain(headers).collect()];
        for &m in &methods {
            rows.push(
                std::iter::once(m.to_string())
                    .chain(self.settings.iter().map(|s| cell(s, m)))
                    .collect(),
            );
        }
        render_table(&rows, &format!("mean train / test MSE over {} trials", self.trials))
    }
}

pub fn render_table(rows: &[Vec<String>], title: &str) -> String {
    let ncols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..ncols)
        .map(|j| rows.iter().filter_map(|r| r.get(j)).map(|c| c.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = format!("{title}\n");
    for (i, r) in rows.iter().enumerate() {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(j, c)| format!("{c:<w$}", w = widths[j]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let total = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}

pub(crate) fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| SdrError::Internal(format!("csv flush: {e}")))?;
    String::from_utf8(bytes).map_err(|e| SdrError::Internal(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub spectrum: SpectrumKind,
    pub n_train: usize,
    pub alignments: Vec<AlignmentCase>,
    /// Subset of [`BenchMethod::GAMMA_METHODS`].
    pub methods: Vec<BenchMethod>,
    pub trials: usize,
    pub seed: u64,
    pub n_test: usize,
    pub grid: Vec<Gamma>,
    pub method: MethodSettings,
}

impl SweepConfig {
    /// Slow decay, `N = 150`, all three alignments, fifteen log-spaced γ in
    /// [1e-4, 1e4].
    pub fn new(trials: usize, seed: u64) -> Self {
        SweepConfig {
            spectrum: SpectrumKind::SlowDecay,
            n_train: 150,
            alignments: AlignmentCase::ALL.to_vec(),
            methods: BenchMethod::GAMMA_METHODS.to_vec(),
            trials,
            seed,
            n_test: 10_000,
            grid: Gamma::log_grid(1e-4, 1e4, 15),
            method: MethodSettings::new(15),
        }
    }

    fn bench_config(&self) -> BenchConfig {
        let mut b = BenchConfig::new(
            self.alignments
                .iter()
                .map(|&alignment| BenchSetting {
                    spectrum: self.spectrum,
                    alignment,
                    n_train: self.n_train,
                })
                .collect(),
            self.methods.clone(),
            self.trials,
            self.seed,
        );
        b.n_test = self.n_test;
        b.method = self.method.clone();
        b.method.gamma_grid = self.grid.clone();
        b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub gamma: Gamma,
    pub mean_test_mse: Option<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub alignment: AlignmentCase,
    pub method: BenchMethod,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReference {
    pub alignment: AlignmentCase,
    pub method: BenchMethod,
    pub mean_test_mse: Option<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub seed: u64,
    pub trials: usize,
    pub spectrum: SpectrumKind,
    pub n_train: usize,
    pub curves: Vec<SweepCurve>,
    pub references: Vec<SweepReference>,
}

pub const SWEEP_CSV_HEADER: [&str; 6] = ["alignment", "method", "gamma", "mean_test_mse", "failures", "trials"];
pub const REFERENCE_CSV_HEADER: [&str; 5] = ["alignment", "method", "mean_test_mse", "failures", "trials"];

/// Per-trial sweep result: test MSE indexed `[method][γ]`, then the PCA and
/// OLS references.
type TrialSweep = (Vec<Vec<Option<f64>>>, [Option<f64>; 2]);

/// Test MSE of `methods` at every γ on a single trial; `None` where a fit
/// failed.
fn sweep_trial(
    trial: &Trial,
    methods: &[BenchMethod],
    grid: &[Gamma],
    s: &MethodSettings,
) -> TrialSweep {
    let curves = methods
        .iter()
        .map(|&m| {
            grid.iter()
                .map(|&g| {
                    Pipeline::fit(m, &trial.train, Some(g), s)
                        .and_then(|p| p.mse(&trial.test))
                        .ok()
                })
                .collect()
        })
        .collect();
    let reference = |m| {
        Pipeline::fit(m, &trial.train, None, s)
            .and_then(|p| p.mse(&trial.test))
            .ok()
    };
    (curves, [reference(BenchMethod::Pca), reference(BenchMethod::Ols)])
}

/// Paired γ sweep: each trial's data are generated once and reused for
/// every γ and method. Methods are fitted on the full training set.
pub fn gamma_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    let bench = cfg.bench_config();
    bench.validate()?;
    if let Some(m) = cfg.methods.iter().find(|m| !m.uses_gamma()) {
        return Err(SdrError::contract(format!("{m} has no γ to sweep")));
    }
    if cfg.grid.is_empty() {
        return Err(SdrError::contract("γ grid is empty"));
    }
    let mut curves = Vec::new();
    let mut references = Vec::new();
    for setting in &bench.settings {
        let per_trial: Vec<Option<TrialSweep>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                generate_trial(&bench.trial_spec(setting, t))
                    .ok()
                    .map(|trial| sweep_trial(&trial, &cfg.methods, &cfg.grid, &bench.method))
            })
            .collect();
        let point = |get: &dyn Fn(&TrialSweep) -> Option<f64>| {
            let vals: Vec<Option<f64>> = per_trial.iter().map(|r| r.as_ref().and_then(get)).collect();
            let failures = vals.iter().filter(|v| v.is_none()).count();
            (mean_of(vals.into_iter().flatten()), failures)
        };
        for (mi, &method) in cfg.methods.iter().enumerate() {
            let points = cfg
                .grid
                .iter()
                .enumerate()
                .map(|(gi, &gamma)| {
                    let (mean, failures) = point(&|r| r.0[mi][gi]);
                    SweepPoint {
                        gamma,
                        mean_test_mse: mean,
                        failures,
                    }
                })
                .collect();
            curves.push(SweepCurve {
                alignment: setting.alignment,
                method,
                points,
            });
        }
        for (ri, method) in [BenchMethod::Pca, BenchMethod::Ols].into_iter().enumerate() {
            let (mean, failures) = point(&|r| r.1[ri]);
            references.push(SweepReference {
                alignment: setting.alignment,
                method,
                mean_test_mse: mean,
                failures,
            });
        }
    }
    Ok(SweepReport {
        seed: cfg.seed,
        trials: cfg.trials,
        spectrum: cfg.spectrum,
        n_train: cfg.n_train,
        curves,
        references,
    })
}

impl SweepReport {
    pub fn curve(&self, alignment: AlignmentCase, method: BenchMethod) -> Option<&SweepCurve> {
        self.curves
            .iter()
            .find(|c| c.alignment == alignment && c.method == method)
    }

    pub fn reference(&self, alignment: AlignmentCase, method: BenchMethod) -> Option<f64> {
        self.references
            .iter()
            .find(|r| r.alignment == alignment && r.method == method)
            .and_then(|r| r.mean_test_mse)
    }

    pub fn curves_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(SWEEP_CSV_HEADER)?;
        for c in &self.curves {
            for p in &c.points {
                w.write_record([
                    c.alignment.label().to_string(),
                    c.method.to_string(),
                    p.gamma.to_string(),
                    fmt_opt(p.mean_test_mse),
                    p.failures.to_string(),
                    self.trials.to_string(),
                ])?;
            }
        }
        into_string(w)
    }

    pub fn references_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(REFERENCE_CSV_HEADER)?;
        for r in &self.references {
            w.write_record([
                r.alignment.label().to_string(),
                r.method.to_string(),
                fmt_opt(r.mean_test_mse),
                r.failures.to_string(),
                self.trials.to_string(),
            ])?;
        }
        into_string(w)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_parse() {
        for m in BenchMethod::ALL {
            assert_eq!(m.as_str().to_lowercase().parse::<BenchMethod>().unwrap(), m);
        }
        assert_eq!("pls_ext".parse::<BenchMethod>().unwrap(), BenchMethod::Pls);
        assert!("nope".parse::<BenchMethod>().is_err());
    }

    #[test]
    fn empty_methods_rejected() {
        let setting = BenchSetting {
            spectrum: SpectrumKind::FastDecay,
            alignment: AlignmentCase::WellAligned,
            n_train: 150,
        };
        let cfg = BenchConfig::new(vec![setting], vec![], 1, 0);
        assert!(run_benchmark(&cfg).is_err());
    }
}
