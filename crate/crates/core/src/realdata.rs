//! Real-data protocol: seeded shuffle and prefix split, features scaled to
//! [0, 1] on the training ranges and centered, every method evaluated over a
//! sweep of subspace dimensions. Responses stay in their original units.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bench::{evaluate_method, into_string, BenchMethod, MethodOutcome, MethodSettings};
use crate::data::{CenteringTransform, Dataset};
use crate::error::{Result, SdrError};
use crate::linalg::{sym_eig_full, SymMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealDataProtocol {
    pub train_size: usize,
    pub test_size: usize,
    pub k_values: Vec<usize>,
    /// Share of the training rows used for γ validation.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl RealDataProtocol {
    /// `⌈0.8·N⌉` training rows, the rest for testing, and `K = 1..=P`.
    pub fn default_for(n: usize, p: usize, seed: u64) -> Self {
        let train_size = (n * 4).div_ceil(5);
        RealDataProtocol {
            train_size,
            test_size: n - train_size,
            k_values: (1..=p).collect(),
            validation_fraction: 0.2,
            seed,
        }
    }

    pub fn validate(&self, n: usize, p: usize) -> Result<()> {
        if self.train_size + self.test_size != n {
            return Err(SdrError::contract(format!(
                "split sizes {} + {} do not sum to {n}",
                self.train_size, self.test_size
            )));
        }
        if self.test_size == 0 || self.train_size < 5 {
            return Err(SdrError::contract("split leaves too few rows"));
        }
        if self.k_values.is_empty() || self.k_values.iter().any(|&k| k == 0 || k > p) {
            return Err(SdrError::contract(format!("every K must lie in [1, {p}]")));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(SdrError::contract("validation fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Seeded permutation of the rows, then a prefix split.
pub fn split(d: &Dataset, train_size: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    let mut idx: Vec<usize> = (0..d.n()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (a, b) = idx.split_at(train_size.min(d.n()));
    Ok((d.select_rows(a)?, d.select_rows(b)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub method: BenchMethod,
    pub k: usize,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<MethodOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealDataReport {
    pub protocol: RealDataProtocol,
    pub p: usize,
    pub names: Vec<String>,
    /// Eigenvalues of the covariance of the scaled training features,
    /// largest first.
    pub spectrum: Vec<f64>,
    /// Ordered by method (request order), then K.
    pub curves: Vec<CurvePoint>,
}

pub const CURVE_CSV_HEADER: [&str; 4] = ["method", "K", "train_mse", "test_mse"];

impl RealDataReport {
    pub fn point(&self, method: BenchMethod, k: usize) -> Option<&MethodOutcome> {
        self.curves
            .iter()
            .find(|c| c.method == method && c.k == k)
            .and_then(|c| c.outcome.as_ref())
    }

    pub fn curves_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CURVE_CSV_HEADER)?;
        for c in &self.curves {
            let (a, b) = match &c.outcome {
                Some(o) => (o.train_mse.to_string(), o.test_mse.to_string()),
                None => (String::new(), String::new()),
            };
            w.write_record([c.method.to_string(), c.k.to_string(), a, b])?;
        }
        into_string(w)
    }

    pub fn spectrum_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["index", "eigenvalue"])?;
        for (i, v) in self.spectrum.iter().enumerate() {
            w.write_record([(i + 1).to_string(), v.to_string()])?;
        }
        into_string(w)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs `methods` at every `K` of the protocol. Per-point failures are
/// recorded, not raised.
pub fn run_real_data(
    d: &Dataset,
    protocol: &RealDataProtocol,
    methods: &[BenchMethod],
    settings: &MethodSettings,
) -> Result<RealDataReport> {
    protocol.validate(d.n(), d.p())?;
    if methods.is_empty() {
        return Err(SdrError::contract("method list is empty"));
    }
    let (train, test) = split(d, protocol.train_size, protocol.seed)?;
    let n_val = ((train.n() as f64) * protocol.validation_fraction).round() as usize;
    let n_val = n_val.clamp(2, train.n() - 3);
    let n_fit = train.n() - n_val;
    let fit = train.select_rows(&(0..n_fit).collect::<Vec<_>>())?;
    let val = train.select_rows(&(n_fit..train.n()).collect::<Vec<_>>())?;

    let scaled = CenteringTransform::fit(&train, true).apply(train.x())?;
    let cov = SymMatrix::gram(&scaled).into_inner() / train.n() as f64;
    let spectrum = sym_eig_full(&SymMatrix::new(cov)?)?.values.as_slice().to_vec();

    let mut curves = Vec::new();
    for &method in methods {
        for &k in &protocol.k_values {
            let s = MethodSettings {
                k,
                unit_scale: true,
                ..settings.clone()
            };
            let res = evaluate_method(method, &train, &test, Some((&fit, &val)), &s);
            let (outcome, error) = match res {
                Ok(o) => (Some(o), None),
                Err(e) => (None, Some(e.to_string())),
            };
            curves.push(CurvePoint {
                method,
                k,
                outcome,
                error,
            });
        }
    }
    Ok(RealDataReport {
        protocol: protocol.clone(),
        p: d.p(),
        names: d.names().to_vec(),
        spectrum,
        curves,
    })
}
