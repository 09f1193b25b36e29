//! Synthetic regression trials: Gaussian designs with a prescribed
//! covariance spectrum and a coefficient vector confined to a 10-dimensional
//! subspace whose alignment with the top principal directions is controlled.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Result, SdrError};

/// SplitMix64 finalizer, used to derive independent per-trial and
/// per-stream seeds from one master seed.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    // row-major fill so the stream layout does not depend on storage order
    let data: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    DMatrix::from_row_slice(rows, cols, &data)
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// signs of `R`'s diagonal absorbed into `Q`).
pub fn random_orthogonal(p: usize, seed: u64) -> DMatrix<f64> {
    let g = gaussian_matrix(p, p, &mut rng(seed));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SpectrumKind {
    FastDecay,
    SlowDecay,
}

impl SpectrumKind {
    pub fn label(self) -> &'static str {
        match self {
            SpectrumKind::FastDecay => "fast",
            SpectrumKind::SlowDecay => "slow",
        }
    }
}

impl fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SpectrumKind {
    type Err = SdrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fast" | "fast_decay" => Ok(SpectrumKind::FastDecay),
            "slow" | "slow_decay" => Ok(SpectrumKind::SlowDecay),
            _ => Err(SdrError::contract(format!("unknown spectrum `{s}`"))),
        }
    }
}

/// Covariance eigenvalues: `a·ρ^i` (fast) or `c·(P − i + 1)/P` (slow),
/// for `i = 1..P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub kind: SpectrumKind,
    pub p: usize,
    pub scale: f64,
    /// Decay ratio for the fast law; unused by the slow law.
    pub rho: f64,
}

impl SpectrumSpec {
    pub fn new(kind: SpectrumKind, p: usize) -> Self {
        SpectrumSpec {
            kind,
            p,
            scale: 25.0,
            rho: 0.85,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || !(self.scale > 0.0) {
            return Err(SdrError::contract("spectrum needs P ≥ 1 and a positive scale"));
        }
        if self.kind == SpectrumKind::FastDecay && !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(SdrError::contract("fast decay needs ρ in (0, 1)"));
        }
        Ok(())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let p = self.p as f64;
        (1..=self.p)
            .map(|i| match self.kind {
                SpectrumKind::FastDecay => self.scale * self.rho.powi(i as i32),
                SpectrumKind::SlowDecay => self.scale * (p - i as f64 + 1.0) / p,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AlignmentCase {
    /// Coefficients live in the span of eigenvectors 1–10.
    WellAligned,
    /// Eigenvectors 11–20.
    Misaligned,
    /// Eigenvectors 11, 13, 15, 17, 19 plus five random orthonormal
    /// directions orthogonal to them.
    Partial,
}

impl AlignmentCase {
    pub const ALL: [AlignmentCase; 3] = [
        AlignmentCase::WellAligned,
        AlignmentCase::Misaligned,
        AlignmentCase::Partial,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AlignmentCase::WellAligned => "well",
            AlignmentCase::Misaligned => "mis",
            AlignmentCase::Partial => "partial",
        }
    }
}

impl fmt::Display for AlignmentCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AlignmentCase {
    type Err = SdrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "well" | "well_aligned" => Ok(AlignmentCase::WellAligned),
            "mis" | "misaligned" => Ok(AlignmentCase::Misaligned),
            "partial" | "partially_aligned" => Ok(AlignmentCase::Partial),
            _ => Err(SdrError::contract(format!("unknown alignment `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub spectrum: SpectrumSpec,
    pub alignment: AlignmentCase,
    pub n_train: usize,
    pub n_test: usize,
    pub latent_dim: usize,
    pub alpha: Vec<f64>,
    pub noise_sd: f64,
    pub k_learn: usize,
    /// Share of the training rows held out for hyperparameter tuning.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl TrialSpec {
    /// The standard setting: `P = 100`, ten latent directions, `α = 1`,
    /// noise sd 0.5 (fast) or 2.5 (slow), 10 000 test rows, `K = 15`.
    pub fn standard(kind: SpectrumKind, alignment: AlignmentCase, n_train: usize, seed: u64) -> Self {
        TrialSpec {
            spectrum: SpectrumSpec::new(kind, 100),
            alignment,
            n_train,
            n_test: 10_000,
            latent_dim: 10,
            alpha: vec![1.0; 10],
            noise_sd: match kind {
                SpectrumKind::FastDecay => 0.5,
                SpectrumKind::SlowDecay => 2.5,
            },
            k_learn: 15,
            validation_fraction: 0.2,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spectrum.validate()?;
        let p = self.spectrum.p;
        if self.alpha.len() != self.latent_dim {
            return Err(SdrError::contract("α length must equal the latent dimension"));
        }
        let needed = match self.alignment {
            AlignmentCase::WellAligned => self.latent_dim,
            AlignmentCase::Misaligned => 2 * self.latent_dim,
            AlignmentCase::Partial => 2 * self.latent_dim - 1,
        };
        if needed > p || !self.latent_dim.is_multiple_of(2) && self.alignment == AlignmentCase::Partial {
            return Err(SdrError::contract(format!(
                "alignment {} with latent dim {} does not fit P = {p}",
                self.alignment, self.latent_dim
            )));
        }
        if self.n_train < 4 || self.n_test < 2 {
            return Err(SdrError::contract("need at least 4 training rows and 2 test rows"));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(SdrError::contract("noise sd must be nonnegative"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(SdrError::contract("validation fraction must lie in (0, 1)"));
        }
        if self.k_learn == 0 || self.k_learn > p {
            return Err(SdrError::contract("K must lie in [1, P]"));
        }
        Ok(())
    }
}

/// Generated data for one trial.
#[derive(Debug, Clone)]
pub struct Trial {
    pub train: Dataset,
    pub test: Dataset,
    /// Rows `0..n_fit` of `train` are used for fitting during tuning, the
    /// remainder for validation.
    pub n_fit: usize,
    pub phi: DMatrix<f64>,
    pub beta: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

impl Trial {
    pub fn fit_part(&self) -> Result<Dataset> {
        self.train.select_rows(&(0..self.n_fit).collect::<Vec<_>>())
    }

    pub fn validation_part(&self) -> Result<Dataset> {
        self.train
            .select_rows(&(self.n_fit..self.train.n()).collect::<Vec<_>>())
    }
}

/// Columns `cols` of `v` plus `extra` unit vectors orthogonal to them and to
/// each other, from Gram–Schmidt (applied twice) on Gaussian draws.
fn complete_with_random(v: &DMatrix<f64>, cols: &[usize], extra: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let p = v.nrows();
    let mut out: Vec<DVector<f64>> = cols.iter().map(|&j| v.column(j).clone_owned()).collect();
    while out.len() < cols.len() + extra {
        let mut g: DVector<f64> = DVector::from_fn(p, |_, _| StandardNormal.sample(rng));
        for _ in 0..2 {
            for q in &out {
                let d = q.dot(&g);
                g.axpy(-d, q, 1.0);
            }
        }
        let n = g.norm();
        if n > 1e-8 {
            out.push(g / n);
        }
    }
    DMatrix::from_columns(&out)
}

pub fn generate_trial(spec: &TrialSpec) -> Result<Trial> {
    spec.validate()?;
    let p = spec.spectrum.p;
    let lambda = spec.spectrum.eigenvalues();
    let v = random_orthogonal(p, mix_seed(spec.seed, 1));
    let l = spec.latent_dim;
    let phi = match spec.alignment {
        AlignmentCase::WellAligned => v.columns(0, l).clone_owned(),
        AlignmentCase::Misaligned => v.columns(l, l).clone_owned(),
        AlignmentCase::Partial => {
            let cols: Vec<usize> = (0..l / 2).map(|i| l + 2 * i).collect();
            complete_with_random(&v, &cols, l - cols.len(), &mut rng(mix_seed(spec.seed, 2)))
        }
    };
    let beta = &phi * DVector::from_column_slice(&spec.alpha);
    // rows ~ N(0, V diag(λ) Vᵀ)
    let mix = DMatrix::from_diagonal(&DVector::from_iterator(p, lambda.iter().map(|l| l.sqrt())))
        * v.transpose();
    let draw = |n: usize, stream: u64| -> Result<Dataset> {
        let mut r = rng(mix_seed(spec.seed, stream));
        let x = gaussian_matrix(n, p, &mut r) * &mix;
        let noise: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut r));
        let y = &x * &beta + noise * spec.noise_sd;
        Dataset::new(x, y)
    };
    let train = draw(spec.n_train, 3)?;
    let test = draw(spec.n_test, 4)?;
    let n_val = ((spec.n_train as f64) * spec.validation_fraction).round() as usize;
    let n_val = n_val.clamp(2, spec.n_train - 2);
    Ok(Trial {
        train,
        test,
        n_fit: spec.n_train - n_val,
        phi,
        beta,
        eigenvectors: v,
        eigenvalues: lambda,
    })
}
