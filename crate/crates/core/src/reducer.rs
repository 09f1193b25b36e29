//! The uniform fitted-reducer contract and its JSON model format.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdrError};
use crate::intrinsic::Gamma;
use crate::linalg::{spd_solve, stiefel_error, StiefelPoint};
use crate::wrapper::ScoreFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Pca,
    Bair,
    Pv,
    Pcps,
    Pls,
    PlsExt,
    Barshan,
    BarshanExt,
    Lspca,
    Sppca,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Pca,
        Method::Bair,
        Method::Pv,
        Method::Pcps,
        Method::Pls,
        Method::PlsExt,
        Method::Barshan,
        Method::BarshanExt,
        Method::Lspca,
        Method::Sppca,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pca => "PCA",
            Method::Bair => "BAIR",
            Method::Pv => "PV",
            Method::Pcps => "PCPS",
            Method::Pls => "PLS",
            Method::PlsExt => "PLS_EXT",
            Method::Barshan => "BARSHAN",
            Method::BarshanExt => "BARSHAN_EXT",
            Method::Lspca => "LSPCA",
            Method::Sppca => "SPPCA",
        }
    }

    fn carries_orthonormal_basis(self) -> bool {
        !matches!(self, Method::Pv | Method::Sppca)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = SdrError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| SdrError::contract(format!("unknown method `{s}`")))
    }
}

/// One select-project-deflate iteration of the PV method.
#[derive(Debug, Clone, PartialEq)]
pub struct PvStep {
    /// Selected variable indices, in score order.
    pub selected: Vec<usize>,
    /// First principal direction of the selected columns (length `|selected|`).
    pub direction: DVector<f64>,
    /// Regression of every variable on the component (length `P`).
    pub deflation: DVector<f64>,
}

/// Parameters of the supervised probabilistic PCA model.
#[derive(Debug, Clone, PartialEq)]
pub struct SppcaParams {
    /// `P×K` loadings; not orthogonal in general.
    pub u: DMatrix<f64>,
    /// Response loading.
    pub v: DVector<f64>,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl SppcaParams {
    /// Posterior-mean latent coordinates `(UᵀU + σ_x²I)⁻¹Uᵀx` for every row.
    pub fn latent(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let k = self.u.ncols();
        let m = self.u.tr_mul(&self.u) + DMatrix::identity(k, k) * (self.sigma_x * self.sigma_x);
        // Zᵀ = M⁻¹ Uᵀ Xᵀ
        let rhs = self.u.tr_mul(&x.transpose());
        spd_solve(&m, &rhs).transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReducerState {
    Basis(DMatrix<f64>),
    Pv(Vec<PvStep>),
    Sppca(SppcaParams),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<Gamma>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<ScoreFunction>,
}

/// Fitted state of any reducer.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedReducer {
    method: Method,
    k: usize,
    p: usize,
    state: ReducerState,
    pub hyperparameters: Hyperparameters,
    /// Notes raised during fitting (degenerate completion, variance floor, ...).
    pub flags: Vec<String>,
}

impl FittedReducer {
    pub fn new(method: Method, state: ReducerState, hyperparameters: Hyperparameters) -> Result<Self> {
        let (p, k) = match (&state, method) {
            (ReducerState::Pv(steps), Method::Pv) => {
                let p = steps
                    .first()
                    .map(|s| s.deflation.len())
                    .ok_or_else(|| SdrError::contract("PV state has no iterations"))?;
                for s in steps {
                    if s.deflation.len() != p
                        || s.direction.len() != s.selected.len()
                        || s.selected.iter().any(|&j| j >= p)
                    {
                        return Err(SdrError::contract("inconsistent PV iteration state"));
                    }
                }
                (p, steps.len())
            }
            (ReducerState::Sppca(s), Method::Sppca) => {
                if s.v.len() != s.u.ncols() {
                    return Err(SdrError::contract("SPPCA response loading length != K"));
                }
                if !(s.sigma_x > 0.0 && s.sigma_y > 0.0) {
                    return Err(SdrError::contract("SPPCA noise scales must be positive"));
                }
                (s.u.nrows(), s.u.ncols())
            }
            (ReducerState::Basis(u), m) if m.carries_orthonormal_basis() => {
                let err = stiefel_error(u);
                if err > StiefelPoint::FEASIBILITY_TOL {
                    return Err(SdrError::contract(format!(
                        "{m} basis is not orthonormal (‖UᵀU − I‖_F = {err:.3e})"
                    )));
                }
                (u.nrows(), u.ncols())
            }
            _ => {
                return Err(SdrError::contract(format!(
                    "state variant does not match method {method}"
                )))
            }
        };
        if k == 0 || k > p {
            return Err(SdrError::contract(format!("K={k} must lie in [1, {p}]")));
        }
        Ok(FittedReducer {
            method,
            k,
            p,
            state,
            hyperparameters,
            flags: Vec::new(),
        })
    }

    pub fn with_flag(mut self, flag: impl Into<String>) -> Self {
        self.flags.push(flag.into());
        self
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn state(&self) -> &ReducerState {
        &self.state
    }

    /// The `P×K` basis for basis-carrying methods.
    pub fn basis(&self) -> Option<&DMatrix<f64>> {
        match &self.state {
            ReducerState::Basis(u) => Some(u),
            _ => None,
        }
    }

    /// Maps centered rows into the reduced space.
    pub fn reduce(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.p {
            return Err(SdrError::DimensionMismatch {
                what: "reduce input columns",
                expected: self.p,
                found: x.ncols(),
            });
        }
        let z = match &self.state {
            ReducerState::Basis(u) => x * u,
            ReducerState::Pv(steps) => {
                let mut xk = x.clone();
                let mut z = DMatrix::zeros(x.nrows(), steps.len());
                for (k, s) in steps.iter().enumerate() {
                    let zk = xk.select_columns(&s.selected) * &s.direction;
                    xk -= &zk * s.deflation.transpose();
                    z.set_column(k, &zk);
                }
                z
            }
            ReducerState::Sppca(s) => s.latent(x),
        };
        if z.iter().any(|v| !v.is_finite()) {
            return Err(SdrError::NonFinite("reduced features"));
        }
        Ok(z)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Wire::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let w: Wire = serde_json::from_str(s)?;
        w.try_into()
    }
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn from_rows(rows: &[Vec<f64>], ncols_if_empty: usize) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(ncols_if_empty, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(SdrError::contract("ragged matrix rows"));
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.iter().flatten().copied(),
    ))
}

#[derive(Serialize, Deserialize)]
struct PvStepWire {
    selected: Vec<usize>,
    direction: Vec<f64>,
    deflation: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SppcaWire {
    #[serde(rename = "U")]
    u: Vec<Vec<f64>>,
    v: Vec<f64>,
    sigma_x: f64,
    sigma_y: f64,
}

#[derive(Serialize, Deserialize)]
struct Wire {
    method: Method,
    k: usize,
    p: usize,
    basis: Option<Vec<Vec<f64>>>,
    pv_state: Option<Vec<PvStepWire>>,
    sppca_state: Option<SppcaWire>,
    hyperparameters: Hyperparameters,
    #[serde(default)]
    flags: Vec<String>,
}

impl From<&FittedReducer> for Wire {
    fn from(r: &FittedReducer) -> Self {
        let (basis, pv_state, sppca_state) = match &r.state {
            ReducerState::Basis(u) => (Some(to_rows(u)), None, None),
            ReducerState::Pv(steps) => (
                None,
                Some(
                    steps
                        .iter()
                        .map(|s| PvStepWire {
                            selected: s.selected.clone(),
                            direction: s.direction.iter().copied().collect(),
                            deflation: s.deflation.iter().copied().collect(),
                        })
                        .collect(),
                ),
                None,
            ),
            ReducerState::Sppca(s) => (
                None,
                None,
                Some(SppcaWire {
                    u: to_rows(&s.u),
                    v: s.v.iter().copied().collect(),
                    sigma_x: s.sigma_x,
                    sigma_y: s.sigma_y,
                }),
            ),
        };
        Wire {
            method: r.method,
            k: r.k,
            p: r.p,
            basis,
            pv_state,
            sppca_state,
            hyperparameters: r.hyperparameters.clone(),
            flags: r.flags.clone(),
        }
    }
}

impl TryFrom<Wire> for FittedReducer {
    type Error = SdrError;

    fn try_from(w: Wire) -> Result<Self> {
        let state = match (w.basis, w.pv_state, w.sppca_state) {
            (Some(b), None, None) => ReducerState::Basis(from_rows(&b, w.k)?),
            (None, Some(steps), None) => ReducerState::Pv(
                steps
                    .into_iter()
                    .map(|s| PvStep {
                        selected: s.selected,
                        direction: DVector::from_vec(s.direction),
                        deflation: DVector::from_vec(s.deflation),
                    })
                    .collect(),
            ),
            (None, None, Some(s)) => ReducerState::Sppca(SppcaParams {
                u: from_rows(&s.u, w.k)?,
                v: DVector::from_vec(s.v),
                sigma_x: s.sigma_x,
                sigma_y: s.sigma_y,
            }),
            _ => {
                return Err(SdrError::contract(
                    "exactly one of basis / pv_state / sppca_state must be present",
                ))
            }
        };
        let mut r = FittedReducer::new(w.method, state, w.hyperparameters)?;
        if r.k != w.k || r.p != w.p {
            return Err(SdrError::contract("declared k/p disagree with stored state"));
        }
        r.flags = w.flags;
        Ok(r)
    }
}
