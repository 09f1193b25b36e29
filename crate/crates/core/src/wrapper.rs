//! Supervised wrappers around classic PCA: variable pre-selection (Bair),
//! iterative selection with deflation (PV) and PC post-selection (PCPS).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, DVectorView};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Result, SdrError};
use crate::linalg::{sym_eig_full, sym_eig_topk, SymMatrix};
use crate::pca::{check_k, ensure_centered};
use crate::reducer::{FittedReducer, Hyperparameters, Method, PvStep, ReducerState};
use crate::regression::{mse, ols_fit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScoreFunction {
    /// `|⟨x, y⟩|`
    Covariance,
    /// `|⟨x, y⟩| / (‖x‖ ‖y‖)`, zero when either norm vanishes.
    Pearson,
}

impl ScoreFunction {
    pub fn score(self, x: DVectorView<'_, f64>, y: &DVector<f64>) -> f64 {
        let dot = x.dot(y).abs();
        match self {
            ScoreFunction::Covariance => dot,
            ScoreFunction::Pearson => {
                let denom = x.norm() * y.norm();
                if denom > 0.0 {
                    (dot / denom).min(1.0)
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for ScoreFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreFunction::Covariance => "covariance",
            ScoreFunction::Pearson => "pearson",
        })
    }
}

impl FromStr for ScoreFunction {
    type Err = SdrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "covariance" | "cov" => Ok(ScoreFunction::Covariance),
            "pearson" | "corr" => Ok(ScoreFunction::Pearson),
            _ => Err(SdrError::contract(format!("unknown score function `{s}`"))),
        }
    }
}

/// Per-variable scores and the descending ranking (ties: lower index first).
#[derive(Debug, Clone, PartialEq)]
pub struct VariableScores {
    pub scores: Vec<f64>,
    pub ranking: Vec<usize>,
}

pub fn score_variables(x: &DMatrix<f64>, y: &DVector<f64>, f: ScoreFunction) -> Result<VariableScores> {
    if x.nrows() != y.len() {
        return Err(SdrError::DimensionMismatch {
            what: "score_variables response",
            expected: x.nrows(),
            found: y.len(),
        });
    }
    let scores: Vec<f64> = x.column_iter().map(|c| f.score(c.as_view(), y)).collect();
    Ok(VariableScores {
        ranking: rank_descending(&scores),
        scores,
    })
}

fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

fn sub_gram(g: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| g[(idx[a], idx[b])])
}

/// Training MSE of OLS on the reduced features: the default Bair evaluator.
pub fn training_mse(z: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    let model = ols_fit(z, y)?;
    mse(&model.predict(z)?, y)
}

/// Result of a Bair fit plus the evaluator value at every scanned `M`.
#[derive(Debug, Clone)]
pub struct BairFit {
    pub reducer: FittedReducer,
    pub scan: Vec<(usize, f64)>,
}

/// Bair's method with the evaluator choosing `M` (lowest value wins, ties
/// to the smaller `M`). The returned basis is embedded in `P` dimensions,
/// zero outside the selected variables.
pub fn fit_bair<E>(d: &Dataset, k: usize, f: ScoreFunction, mut evaluator: E) -> Result<BairFit>
where
    E: FnMut(&DMatrix<f64>, &DVector<f64>) -> Result<f64>,
{
    ensure_centered(d)?;
    check_k(k, d.p())?;
    let p = d.p();
    let ranking = score_variables(d.x(), d.y(), f)?.ranking;
    let gram = SymMatrix::gram(d.x());

    let mut best: Option<(usize, f64, DMatrix<f64>)> = None;
    let mut scan = Vec::with_capacity(p - k + 1);
    for m in k..=p {
        let sel = &ranking[..m];
        let sub = SymMatrix::new(sub_gram(gram.as_matrix(), sel))?;
        let u = sym_eig_topk(&sub, k)?.vectors;
        let z = d.x().select_columns(sel) * &u;
        let value = evaluator(&z, d.y())?;
        scan.push((m, value));
        if best.as_ref().is_none_or(|(_, b, _)| value < *b) {
            best = Some((m, value, u));
        }
    }
    let (m, _, u) = best.expect("at least one M is scanned");
    let mut basis = DMatrix::zeros(p, k);
    for (row, &j) in ranking[..m].iter().enumerate() {
        basis.row_mut(j).copy_from(&u.row(row));
    }
    let reducer = FittedReducer::new(
        Method::Bair,
        ReducerState::Basis(basis),
        Hyperparameters {
            m: Some(m),
            score: Some(f),
            ..Default::default()
        },
    )?;
    Ok(BairFit { reducer, scan })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PvOptions {
    /// Upper bound on the per-iteration subset size; `None` scans all `P`.
    pub max_m: Option<usize>,
}

/// Piironen–Vehtari iterative supervised PCA. Each iteration ranks the
/// deflated variables by `f`, keeps the subset size whose first PC has the
/// highest Pearson score against the original response (ties to the smaller
/// size), then regresses every variable on that component and subtracts it.
pub fn fit_pv(d: &Dataset, k: usize, f: ScoreFunction, opts: PvOptions) -> Result<FittedReducer> {
    ensure_centered(d)?;
    check_k(k, d.p())?;
    let p = d.p();
    let max_m = opts.max_m.unwrap_or(p).clamp(1, p);
    let y = d.y();
    let y_norm = y.norm();
    let mut xk = d.x().clone();
    let mut steps = Vec::with_capacity(k);

    for iter in 0..k {
        let ranking = score_variables(&xk, y, f)?.ranking;
        let gram = SymMatrix::gram(&xk);
        let cov = xk.tr_mul(y);
        let scale = gram.as_matrix().diagonal().max().max(f64::MIN_POSITIVE);

        let mut best: Option<(f64, usize, DVector<f64>)> = None;
        for m in 1..=max_m {
            let sel = &ranking[..m];
            let (lambda, u) = if m == 1 {
                (gram.as_matrix()[(sel[0], sel[0])], DVector::from_element(1, 1.0))
            } else {
                let e = sym_eig_topk(&SymMatrix::new(sub_gram(gram.as_matrix(), sel))?, 1)?;
                (e.values[0], e.vectors.column(0).clone_owned())
            };
            let score = if lambda > 1e-14 * scale && y_norm > 0.0 {
                let dot: f64 = sel.iter().zip(u.iter()).map(|(&j, w)| cov[j] * w).sum();
                (dot.abs() / (lambda.sqrt() * y_norm)).min(1.0)
            } else {
                0.0
            };
            if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
                best = Some((score, m, u));
            }
        }
        let (_, m, u) = best.expect("at least one subset size is scanned");
        let selected = ranking[..m].to_vec();
        let z = xk.select_columns(&selected) * &u;
        let zz = z.norm_squared();
        if !(zz > 1e-14 * scale) {
            return Err(SdrError::Degenerate {
                iteration: iter + 1,
                reason: "selected columns produce an all-zero component".into(),
            });
        }
        let b = xk.tr_mul(&z) / zz;
        xk -= &z * b.transpose();
        steps.push(PvStep {
            selected,
            direction: u,
            deflation: b,
        });
    }
    FittedReducer::new(
        Method::Pv,
        ReducerState::Pv(steps),
        Hyperparameters {
            score: Some(f),
            ..Default::default()
        },
    )
}

/// PC post-selection: full PCA, then the `K` components scoring highest
/// against the response, kept in score order (ties to the larger
/// eigenvalue). Only components with nonzero variance are scored.
pub fn fit_pcps(d: &Dataset, k: usize, f: ScoreFunction) -> Result<FittedReducer> {
    ensure_centered(d)?;
    check_k(k, d.p())?;
    let pairs = sym_eig_full(&SymMatrix::gram(d.x()))?;
    let top = pairs.values[0].max(0.0);
    let rank_cap = (d.n() - 1).min(d.p());
    let live = pairs
        .values
        .iter()
        .take(rank_cap)
        .take_while(|&&l| l > 1e-10 * top)
        .count();
    let z = d.x() * pairs.vectors.columns(0, live);
    let scores: Vec<f64> = z.column_iter().map(|c| f.score(c.as_view(), d.y())).collect();
    let mut chosen = rank_descending(&scores);
    chosen.truncate(k);
    let padded = chosen.len() < k;
    chosen.extend(live..live + (k - chosen.len()));
    let basis = pairs.vectors.select_columns(&chosen);
    let r = FittedReducer::new(
        Method::Pcps,
        ReducerState::Basis(basis),
        Hyperparameters {
            score: Some(f),
            ..Default::default()
        },
    )?;
    Ok(if padded {
        r.with_flag("pcps: fewer nonzero-variance components than K; padded in eigenvalue order")
    } else {
        r
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn score_examples() {
        let y = v(&[-1.0, 0.0, 1.0]);
        let cov = ScoreFunction::Covariance;
        let pr = ScoreFunction::Pearson;
        assert_eq!(cov.score(y.as_view(), &y), 2.0);
        assert!((pr.score(y.as_view(), &y) - 1.0).abs() < 1e-15);

        let ortho = v(&[1.0, -2.0, 1.0]);
        assert_eq!(cov.score(y.as_view(), &ortho), 0.0);
        assert_eq!(pr.score(y.as_view(), &ortho), 0.0);

        let x2 = v(&[-2.0, 0.0, 2.0]);
        assert_eq!(cov.score(x2.as_view(), &y), 4.0);
        assert!((pr.score(x2.as_view(), &y) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_zero_column_is_zero() {
        let y = v(&[-1.0, 0.0, 1.0]);
        assert_eq!(ScoreFunction::Pearson.score(v(&[0.0, 0.0, 0.0]).as_view(), &y), 0.0);
    }

    #[test]
    fn ranking_ties_prefer_lower_index() {
        let x = DMatrix::from_row_slice(3, 3, &[-1.0, 2.0, -1.0, 0.0, 0.0, 0.0, 1.0, -2.0, 1.0]);
        let y = v(&[-1.0, 0.0, 1.0]);
        let s = score_variables(&x, &y, ScoreFunction::Pearson).unwrap();
        assert_eq!(s.ranking, vec![0, 1, 2]);
    }

    #[test]
    fn rejects_k_above_p() {
        let x = DMatrix::from_row_slice(3, 1, &[-1.0, 0.0, 1.0]);
        let d = Dataset::new(x, v(&[-1.0, 0.0, 1.0])).unwrap();
        assert!(fit_pcps(&d, 2, ScoreFunction::Pearson).is_err());
        assert!(fit_pv(&d, 2, ScoreFunction::Pearson, PvOptions::default()).is_err());
        assert!(fit_bair(&d, 2, ScoreFunction::Pearson, training_mse).is_err());
    }

    #[test]
    fn pv_single_matching_variable() {
        let x = DMatrix::from_row_slice(
            4,
            2,
            &[-1.0, 0.3, 2.0, -0.2, 0.5, 0.4, -1.5, -0.5],
        );
        let y = x.column(0).clone_owned();
        let d = Dataset::new(x.clone(), y).unwrap();
        let r = fit_pv(&d, 1, ScoreFunction::Pearson, PvOptions::default()).unwrap();
        match r.state() {
            ReducerState::Pv(steps) => {
                assert_eq!(steps[0].selected, vec![0]);
                assert_eq!(steps[0].direction.as_slice(), &[1.0]);
            }
            _ => unreachable!(),
        }
        let z = r.reduce(&x).unwrap();
        assert_eq!(z.column(0), x.column(0));
    }

    #[test]
    fn pv_degenerate_when_data_exhausted() {
        // Rank-1 data cannot yield a second nonzero component.
        let col = v(&[-1.0, 0.5, 0.5]);
        let x = DMatrix::from_columns(&[col.clone(), col.clone() * 2.0]);
        let d = Dataset::new(x, col).unwrap();
        assert!(matches!(
            fit_pv(&d, 2, ScoreFunction::Pearson, PvOptions::default()),
            Err(SdrError::Degenerate { iteration: 2, .. })
        ));
    }
}
