//! Classic PCA: top-`K` eigenvectors of `XᵀX`.

use crate::data::Dataset;
use crate::error::{Result, SdrError};
use crate::linalg::{sym_eig_topk, EigenPairs, SymMatrix};
use crate::reducer::{FittedReducer, Hyperparameters, Method, ReducerState};

/// Top-`k` principal directions of a Gram matrix.
pub fn pca_basis(gram: &SymMatrix, k: usize) -> Result<EigenPairs> {
    sym_eig_topk(gram, k)
}

pub fn fit_pca(d: &Dataset, k: usize) -> Result<FittedReducer> {
    ensure_centered(d)?;
    check_k(k, d.p())?;
    let pairs = pca_basis(&SymMatrix::gram(d.x()), k)?;
    FittedReducer::new(
        Method::Pca,
        ReducerState::Basis(pairs.vectors),
        Hyperparameters::default(),
    )
}

pub(crate) fn check_k(k: usize, p: usize) -> Result<()> {
    if k == 0 || k > p {
        return Err(SdrError::contract(format!(
            "target dimension K={k} must lie in [1, {p}]"
        )));
    }
    Ok(())
}

/// Fits expect column-centered data with a centered response.
pub(crate) fn ensure_centered(d: &Dataset) -> Result<()> {
    let n = d.n() as f64;
    for (j, c) in d.x().column_iter().enumerate() {
        let scale = c.amax().max(1.0);
        if (c.sum() / n).abs() > 1e-8 * scale {
            return Err(SdrError::contract(format!("column {j} is not centered")));
        }
    }
    let scale = d.y().amax().max(1.0);
    if (d.y().sum() / n).abs() > 1e-8 * scale {
        return Err(SdrError::contract("response is not centered"));
    }
    Ok(())
}
