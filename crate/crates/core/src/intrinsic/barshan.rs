use nalgebra::DMatrix;

use super::Gamma;
use crate::data::Dataset;
use crate::error::{Result, SdrError};
use crate::linalg::{sym_eig_topk_tiebreak, SymMatrix};
use crate::pca::{check_k, ensure_centered, pca_basis};
use crate::reducer::{FittedReducer, Hyperparameters, Method, ReducerState};

/// Barshan's method with a linear response kernel: top-`K` eigenvectors of
/// `XᵀyyᵀX`. The matrix has rank one, so for `K > 1` the trailing
/// directions are completed by PCA of the data projected onto the
/// complement of the first direction.
pub fn fit_barshan(d: &Dataset, k: usize) -> Result<FittedReducer> {
    let (u, completed) = barshan_basis(d, k, Gamma::Finite(0.0))?;
    let r = FittedReducer::new(Method::Barshan, ReducerState::Basis(u), Hyperparameters::default())?;
    Ok(flag_completion(r, completed))
}

/// Top-`K` eigenvectors of `Xᵀ(ŷŷᵀ + γI)X` with `ŷ = y/‖y‖`.
pub fn fit_barshan_extended(d: &Dataset, k: usize, gamma: Gamma) -> Result<FittedReducer> {
    let (u, completed) = barshan_basis(d, k, gamma)?;
    let r = FittedReducer::new(
        Method::BarshanExt,
        ReducerState::Basis(u),
        Hyperparameters {
            gamma: Some(gamma),
            ..Default::default()
        },
    )?;
    Ok(flag_completion(r, completed))
}

fn flag_completion(r: FittedReducer, completed: bool) -> FittedReducer {
    if completed {
        r.with_flag("barshan: rank-deficient objective; trailing directions completed from PCA")
    } else {
        r
    }
}

fn barshan_basis(d: &Dataset, k: usize, gamma: Gamma) -> Result<(DMatrix<f64>, bool)> {
    ensure_centered(d)?;
    check_k(k, d.p())?;
    let gram = SymMatrix::gram(d.x());
    let y_norm = d.y().norm();
    let c = d.x().tr_mul(d.y());
    let ch = if y_norm > 0.0 { c / y_norm } else { c };

    if gamma == Gamma::Finite(0.0) && !(ch.norm() > 1e-12 * d.x().norm()) {
        return Err(SdrError::Degenerate {
            iteration: 1,
            reason: "Xᵀy vanishes".into(),
        });
    }
    let s = match gamma {
        Gamma::Infinite => gram.as_matrix().clone(),
        Gamma::Finite(g) => &ch * ch.transpose() + gram.as_matrix() * g,
    };
    let s = SymMatrix::new(s)?;
    // Ties at the cut go first to captured variance (the γ → 0⁺ limit), then
    // to proximity with the PCA subspace.
    let pca = pca_basis(&gram, k)?.vectors;
    let pca_proj = &pca * pca.transpose();
    let e = sym_eig_topk_tiebreak(&s, k, &[gram.as_matrix(), &pca_proj])?;
    let completed = gamma == Gamma::Finite(0.0) && k > 1;
    Ok((e.vectors, completed))
}
