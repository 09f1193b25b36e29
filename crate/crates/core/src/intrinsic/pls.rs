use nalgebra::{DMatrix, DVector};

use super::Gamma;
use crate::data::Dataset;
use crate::error::{Result, SdrError};
use crate::linalg::{fix_sign, sym_eig_topk, SymMatrix};
use crate::pca::{check_k, ensure_centered};
use crate::reducer::{FittedReducer, Hyperparameters, Method, ReducerState};

/// Univariate-response PLS: each direction maximizes `((Xᵏu)ᵀyᵏ)²`, then
/// `Xᵏ⁺¹ = Xᵏ − zᵏuᵏᵀ` and `yᵏ⁺¹` drops its projection on `zᵏ`.
pub fn fit_pls(d: &Dataset, k: usize) -> Result<FittedReducer> {
    let u = pls_directions(d, k, Gamma::Finite(0.0))?;
    FittedReducer::new(Method::Pls, ReducerState::Basis(u), Hyperparameters::default())
}

/// PLS with each direction taken as the top eigenvector of
/// `Xᵏᵀ(ŷᵏŷᵏᵀ + γI)Xᵏ`, where `ŷᵏ = yᵏ/‖y‖` is scaled by the norm of the
/// original response. γ = 0 is plain PLS and γ = ∞ uses `XᵏᵀXᵏ`.
pub fn fit_pls_extended(d: &Dataset, k: usize, gamma: Gamma) -> Result<FittedReducer> {
    let u = pls_directions(d, k, gamma)?;
    FittedReducer::new(
        Method::PlsExt,
        ReducerState::Basis(u),
        Hyperparameters {
            gamma: Some(gamma),
            ..Default::default()
        },
    )
}

fn pls_directions(d: &Dataset, k: usize, gamma: Gamma) -> Result<DMatrix<f64>> {
    ensure_centered(d)?;
    check_k(k, d.p())?;
    let p = d.p();
    let mut xk = d.x().clone();
    let mut yk = d.y().clone();
    let y_norm = d.y().norm();
    let mut gram = SymMatrix::gram(&xk).into_inner();
    let x_scale = xk.norm().max(f64::MIN_POSITIVE);
    let mut basis = DMatrix::zeros(p, k);

    for iter in 0..k {
        let c: DVector<f64> = xk.tr_mul(&yk);
        let u = match gamma {
            Gamma::Finite(0.0) => {
                let cn = c.norm();
                if !(cn > 1e-12 * x_scale * y_norm) {
                    return Err(SdrError::Degenerate {
                        iteration: iter + 1,
                        reason: "Xᵀy vanishes".into(),
                    });
                }
                let mut u = c / cn;
                fix_sign(&mut u);
                u
            }
            _ => {
                let s = match gamma {
                    Gamma::Infinite => gram.clone(),
                    Gamma::Finite(g) => {
                        let ch = if y_norm > 0.0 { c / y_norm } else { c };
                        &ch * ch.transpose() + &gram * g
                    }
                };
                let e = sym_eig_topk(&SymMatrix::new(s)?, 1)?;
                if !(e.values[0] > 0.0) {
                    return Err(SdrError::Degenerate {
                        iteration: iter + 1,
                        reason: "deflated data carry no variance".into(),
                    });
                }
                e.vectors.column(0).clone_owned()
            }
        };
        let z = &xk * &u;
        let zz = z.norm_squared();
        if !(zz > 0.0) {
            return Err(SdrError::Degenerate {
                iteration: iter + 1,
                reason: "direction yields a zero score vector".into(),
            });
        }
        xk -= &z * u.transpose();
        let coef = yk.dot(&z) / zz;
        yk.axpy(-coef, &z, 1.0);
        // (I − uuᵀ) G (I − uuᵀ), matching the deflation of X
        let w = &gram * &u;
        let uw = u.dot(&w);
        gram -= &u * w.transpose() + &w * u.transpose() - &u * u.transpose() * uw;
        basis.set_column(iter, &u);
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_example() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]);
        let y = DVector::from_column_slice(&[1.0, 0.0, -1.0, 0.0]);
        let d = Dataset::new(x, y).unwrap();
        let r = fit_pls(&d, 1).unwrap();
        let u = r.basis().unwrap();
        assert!((u[(0, 0)] - 1.0).abs() < 1e-15);
        assert!(u[(1, 0)].abs() < 1e-15);
    }

    #[test]
    fn zero_cross_covariance_is_degenerate() {
        let x = DMatrix::from_row_slice(3, 1, &[-1.0, 0.0, 1.0]);
        let y = DVector::from_column_slice(&[1.0, -2.0, 1.0]);
        let d = Dataset::new(x, y).unwrap();
        assert!(matches!(
            fit_pls(&d, 1),
            Err(SdrError::Degenerate { iteration: 1, .. })
        ));
    }
}
