//! Supervised probabilistic PCA fitted by EM.
//!
//! Latent `z ~ N(0, I_K)` drives both `x = Uz + ε_x` and `y = vᵀz + ε_y`
//! with isotropic noise `σ_x²I_P` and `σ_y²`. Stacking `[x; y]` gives a
//! factor model with loadings `W = [U; vᵀ]` and block-diagonal noise `Ψ`;
//! every EM quantity below reduces to the sufficient statistics `XᵀX`,
//! `Xᵀy`, `‖y‖²` and `N`.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Result, SdrError};
use crate::linalg::{spd_solve, SymMatrix};
use crate::pca::{check_k, ensure_centered, pca_basis};
use crate::reducer::{FittedReducer, Hyperparameters, Method, ReducerState, SppcaParams};

const LN_2PI: f64 = 1.837_877_066_409_345_3;
const VARIANCE_FLOOR: f64 = 1e-12;
const MONOTONE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct SppcaOptions {
    pub max_iters: usize,
    /// Relative log-likelihood change below which EM stops.
    pub tol: f64,
}

impl Default for SppcaOptions {
    fn default() -> Self {
        SppcaOptions {
            max_iters: 1000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SppcaFit {
    pub reducer: FittedReducer,
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
    /// A variance hit the floor at some iteration.
    pub floored: bool,
}

struct Stats {
    n: f64,
    p: usize,
    gram: DMatrix<f64>,
    cross: DVector<f64>,
    yy: f64,
    xx: f64,
}

struct Posterior {
    /// `M⁻¹` with `M = I + UᵀU/σ_x² + vvᵀ/σ_y²`; the posterior covariance.
    cov: DMatrix<f64>,
    /// `Σₙ bₙbₙᵀ` with `bₙ = Uᵀxₙ/σ_x² + v yₙ/σ_y²`.
    bb: DMatrix<f64>,
    /// `Uᵀc/σ_x² + v‖y‖²/σ_y²` = `Σₙ bₙ yₙ`.
    by: DVector<f64>,
    log_det_m: f64,
}

impl Stats {
    fn posterior(&self, s: &SppcaParams) -> Result<Posterior> {
        let k = s.u.ncols();
        let sx2 = s.sigma_x * s.sigma_x;
        let sy2 = s.sigma_y * s.sigma_y;
        let utu = s.u.tr_mul(&s.u);
        let m = DMatrix::identity(k, k) + utu / sx2 + &s.v * s.v.transpose() / sy2;
        let chol = m
            .clone()
            .cholesky()
            .ok_or_else(|| SdrError::Internal("SPPCA posterior precision is not positive definite".into()))?;
        let log_det_m = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let cov = chol.inverse();
        let ugu = s.u.tr_mul(&(&self.gram * &s.u));
        let uc = s.u.tr_mul(&self.cross);
        let cross_term = &uc * s.v.transpose() / (sx2 * sy2);
        let mut bb = ugu / (sx2 * sx2) + &cross_term + cross_term.transpose()
            + &s.v * s.v.transpose() * (self.yy / (sy2 * sy2));
        crate::linalg::symmetrize_in_place(&mut bb);
        let by = &uc / sx2 + &s.v * (self.yy / sy2);
        Ok(Posterior {
            cov,
            bb,
            by,
            log_det_m,
        })
    }

    fn log_likelihood(&self, s: &SppcaParams, post: &Posterior) -> f64 {
        let sx2 = s.sigma_x * s.sigma_x;
        let sy2 = s.sigma_y * s.sigma_y;
        let p = self.p as f64;
        let log_det = p * sx2.ln() + sy2.ln() + post.log_det_m;
        let quad = self.xx / sx2 + self.yy / sy2 - (&post.cov * &post.bb).trace();
        -0.5 * (self.n * ((p + 1.0) * LN_2PI + log_det) + quad)
    }
}

/// Log-likelihood of centered data under the SPPCA parameters.
pub fn sppca_log_likelihood(d: &Dataset, s: &SppcaParams) -> Result<f64> {
    let st = stats(d);
    let post = st.posterior(s)?;
    Ok(st.log_likelihood(s, &post))
}

fn stats(d: &Dataset) -> Stats {
    let g = SymMatrix::gram(d.x()).into_inner();
    Stats {
        n: d.n() as f64,
        p: d.p(),
        xx: g.trace(),
        gram: g,
        cross: d.x().tr_mul(d.y()),
        yy: d.y().norm_squared(),
    }
}

fn initial_params(d: &Dataset, st: &Stats, k: usize) -> Result<SppcaParams> {
    let pairs = pca_basis(&SymMatrix::new(st.gram.clone())?, d.p())?;
    let n = st.n;
    let var: Vec<f64> = pairs.values.iter().map(|l| (l / n).max(0.0)).collect();
    let total: f64 = var.iter().sum();
    let rest: f64 = var[k..].iter().sum();
    let mut sx2 = if k < d.p() { rest / (d.p() - k) as f64 } else { 0.0 };
    sx2 = sx2.max(1e-3 * total / d.p() as f64).max(VARIANCE_FLOOR);
    let mut u = pairs.vectors.columns(0, k).clone_owned();
    let mut v = DVector::zeros(k);
    for i in 0..k {
        let scale = (var[i] - sx2).max(1e-3 * var[i]).max(VARIANCE_FLOOR).sqrt();
        u.column_mut(i).scale_mut(scale);
        // covariance of y with the i-th standardized component
        let proj = pairs.vectors.column(i).dot(&st.cross) / n;
        v[i] = proj / var[i].max(VARIANCE_FLOOR).sqrt();
    }
    let y_var = st.yy / n;
    let sy2 = (y_var - v.norm_squared())
        .max(0.1 * y_var)
        .max(VARIANCE_FLOOR);
    Ok(SppcaParams {
        u,
        v,
        sigma_x: sx2.sqrt(),
        sigma_y: sy2.sqrt(),
    })
}

/// EM for SPPCA. The expected second moment `A = Σₙ E[zₙzₙᵀ]` carries
/// `N` copies of the posterior covariance. The log-likelihood must not
/// decrease by more than 1e-8 (relative to its magnitude); a larger drop is
/// reported as an internal error.
pub fn fit_sppca(d: &Dataset, k: usize, opts: SppcaOptions) -> Result<SppcaFit> {
    ensure_centered(d)?;
    check_k(k, d.p())?;
    let st = stats(d);
    let mut params = initial_params(d, &st, k)?;
    let mut post = st.posterior(&params)?;
    let mut ll = st.log_likelihood(&params, &post);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut floored = false;
    let p = d.p() as f64;

    for _ in 0..opts.max_iters {
        let sx2 = params.sigma_x * params.sigma_x;
        let sy2 = params.sigma_y * params.sigma_y;
        // E-step: XᵀZ, Zᵀy and A from the posterior means Z = B M⁻¹.
        let xb = &st.gram * &params.u / sx2 + &st.cross * params.v.transpose() / sy2;
        let xz = &xb * &post.cov;
        let zy = &post.cov * &post.by;
        let zz = &post.cov * &post.bb * &post.cov;
        let mut a = &post.cov * st.n + zz;
        crate::linalg::symmetrize_in_place(&mut a);

        // M-step
        let u_new = spd_solve(&a, &xz.transpose()).transpose();
        let v_new = spd_solve(&a, &DMatrix::from_column_slice(k, 1, zy.as_slice()))
            .column(0)
            .clone_owned();
        let mut sx2_new = (st.xx - u_new.dot(&xz)) / (st.n * p);
        let mut sy2_new = (st.yy - v_new.dot(&zy)) / st.n;
        if sx2_new < VARIANCE_FLOOR {
            sx2_new = VARIANCE_FLOOR;
            floored = true;
        }
        if sy2_new < VARIANCE_FLOOR {
            sy2_new = VARIANCE_FLOOR;
            floored = true;
        }
        params = SppcaParams {
            u: u_new,
            v: v_new,
            sigma_x: sx2_new.sqrt(),
            sigma_y: sy2_new.sqrt(),
        };
        post = st.posterior(&params)?;
        let ll_new = st.log_likelihood(&params, &post);
        if !ll_new.is_finite() {
            return Err(SdrError::NonFinite("SPPCA log-likelihood"));
        }
        if !floored && ll_new < ll - MONOTONE_TOL * ll.abs().max(1.0) {
            return Err(SdrError::Internal(format!(
                "SPPCA log-likelihood decreased from {ll} to {ll_new}"
            )));
        }
        let change = (ll_new - ll).abs() / ll.abs().max(1.0);
        ll = ll_new;
        trace.push(ll);
        if change < opts.tol {
            converged = true;
            break;
        }
    }

    let mut reducer = FittedReducer::new(
        Method::Sppca,
        ReducerState::Sppca(params),
        Hyperparameters::default(),
    )?;
    if floored {
        reducer = reducer.with_flag("sppca: variance floor applied");
    }
    if !converged {
        reducer = reducer.with_flag(format!("sppca: not converged after {} iterations", opts.max_iters));
    }
    Ok(SppcaFit {
        reducer,
        log_likelihood: trace,
        converged,
        floored,
    })
}

/// `y* = vᵀ(UᵀU + σ_x²I)⁻¹Uᵀx* + y_mean` for every centered row of `x`.
pub fn predict_sppca(r: &FittedReducer, x: &DMatrix<f64>, y_mean: f64) -> Result<DVector<f64>> {
    let ReducerState::Sppca(s) = r.state() else {
        return Err(SdrError::contract(format!(
            "predict_sppca needs an SPPCA reducer, got {}",
            r.method()
        )));
    };
    let z = r.reduce(x)?;
    Ok((z * &s.v).add_scalar(y_mean))
}
