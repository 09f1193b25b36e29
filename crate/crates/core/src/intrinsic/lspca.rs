use nalgebra::{DMatrix, DVector};

use super::Gamma;
use crate::data::Dataset;
use crate::error::Result;
use crate::linalg::{spd_solve, stiefel_step, tangent_projection, StiefelPoint, SymMatrix};
use crate::pca::{check_k, ensure_centered, pca_basis};
use crate::reducer::{FittedReducer, Hyperparameters, Method, ReducerState};

const ARMIJO: f64 = 0.25;

#[derive(Debug, Clone, Copy)]
pub struct LspcaOptions {
    pub max_iters: usize,
    /// Stop once a backtracked step lowers the objective by less than this
    /// fraction of its current value.
    pub tol: f64,
    /// First trial step; derived from the data scale when `None`.
    pub initial_step: Option<f64>,
}

impl Default for LspcaOptions {
    fn default() -> Self {
        LspcaOptions {
            max_iters: 500,
            tol: 1e-9,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LspcaSolution {
    pub u: StiefelPoint,
    pub beta: DVector<f64>,
    /// Objective at the start and after every accepted step.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Sufficient statistics: `XᵀX`, `Xᵀy`, `‖y‖²`, `tr(XᵀX)`.
struct Stats {
    gram: DMatrix<f64>,
    cross: DVector<f64>,
    yy: f64,
    trace: f64,
}

impl Stats {
    fn new(d: &Dataset) -> (Self, SymMatrix) {
        let g = SymMatrix::gram(d.x());
        let s = Stats {
            gram: g.as_matrix().clone(),
            cross: d.x().tr_mul(d.y()),
            yy: d.y().norm_squared(),
            trace: g.as_matrix().trace(),
        };
        (s, g)
    }

    fn beta(&self, u: &DMatrix<f64>, gu: &DMatrix<f64>) -> DVector<f64> {
        let a = u.tr_mul(gu);
        let b = DMatrix::from_column_slice(u.ncols(), 1, u.tr_mul(&self.cross).as_slice());
        spd_solve(&a, &b).column(0).clone_owned()
    }

    /// Objective, optimal β and `XᵀXU` at `u`.
    fn eval(&self, u: &DMatrix<f64>, gamma: f64) -> (f64, DVector<f64>, DMatrix<f64>) {
        let gu = &self.gram * u;
        let beta = self.beta(u, &gu);
        // ‖y − XUβ‖² = ‖y‖² − 2βᵀUᵀc + βᵀUᵀGUβ, with the normal equations
        // folded in only through the computed β.
        let ub = u * &beta;
        let fit = self.yy - 2.0 * self.cross.dot(&ub) + ub.dot(&(&self.gram * &ub));
        let recon = self.trace - u.dot(&gu);
        let f = fit.max(0.0) + if gamma > 0.0 { gamma * recon.max(0.0) } else { 0.0 };
        (f, beta, gu)
    }
}

/// `‖y − XUβ‖² + γ‖X − XUUᵀ‖²_F` at the least-squares β for `u`.
pub fn lspca_objective(d: &Dataset, u: &DMatrix<f64>, gamma: f64) -> f64 {
    let (stats, _) = Stats::new(d);
    stats.eval(u, gamma).0
}

/// Least-squares PCA: minimizes `‖y − XUβ‖² + γ‖X − XUUᵀ‖²_F` over
/// orthonormal `U` and free `β`. β is solved in closed form for the current
/// `U`; `U` takes projected-gradient steps with a QR retraction, halving the
/// step until the Armijo condition holds. Starts from the PCA basis.
pub fn fit_lspca(
    d: &Dataset,
    k: usize,
    gamma: Gamma,
    opts: LspcaOptions,
) -> Result<(FittedReducer, LspcaSolution)> {
    ensure_centered(d)?;
    check_k(k, d.p())?;
    let (stats, gram) = Stats::new(d);
    let pca = pca_basis(&gram, k)?;
    let hyper = Hyperparameters {
        gamma: Some(gamma),
        ..Default::default()
    };

    let g = match gamma {
        Gamma::Infinite => {
            let u = StiefelPoint::new(pca.vectors)?;
            let (f, beta, _) = stats.eval(u.as_matrix(), 0.0);
            let r = FittedReducer::new(Method::Lspca, ReducerState::Basis(u.as_matrix().clone()), hyper)?;
            let sol = LspcaSolution {
                u,
                beta,
                objective_trace: vec![f],
                converged: true,
                iterations: 0,
            };
            return Ok((r, sol));
        }
        Gamma::Finite(g) => g,
    };

    let mut u = StiefelPoint::new(pca.vectors)?;
    let (mut f, mut beta, mut gu) = stats.eval(u.as_matrix(), g);
    let mut trace = vec![f];
    let lmax = pca.values[0].max(f64::MIN_POSITIVE);
    let s0 = opts
        .initial_step
        .unwrap_or_else(|| 1.0 / (2.0 * lmax * (beta.norm_squared() + g + 1.0)));
    let min_step = s0 * 1e-30;
    let mut step = s0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        // ∂/∂U of the objective at the optimal β
        let resid_dir = &gu * &beta - &stats.cross;
        let mut grad = resid_dir * beta.transpose() * 2.0;
        if g > 0.0 {
            grad -= &gu * (2.0 * g);
        }
        let xi2 = tangent_projection(u.as_matrix(), &grad).norm_squared();
        if xi2 == 0.0 {
            converged = true;
            break;
        }
        let mut accepted = None;
        let mut backtracked = false;
        while step >= min_step {
            let cand = stiefel_step(&u, &grad, step)?;
            let (fc, bc, gc) = stats.eval(cand.as_matrix(), g);
            // Armijo sufficient decrease along the projected gradient
            if fc < f && fc <= f - ARMIJO * step * xi2 {
                accepted = Some((cand, fc, bc, gc));
                break;
            }
            step *= 0.5;
            backtracked = true;
        }
        let Some((cand, fc, bc, gc)) = accepted else {
            // No decrease at any step size: stationary to working precision.
            converged = true;
            break;
        };
        let rel = (f - fc) / f.abs().max(f64::MIN_POSITIVE);
        u = cand;
        f = fc;
        beta = bc;
        gu = gc;
        trace.push(f);
        step *= 2.0;
        // A small decrease only counts once the step has hit the curvature
        // scale; accepted-first-try steps may still be escaping a flat start.
        if rel < opts.tol && backtracked {
            converged = true;
            break;
        }
    }

    let mut r = FittedReducer::new(Method::Lspca, ReducerState::Basis(u.as_matrix().clone()), hyper)?;
    if !converged {
        r = r.with_flag(format!("lspca: not converged after {iterations} iterations"));
    }
    Ok((
        r,
        LspcaSolution {
            u,
            beta,
            objective_trace: trace,
            converged,
            iterations,
        },
    ))
}
