//! Brute-force and identity oracles at P ≤ 5 scale, run by `oracle-check`.
//!
//! Each oracle builds seeded data, runs the library and checks the result
//! against an independent computation. With a [`Fault`] enabled, the
//! library output is corrupted before the comparison; every oracle must then
//! report a failure (negative control).

use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sdr_core::intrinsic::{
    fit_barshan, fit_barshan_extended, fit_lspca, fit_pls, fit_sppca, lspca_objective, predict_sppca, Gamma,
    LspcaOptions, SppcaOptions,
};
use sdr_core::linalg::{orthonormalize, stiefel_error, stiefel_step, sym_eig_topk, SymMatrix};
use sdr_core::pca::fit_pca;
use sdr_core::regression::{mse, ols_fit};
use sdr_core::reducer::PvStep;
use sdr_core::synthetic::{generate_trial, mix_seed, random_orthogonal, AlignmentCase, SpectrumKind, TrialSpec};
use sdr_core::wrapper::{fit_bair, fit_pcps, fit_pv, score_variables, training_mse, PvOptions};
use sdr_core::{CenteringTransform, DMatrix, DVector, Dataset, FittedReducer, ReducerState, ScoreFunction};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Corrupts library outputs when enabled.
#[derive(Debug, Clone, Copy, Default)]
pub struct Fault(pub bool);

impl Fault {
    /// Shrinks the first column and leaks it into the second.
    fn matrix(self, mut m: DMatrix<f64>) -> DMatrix<f64> {
        if self.0 && m.ncols() > 0 && m.nrows() > 0 {
            m.column_mut(0).scale_mut(0.9);
            if m.ncols() > 1 {
                let c0 = m.column(0).clone_owned();
                m.column_mut(1).axpy(0.1, &c0, 1.0);
            }
        }
        m
    }

    fn vector(self, mut v: DVector<f64>) -> DVector<f64> {
        if self.0 && !v.is_empty() {
            v[0] += 0.1 * v.norm().max(1.0);
        }
        v
    }

    /// Rotates a unit vector by 20° toward a perpendicular direction.
    fn direction(self, u: DVector<f64>) -> DVector<f64> {
        if !self.0 {
            return u;
        }
        let j = u.iamin();
        let mut w = DVector::zeros(u.len());
        w[j] = 1.0;
        w.axpy(-u.dot(&w), &u, 1.0);
        let w = w.normalize();
        let t = 20f64.to_radians();
        u * t.cos() + w * t.sin()
    }

    /// Pushes a bound-checked quantity well past any tolerance.
    fn value(self, v: f64) -> f64 {
        if self.0 {
            v + 1.0 + v.abs()
        } else {
            v
        }
    }

    /// Appends a step in the wrong direction to a monotone trace.
    fn trace(self, mut t: Vec<f64>, increasing: bool) -> Vec<f64> {
        if self.0 {
            let last = t.last().copied().unwrap_or(0.0);
            let jump = 1.0 + last.abs();
            t.push(if increasing { last - jump } else { last + jump });
        }
        t
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OracleOptions {
    pub seed: u64,
    pub fault: Fault,
}

type Outcome = Result<String, String>;
type Oracle = (&'static str, fn(&Ctx) -> Outcome);

struct Ctx {
    seed: u64,
    fault: Fault,
}

impl Ctx {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix_seed(self.seed, stream))
    }

    fn stream(&self, stream: u64) -> u64 {
        mix_seed(self.seed, stream)
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lib<T>(r: sdr_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn gaussian(rows: usize, cols: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(r))
}

fn gaussian_vec(n: usize, r: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(r))
}

fn center_columns(x: &mut DMatrix<f64>) {
    for mut c in x.column_iter_mut() {
        let m = c.mean();
        c.add_scalar_mut(-m);
    }
}

fn centered(mut x: DMatrix<f64>, y: DVector<f64>) -> Result<Dataset, String> {
    center_columns(&mut x);
    let m = y.mean();
    lib(Dataset::new(x, y.add_scalar(-m)))
}

/// Unequal column scales, response linear in X plus noise.
fn random_dataset(n: usize, p: usize, r: &mut ChaCha8Rng) -> Result<Dataset, String> {
    let mut x = gaussian(n, p, r);
    for (j, mut c) in x.column_iter_mut().enumerate() {
        c.scale_mut(1.0 + 3.0 / (j as f64 + 1.0));
    }
    let w = gaussian_vec(p, r);
    let y = &x * w + gaussian_vec(n, r) * 0.5;
    centered(x, y)
}

fn projector_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a * a.transpose() - b * b.transpose()).norm()
}

fn orthonormality_error(u: &DMatrix<f64>) -> f64 {
    (u.tr_mul(u) - DMatrix::identity(u.ncols(), u.ncols())).norm()
}

fn basis(r: &FittedReducer) -> Result<DMatrix<f64>, String> {
    r.basis().cloned().ok_or_else(|| format!("{} has no basis", r.method()))
}

fn eigen_reconstruction(c: &Ctx) -> Outcome {
    let mut worst: f64 = 0.0;
    for t in 0..10 {
        let a = gaussian(5, 5, &mut c.rng(100 + t));
        let s = (&a + a.transpose()) * 0.5;
        let e = lib(sym_eig_topk(&lib(SymMatrix::new(s.clone()))?, 5))?;
        let v = c.fault.matrix(e.vectors);
        let rec = &v * DMatrix::from_diagonal(&e.values) * v.transpose();
        worst = worst.max((rec - s).norm());
    }
    check(worst <= 1e-8, format!("max ‖VΛVᵀ − S‖ = {worst:.2e} (bound 1e-8)"))
}

fn qr_projector_identity(c: &Ctx) -> Outcome {
    let (mut orth, mut proj): (f64, f64) = (0.0, 0.0);
    for t in 0..10 {
        let m = gaussian(6, 3, &mut c.rng(200 + t));
        let q = c.fault.matrix(lib(orthonormalize(&m))?.into_inner());
        orth = orth.max(orthonormality_error(&q));
        proj = proj.max((&q * q.transpose() * &m - &m).norm());
    }
    check(
        orth <= 1e-10 && proj <= 1e-8,
        format!("‖QᵀQ − I‖ = {orth:.2e} (1e-10), ‖QQᵀM − M‖ = {proj:.2e} (1e-8)"),
    )
}

/// A small step along `+∂/∂U tr(UᵀAU)` raises the trace by the predicted
/// first-order amount.
fn stiefel_finite_difference(c: &Ctx) -> Outcome {
    let mut worst: f64 = 0.0;
    for t in 0..10 {
        let mut r = c.rng(300 + t);
        let b = gaussian(5, 5, &mut r);
        let a = b.tr_mul(&b);
        let u = lib(orthonormalize(&gaussian(5, 2, &mut r)))?;
        let g = -(&a * u.as_matrix()) * 2.0;
        let f = |m: &DMatrix<f64>| (m.transpose() * &a * m).trace();
        let h = 1e-6;
        let u1 = c.fault.matrix(lib(stiefel_step(&u, &g, h))?.into_inner());
        let gain = f(&u1) - f(u.as_matrix());
        let um = u.as_matrix();
        let sym = (um.tr_mul(&g) + g.tr_mul(um)) * 0.5;
        let predicted = h * g.dot(&(&g - um * sym));
        if gain <= 0.0 {
            return Err(format!("dataset {t}: trace fell by {:.2e}", -gain));
        }
        worst = worst.max((gain - predicted).abs() / predicted.abs());
    }
    check(worst <= 1e-3, format!("max relative first-order error {worst:.2e} (1e-3)"))
}

fn centering_round_trip(c: &Ctx) -> Outcome {
    let mut worst: f64 = 0.0;
    for unit in [false, true] {
        let mut r = c.rng(400 + unit as u64);
        let d = lib(Dataset::new(gaussian(30, 5, &mut r).add_scalar(2.0), gaussian_vec(30, &mut r)))?;
        let tr = CenteringTransform::fit(&d, unit);
        let x = gaussian(9, 5, &mut r);
        let back = c.fault.matrix(lib(tr.invert(&lib(tr.apply(&x))?))?);
        worst = worst.max((back - x).amax());
    }
    check(worst <= 1e-12, format!("max |invert(apply(x)) − x| = {worst:.2e} (1e-12)"))
}

/// Column 1 carries y; the others are noise of amplitude 0.01 made
/// orthogonal to y.
fn bair_informative_column(c: &Ctx) -> Outcome {
    let mut weakest: f64 = 1.0;
    for t in 0..5 {
        let mut r = c.rng(500 + t);
        let mut y = gaussian_vec(30, &mut r);
        y.add_scalar_mut(-y.mean());
        let mut x = DMatrix::zeros(30, 3);
        x.set_column(0, &y);
        for j in 1..3 {
            let mut col = gaussian_vec(30, &mut r) * 0.01;
            col.add_scalar_mut(-col.mean());
            let proj = col.dot(&y) / y.norm_squared();
            col.axpy(-proj, &y, 1.0);
            x.set_column(j, &col);
        }
        let d = centered(x, y)?;
        for f in [ScoreFunction::Pearson, ScoreFunction::Covariance] {
            let fit = lib(fit_bair(&d, 1, f, training_mse))?;
            let u = c.fault.matrix(basis(&fit.reducer)?);
            let chosen = fit.reducer.hyperparameters.m.unwrap_or(0);
            let ranking = lib(score_variables(d.x(), d.y(), f))?.ranking;
            if ranking[0] != 0 || chosen == 0 {
                return Err(format!("dataset {t}: informative column not ranked first"));
            }
            weakest = weakest.min(u[(0, 0)].abs());
        }
    }
    check(weakest >= 0.99, format!("min |weight on column 1| = {weakest:.4} (≥ 0.99)"))
}

fn pv_steps(r: &FittedReducer) -> Result<&[PvStep], String> {
    match r.state() {
        ReducerState::Pv(s) => Ok(s),
        _ => Err("not a PV reducer".into()),
    }
}

fn pv_decorrelation(c: &Ctx) -> Outcome {
    let (mut corr, mut defl): (f64, f64) = (0.0, 0.0);
    for t in 0..50 {
        let d = random_dataset(40, 5, &mut c.rng(600 + t))?;
        let r = lib(fit_pv(&d, 3, ScoreFunction::Pearson, PvOptions::default()))?;
        let z = c.fault.matrix(lib(r.reduce(d.x()))?);
        for i in 0..z.ncols() {
            for j in 0..i {
                let (a, b) = (z.column(i), z.column(j));
                corr = corr.max(a.dot(&b).abs() / (a.norm() * b.norm()));
            }
        }
        let mut xk = d.x().clone();
        for s in pv_steps(&r)? {
            let zk = xk.select_columns(&s.selected) * &s.direction;
            xk -= &zk * s.deflation.transpose();
            for col in xk.column_iter() {
                let scale = (col.norm() * zk.norm()).max(1e-300);
                defl = defl.max((col.dot(&zk).abs() - 1e-12).max(0.0) / scale);
            }
        }
    }
    check(
        corr <= 1e-8 && defl <= 1e-8,
        format!("max feature |corr| = {corr:.2e}, max deflation |cos| = {defl:.2e} (1e-8)"),
    )
}

/// Isotropic X: the selected PC maximizes |corr(Xu, y)| over every PC.
fn pcps_exhaustive(c: &Ctx) -> Outcome {
    let mut worst: f64 = 0.0;
    for t in 0..10 {
        let mut r = c.rng(700 + t);
        let mut x = gaussian(200, 5, &mut r);
        center_columns(&mut x);
        let w = gaussian_vec(5, &mut r);
        let y = &x * w;
        let d = centered(x, y)?;
        let fit = lib(fit_pcps(&d, 1, ScoreFunction::Pearson))?;
        let all = basis(&lib(fit_pca(&d, 5))?)?;
        let corr = |u: DVector<f64>| {
            let z = d.x() * u;
            z.dot(d.y()).abs() / (z.norm() * d.y().norm())
        };
        let best = all.column_iter().map(|u| corr(u.clone_owned())).fold(0.0, f64::max);
        let got = corr(c.fault.direction(basis(&fit)?.column(0).clone_owned()));
        worst = worst.max((best - got).abs());
    }
    check(worst <= 1e-12, format!("max |best − chosen| correlation = {worst:.2e} (1e-12)"))
}

/// Maximum of `f` over a 1° grid of unit vectors in ℝ³.
fn sphere_grid_max(f: impl Fn(&DVector<f64>) -> f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for t in 0..=180 {
        let th = (t as f64).to_radians();
        for p in 0..360 {
            let ph = (p as f64).to_radians();
            let u = DVector::from_column_slice(&[th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
            best = best.max(f(&u));
        }
    }
    best
}

fn sphere_grid(c: &Ctx) -> Outcome {
    let mut worst = f64::INFINITY;
    for t in 0..10 {
        let d = random_dataset(40, 3, &mut c.rng(800 + t))?;
        let cross = d.x().tr_mul(d.y());
        let g = d.x().tr_mul(d.x());
        let yy = d.y().norm_squared();
        let cov2 = |u: &DVector<f64>| u.dot(&cross).powi(2);
        let grid = sphere_grid_max(cov2);
        for r in [lib(fit_pls(&d, 1))?, lib(fit_barshan(&d, 1))?] {
            let u = c.fault.direction(basis(&r)?.column(0).clone_owned());
            worst = worst.min(cov2(&u) / grid);
        }
        for gamma in [0.01, 0.3, 5.0] {
            // γ acts as γ‖y‖² on the raw response
            let ext = |u: &DVector<f64>| u.dot(&cross).powi(2) + gamma * yy * u.dot(&(&g * u));
            let grid = sphere_grid_max(ext);
            let r = lib(fit_barshan_extended(&d, 1, Gamma::Finite(gamma)))?;
            let u = c.fault.direction(basis(&r)?.column(0).clone_owned());
            worst = worst.min(ext(&u) / grid);
        }
    }
    check(
        worst >= 1.0 - 1e-3,
        format!("min fitted / grid objective = {worst:.6} (≥ 0.999)"),
    )
}

fn barshan_large_gamma(c: &Ctx) -> Outcome {
    let mut worst: f64 = 0.0;
    for t in 0..5 {
        let d = random_dataset(40, 5, &mut c.rng(900 + t))?;
        let big = c.fault.matrix(basis(&lib(fit_barshan_extended(&d, 2, Gamma::Finite(1e6)))?)?);
        let inf = basis(&lib(fit_barshan_extended(&d, 2, Gamma::Infinite))?)?;
        worst = worst.max(projector_distance(&big, &inf));
    }
    check(worst <= 1e-3, format!("max projector distance γ=1e6 vs ∞: {worst:.2e} (1e-3)"))
}

fn barshan_rank_one(c: &Ctx) -> Outcome {
    let (mut gap, mut second): (f64, f64) = (0.0, 0.0);
    for t in 0..5 {
        let d = random_dataset(30, 5, &mut c.rng(1000 + t))?;
        let cross = d.x().tr_mul(d.y());
        let obj = |u: &DMatrix<f64>| u.tr_mul(&cross).norm_squared();
        let one = basis(&lib(fit_barshan(&d, 1))?)?;
        let two = c.fault.matrix(basis(&lib(fit_barshan(&d, 2))?)?);
        let o1 = obj(&one);
        gap = gap.max((o1 - obj(&two)).abs() / o1);
        // eigenvalue of XᵀyyᵀX along the second direction
        second = second.max(two.column(1).dot(&cross).powi(2) / o1);
    }
    check(
        gap <= 1e-10 && second <= 1e-10,
        format!("objective gap K=2 vs K=1 {gap:.2e}, second eigenvalue ratio {second:.2e} (1e-10)"),
    )
}

fn lspca_noiseless(c: &Ctx) -> Outcome {
    let (mut obj, mut dist): (f64, f64) = (0.0, 0.0);
    for t in 0..5 {
        let mut r = c.rng(1100 + t);
        let mut x = gaussian(40, 5, &mut r);
        center_columns(&mut x);
        let ustar = basis(&lib(fit_pca(&centered(x.clone(), DVector::from_element(40, 1.0))?, 2))?)?;
        let beta = gaussian_vec(2, &mut r);
        let y = &x * &ustar * beta;
        let d = centered(x, y)?;
        let (fit, _) = lib(fit_lspca(&d, 2, Gamma::Finite(0.0), LspcaOptions::default()))?;
        let u = c.fault.matrix(basis(&fit)?);
        obj = obj.max(c.fault.value(lspca_objective(&d, &u, 0.0)));
        dist = dist.max(projector_distance(&u, &ustar));
    }
    check(
        obj <= 1e-10 && dist <= 1e-6,
        format!("max objective {obj:.2e} (1e-10), max projector distance {dist:.2e} (1e-6)"),
    )
}

fn lspca_descent(c: &Ctx) -> Outcome {
    let mut feas: f64 = 0.0;
    for t in 0..20u64 {
        let d = random_dataset(40, 5, &mut c.rng(1200 + t))?;
        let gamma = [0.0, 1e-3, 0.1, 10.0][t as usize % 4];
        let (_, sol) = lib(fit_lspca(&d, 2, Gamma::Finite(gamma), LspcaOptions::default()))?;
        let trace = c.fault.trace(sol.objective_trace, false);
        if let Some(w) = trace.windows(2).find(|w| w[1] > w[0]) {
            return Err(format!("dataset {t}: objective rose from {} to {}", w[0], w[1]));
        }
        feas = feas.max(stiefel_error(&c.fault.matrix(sol.u.into_inner())));
    }
    check(feas <= 1e-8, format!("traces nonincreasing; max ‖UᵀU − I‖ = {feas:.2e} (1e-8)"))
}

/// `XᵀX = I`: extended Barshan and LSPCA solve the same problem.
fn whitened_equivalence(c: &Ctx) -> Outcome {
    let mut worst: f64 = 0.0;
    for t in 0..10 {
        let mut r = c.rng(1300 + t);
        let mut x = gaussian(40, 5, &mut r);
        center_columns(&mut x);
        let q = x.qr().q();
        let y = &q * gaussian_vec(5, &mut r) + gaussian_vec(40, &mut r) * 0.3;
        let d = centered(q, y)?;
        for k in 1..=3 {
            for gamma in [0.1, 1.0] {
                let b = c.fault.matrix(basis(&lib(fit_barshan_extended(&d, k, Gamma::Finite(gamma)))?)?);
                let opts = LspcaOptions {
                    max_iters: 5000,
                    tol: 1e-15,
                    initial_step: None,
                };
                let (l, _) = lib(fit_lspca(&d, k, Gamma::Finite(gamma), opts))?;
                worst = worst.max(projector_distance(&b, &basis(&l)?));
            }
        }
    }
    check(worst <= 1e-6, format!("max projector distance {worst:.2e} (1e-6)"))
}

fn sppca_monotone(c: &Ctx) -> Outcome {
    let mut steps = 0;
    for t in 0..20u64 {
        let d = random_dataset(60, 5, &mut c.rng(1400 + t))?;
        let fit = lib(fit_sppca(&d, 1 + t as usize % 3, SppcaOptions::default()))?;
        let trace = c.fault.trace(fit.log_likelihood, true);
        if let Some(w) = trace.windows(2).find(|w| w[1] < w[0] - 1e-8 * w[0].abs().max(1.0)) {
            return Err(format!("run {t}: log-likelihood fell from {} to {}", w[0], w[1]));
        }
        steps += trace.len() - 1;
    }
    check(true, format!("{steps} EM steps, none decreasing beyond 1e-8"))
}

/// Data drawn from the model itself with noise 1e-3. The best possible
/// prediction error is `σ²(1 + vᵀ(UᵀU)⁻¹v)` to first order.
fn sppca_recovery(c: &Ctx) -> Outcome {
    let sigma = 1e-3;
    let (mut err, mut corr): (f64, f64) = (0.0, 1.0);
    for t in 0..3 {
        let mut r = c.rng(1500 + t);
        // orthogonal loadings of norm 2 keep the Bayes error near σ²
        let u = lib(orthonormalize(&gaussian(5, 2, &mut r)))?.into_inner() * 2.0;
        let v = gaussian_vec(2, &mut r);
        let mut draw = |n: usize| {
            let z = gaussian(n, 2, &mut r);
            let x = &z * u.transpose() + gaussian(n, 5, &mut r) * sigma;
            let y = &z * &v + gaussian_vec(n, &mut r) * sigma;
            (x, y)
        };
        let (x, y) = draw(500);
        let (mut tx, ty) = draw(1000);
        for (j, col) in x.column_iter().enumerate() {
            tx.column_mut(j).add_scalar_mut(-col.mean());
        }
        let y_mean = y.mean();
        let fit = lib(fit_sppca(&centered(x, y)?, 2, SppcaOptions::default()))?;
        let pred = c.fault.vector(lib(predict_sppca(&fit.reducer, &tx, y_mean))?);
        err = err.max(lib(mse(&pred, &ty))?);
        let (pc, tc) = (pred.add_scalar(-pred.mean()), ty.add_scalar(-ty.mean()));
        corr = corr.min(pc.dot(&tc) / (pc.norm() * tc.norm()));
    }
    check(
        err <= 10.0 * sigma * sigma && corr >= 0.99,
        format!("max MSE {err:.2e} (≤ {:.0e}), min correlation {corr:.6} (≥ 0.99)", 10.0 * sigma * sigma),
    )
}

fn ols_normal_equations(c: &Ctx) -> Outcome {
    let mut worst: f64 = 0.0;
    for t in 0..10 {
        let mut r = c.rng(1600 + t);
        let z = gaussian(30, 4, &mut r);
        let y = gaussian_vec(30, &mut r).add_scalar(2.0);
        let model = lib(ols_fit(&z, &y))?;
        let resid = c.fault.vector(&y - lib(model.predict(&z))?);
        let scale = z.norm() * y.norm();
        worst = worst.max(z.tr_mul(&resid).amax() / scale).max(resid.sum().abs() / y.norm());
    }
    check(worst <= 1e-8, format!("max normalized |Zᵀr|, |Σr| = {worst:.2e} (1e-8)"))
}

fn orthogonal_seeds(c: &Ctx) -> Outcome {
    let (mut orth, mut closest) = (0.0f64, f64::INFINITY);
    for t in 0..10 {
        let a = c.fault.matrix(random_orthogonal(5, c.stream(1700 + t)));
        let b = random_orthogonal(5, c.stream(1800 + t));
        orth = orth.max(orthonormality_error(&a));
        closest = closest.min((a - b).norm());
    }
    check(
        orth <= 1e-10 && closest > 0.1,
        format!("‖QᵀQ − I‖ = {orth:.2e} (1e-10), min distance between seeds {closest:.3} (> 0.1)"),
    )
}

fn small_spec(alignment: AlignmentCase, n: usize, seed: u64) -> TrialSpec {
    let mut s = TrialSpec::standard(SpectrumKind::FastDecay, alignment, n, seed);
    s.spectrum.p = 5;
    s.latent_dim = 2;
    s.alpha = vec![1.0; 2];
    s.k_learn = 2;
    s.n_test = 2;
    s
}

/// Entrywise sample covariance of 1e5 draws against `V diag(λ) Vᵀ`, with
/// standard error `sqrt((Σ_ii Σ_jj + Σ_ij²)/n)`.
fn empirical_covariance(c: &Ctx) -> Outcome {
    let t = lib(generate_trial(&small_spec(AlignmentCase::WellAligned, 100_000, c.stream(1900))))?;
    let lam = DMatrix::from_diagonal(&DVector::from_vec(t.eigenvalues.clone()));
    let sigma = &t.eigenvectors * lam * t.eigenvectors.transpose();
    let n = t.train.n() as f64;
    let emp = c.fault.matrix(t.train.x().tr_mul(t.train.x()) / n);
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        for j in i..5 {
            let se = ((sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)].powi(2)) / n).sqrt();
            worst = worst.max((emp[(i, j)] - sigma[(i, j)]).abs() / se);
        }
    }
    check(worst <= 4.0, format!("max deviation {worst:.2} standard errors (≤ 4)"))
}

/// Regressing y on the true leading eigenvectors leaves only noise.
fn well_aligned_noise_floor(c: &Ctx) -> Outcome {
    let mut spec = small_spec(AlignmentCase::WellAligned, 20_000, c.stream(2000));
    spec.noise_sd = 1.0;
    let t = lib(generate_trial(&spec))?;
    let z = t.train.x() * t.eigenvectors.columns(0, 2);
    let model = lib(ols_fit(&z, t.train.y()))?;
    let resid = c.fault.value(lib(mse(&lib(model.predict(&z))?, t.train.y()))?);
    check((resid - 1.0).abs() <= 0.05, format!("residual MSE {resid:.4} vs σ² = 1 (±5%)"))
}

const ORACLES: [Oracle; 20] = [
    ("eigen_reconstruction", eigen_reconstruction),
    ("qr_projector_identity", qr_projector_identity),
    ("stiefel_finite_difference", stiefel_finite_difference),
    ("centering_round_trip", centering_round_trip),
    ("bair_informative_column", bair_informative_column),
    ("pv_decorrelation", pv_decorrelation),
    ("pcps_exhaustive_scan", pcps_exhaustive),
    ("sphere_grid", sphere_grid),
    ("barshan_large_gamma", barshan_large_gamma),
    ("barshan_rank_one", barshan_rank_one),
    ("lspca_noiseless", lspca_noiseless),
    ("lspca_descent", lspca_descent),
    ("whitened_equivalence", whitened_equivalence),
    ("sppca_monotone", sppca_monotone),
    ("sppca_recovery", sppca_recovery),
    ("ols_normal_equations", ols_normal_equations),
    ("orthogonal_seeds", orthogonal_seeds),
    ("empirical_covariance", empirical_covariance),
    ("well_aligned_noise_floor", well_aligned_noise_floor),
    ("pls_first_direction", pls_first_direction),
];

/// PLS's first direction is `Xᵀy/‖Xᵀy‖`.
fn pls_first_direction(c: &Ctx) -> Outcome {
    let mut worst: f64 = 0.0;
    for t in 0..10 {
        let d = random_dataset(30, 5, &mut c.rng(2100 + t))?;
        let u = c.fault.direction(basis(&lib(fit_pls(&d, 2))?)?.column(0).clone_owned());
        let closed = d.x().tr_mul(d.y()).normalize();
        worst = worst.max(1.0 - u.dot(&closed).abs());
    }
    check(worst <= 1e-12, format!("max 1 − |cos| to Xᵀy = {worst:.2e} (1e-12)"))
}

/// Runs every oracle; a panic inside one counts as its failure.
pub fn run_oracles(opts: OracleOptions) -> Vec<OracleResult> {
    let ctx = Ctx {
        seed: opts.seed,
        fault: opts.fault,
    };
    ORACLES
        .iter()
        .map(|&(name, f)| {
            let (passed, detail) = match catch_unwind(AssertUnwindSafe(|| f(&ctx))) {
                Ok(Ok(d)) => (true, d),
                Ok(Err(d)) => (false, d),
                Err(_) => (false, "panicked".to_string()),
            };
            OracleResult { name, passed, detail }
        })
        .collect()
}
