mod common;

use sdr_core::bench::{
    gamma_sweep, run_benchmark, BenchConfig, BenchMethod, BenchSetting, Pipeline, SweepConfig, REPORT_CSV_HEADER,
};
use sdr_core::intrinsic::Gamma;
use sdr_core::regression::{mse, ols_fit};
use sdr_core::synthetic::{generate_trial, random_orthogonal, AlignmentCase, SpectrumKind, TrialSpec};
use sdr_core::{DMatrix, DVector};

fn small_spec(kind: SpectrumKind, alignment: AlignmentCase, n: usize, seed: u64) -> TrialSpec {
    let mut s = TrialSpec::standard(kind, alignment, n, seed);
    s.n_test = 500;
    s
}

#[test]
fn orthogonal_contract_and_seed_sensitivity() {
    for p in [1, 2, 5, 20] {
        let q = random_orthogonal(p, 42);
        assert!((q.tr_mul(&q) - DMatrix::<f64>::identity(p, p)).norm() <= 1e-10);
        assert_eq!(q, random_orthogonal(p, 42));
    }
    for seed in 0..10 {
        let a = random_orthogonal(5, seed);
        let b = random_orthogonal(5, seed + 1000);
        assert!((a - b).norm() > 0.1);
    }
}

#[test]
fn noiseless_true_beta_fits_exactly() {
    let mut spec = small_spec(SpectrumKind::FastDecay, AlignmentCase::Partial, 150, 3);
    spec.noise_sd = 0.0;
    let t = generate_trial(&spec).unwrap();
    assert!(mse(&(t.train.x() * &t.beta), t.train.y()).unwrap() <= 1e-20);
    assert!(mse(&(t.test.x() * &t.beta), t.test.y()).unwrap() <= 1e-20);
}

/// Entrywise sample covariance of 1e5 draws lies within 3 standard errors
/// of Σ = V diag(λ) Vᵀ (SE of a Gaussian product moment:
/// sqrt((Σ_ii Σ_jj + Σ_ij²)/n)); a 0.5% allowance covers the expected
/// 3-sigma exceedances among the P(P+1)/2 entries.
#[test]
fn empirical_covariance_matches() {
    let mut spec = TrialSpec::standard(SpectrumKind::FastDecay, AlignmentCase::WellAligned, 100_000, 9);
    spec.spectrum.p = 12;
    spec.alpha = vec![1.0; 2];
    spec.latent_dim = 2;
    spec.k_learn = 2;
    spec.n_test = 2;
    let t = generate_trial(&spec).unwrap();
    let lam = DMatrix::from_diagonal(&DVector::from_vec(t.eigenvalues.clone()));
    let sigma = &t.eigenvectors * lam * t.eigenvectors.transpose();
    let n = t.train.n() as f64;
    let x = t.train.x();
    let emp = x.tr_mul(x) / n;
    let p = 12;
    let mut outside = 0;
    let mut total = 0;
    for i in 0..p {
        for j in i..p {
            let se = ((sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)].powi(2)) / n).sqrt();
            total += 1;
            if (emp[(i, j)] - sigma[(i, j)]).abs() > 3.0 * se {
                outside += 1;
            }
            assert!((emp[(i, j)] - sigma[(i, j)]).abs() <= 5.0 * se, "({i},{j})");
        }
    }
    assert!(outside as f64 <= 0.005 * total as f64 + 1.0, "{outside}/{total}");
}

#[test]
fn well_aligned_top_eigenvectors_leave_only_noise() {
    let mut spec = small_spec(SpectrumKind::SlowDecay, AlignmentCase::WellAligned, 20_000, 4);
    spec.noise_sd = 1.0;
    let t = generate_trial(&spec).unwrap();
    let v10 = t.eigenvectors.columns(0, 10).clone_owned();
    let z = t.train.x() * &v10;
    let model = ols_fit(&z, t.train.y()).unwrap();
    let resid = mse(&model.predict(&z).unwrap(), t.train.y()).unwrap();
    assert!((resid - 1.0).abs() <= 0.05, "{resid}");
}

#[test]
fn partial_random_directions_are_orthogonal() {
    for seed in 0..5 {
        let t = generate_trial(&small_spec(SpectrumKind::FastDecay, AlignmentCase::Partial, 150, seed)).unwrap();
        let eig = t.phi.columns(0, 5);
        let rand = t.phi.columns(5, 5);
        assert!(eig.tr_mul(&rand).amax() <= 1e-10);
        assert!((rand.tr_mul(&rand) - DMatrix::<f64>::identity(5, 5)).amax() <= 1e-10);
    }
}

fn setting(kind: SpectrumKind, alignment: AlignmentCase, n: usize) -> BenchSetting {
    BenchSetting {
        spectrum: kind,
        alignment,
        n_train: n,
    }
}

/// Without noise the PCA pipeline's error is exactly the part of `Xβ` the
/// learned span misses. Oracle: an independent eigensolve and least-squares
/// fit on the training data, evaluated on the test data, and the population
/// form `(β − Ua)ᵀΣ(β − Ua)`.
#[test]
fn noiseless_pca_error_is_out_of_span_residual() {
    let mut cfg = BenchConfig::new(
        vec![setting(SpectrumKind::FastDecay, AlignmentCase::WellAligned, 1500)],
        vec![BenchMethod::Pca],
        1,
        5,
    );
    cfg.noise_sd = Some(0.0);
    cfg.n_test = 4000;
    let r = run_benchmark(&cfg).unwrap();
    let reported = r.settings[0].mean_test(BenchMethod::Pca).unwrap();

    let mut spec = cfg.trial_spec(&cfg.settings[0], 0);
    spec.noise_sd = 0.0;
    let t = generate_trial(&spec).unwrap();
    let (x, y) = (t.train.x(), t.train.y());
    let means = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.mean()));
    let xc = x - DVector::from_element(x.nrows(), 1.0) * means.transpose();
    let eig = nalgebra::SymmetricEigen::new(xc.tr_mul(&xc));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let u = eig.eigenvectors.select_columns(&order[..15]);
    let z = &xc * &u;
    let a = z.clone().svd(true, true).solve(&y.add_scalar(-y.mean()), 1e-14).unwrap();
    let xt = t.test.x() - DVector::from_element(t.test.n(), 1.0) * means.transpose();
    let pred = (&xt * &u * &a).add_scalar(y.mean());
    let oracle = (pred - t.test.y()).norm_squared() / t.test.n() as f64;
    assert!((reported - oracle).abs() <= 1e-9 * oracle, "{reported} vs {oracle}");

    let lam = DMatrix::from_diagonal(&DVector::from_vec(t.eigenvalues.clone()));
    let sigma = &t.eigenvectors * lam * t.eigenvectors.transpose();
    let e = &t.beta - &u * &a;
    let population = (e.transpose() * sigma * &e)[(0, 0)];
    assert!((reported - population).abs() <= 0.1 * population, "{reported} vs {population}");
    assert!(reported < 0.05 * t.beta.norm_squared());
}

#[test]
fn reports_are_deterministic_and_shaped() {
    let mut cfg = BenchConfig::new(
        vec![
            setting(SpectrumKind::FastDecay, AlignmentCase::Misaligned, 150),
            setting(SpectrumKind::SlowDecay, AlignmentCase::Partial, 150),
        ],
        vec![BenchMethod::Ols, BenchMethod::Pca, BenchMethod::Pls, BenchMethod::Pv],
        2,
        11,
    );
    cfg.n_test = 300;
    cfg.method.gamma_grid = vec![Gamma::Finite(0.0), Gamma::Finite(1.0), Gamma::Infinite];
    let a = run_benchmark(&cfg).unwrap();
    let b = run_benchmark(&cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    let csv = a.to_csv().unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), REPORT_CSV_HEADER.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    assert!(rows[0].starts_with("fast,mis,150,OLS,2,0,"));
    assert!(rows[7].starts_with("slow,partial,150,PV,2,0,"));
    for s in &a.settings {
        assert_eq!(s.records.len(), 8);
        for m in &s.summaries {
            assert_eq!(m.trials_ok + m.failures, 2);
            assert!(m.mean_test_mse.unwrap() >= 0.0);
        }
        let pls_gamma = s
            .records
            .iter()
            .filter(|r| r.method == BenchMethod::Pls)
            .all(|r| r.outcome.as_ref().unwrap().gamma.is_some());
        assert!(pls_gamma);
    }
}

/// A method that cannot run is recorded per trial, not dropped.
#[test]
fn failures_are_counted() {
    let mut cfg = BenchConfig::new(
        vec![setting(SpectrumKind::FastDecay, AlignmentCase::WellAligned, 150)],
        vec![BenchMethod::Pca, BenchMethod::Lspca],
        2,
        1,
    );
    cfg.n_test = 100;
    cfg.method.gamma_grid = vec![Gamma::Finite(f64::MAX)];
    cfg.method.k = 15;
    let r = run_benchmark(&cfg).unwrap();
    let s = r.settings[0].summary(BenchMethod::Lspca).unwrap();
    let p = r.settings[0].summary(BenchMethod::Pca).unwrap();
    assert_eq!(p.failures, 0);
    assert_eq!(s.failures + s.trials_ok, 2);
    if s.failures > 0 {
        assert!(r.settings[0].records.iter().any(|rec| rec.error.is_some()));
    }
}

#[test]
fn train_error_below_test_error_at_small_n() {
    let mut cfg = BenchConfig::new(
        vec![setting(SpectrumKind::FastDecay, AlignmentCase::Partial, 150)],
        BenchMethod::ALL.to_vec(),
        20,
        2024,
    );
    cfg.n_test = 1000;
    cfg.method.gamma_grid = vec![Gamma::Finite(0.0), Gamma::Finite(0.1), Gamma::Finite(10.0), Gamma::Infinite];
    let r = run_benchmark(&cfg).unwrap();
    for m in &r.settings[0].summaries {
        assert_eq!(m.failures, 0, "{}", m.method);
        assert!(m.mean_train_mse.unwrap() <= m.mean_test_mse.unwrap(), "{}", m.method);
    }
}

#[test]
fn sweep_is_paired_and_deterministic() {
    let mut cfg = SweepConfig::new(2, 3);
    cfg.n_test = 300;
    cfg.grid = Gamma::log_grid(1e-2, 1e2, 3);
    let a = gamma_sweep(&cfg).unwrap();
    let b = gamma_sweep(&cfg).unwrap();
    assert_eq!(a.curves_csv().unwrap(), b.curves_csv().unwrap());
    assert_eq!(a.curves.len(), 9);
    assert!(a.curves.iter().all(|c| c.points.len() == 3));
    assert_eq!(a.references.len(), 6);
    // the sweep's data are the benchmark's data for the same seed, so the
    // γ curve point reproduces a direct pipeline fit on the same trial
    let bench = BenchConfig::new(
        vec![setting(SpectrumKind::SlowDecay, AlignmentCase::WellAligned, 150)],
        vec![BenchMethod::Pca],
        2,
        3,
    );
    let mut direct = 0.0;
    for t in 0..2 {
        let mut spec = bench.trial_spec(&bench.settings[0], t);
        spec.n_test = 300;
        let trial = generate_trial(&spec).unwrap();
        let p = Pipeline::fit(BenchMethod::Pls, &trial.train, Some(Gamma::Finite(1.0)), &cfg.method).unwrap();
        direct += p.mse(&trial.test).unwrap() / 2.0;
    }
    let curve = a.curve(AlignmentCase::WellAligned, BenchMethod::Pls).unwrap();
    assert!((curve.points[1].mean_test_mse.unwrap() - direct).abs() <= 1e-12 * direct);
}
